#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crystclr/dataset.hpp"
#include "crystclr/model.hpp"

namespace crystclr {

/// Learned vectors per structure id: h always, z when exported.
struct EmbeddingTable {
  std::vector<std::string> ids;
  RowMatrix h;
  std::optional<RowMatrix> z;

  std::size_t size() const { return ids.size(); }
  /// Row index of id; throws DataError if absent.
  Eigen::Index row_of(const std::string& id) const;
};

/// CSV: id,h_0,...,h_{D-1}[,z_0,...,z_127]. Values are written in shortest
/// round-trip form, so a read-back is exact.
void write_embeddings_csv(const EmbeddingTable& table, const std::string& path);
EmbeddingTable read_embeddings_csv(const std::string& path);

struct RidgeModel {
  Eigen::VectorXd coef;
  double intercept = 0.0;

  Eigen::VectorXd predict(const Eigen::Ref<const RowMatrix>& x) const;
};

/// Minimises |y - x w - b|^2 + lambda |w|^2; the intercept is not penalised.
RidgeModel fit_ridge(const Eigen::Ref<const RowMatrix>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                     double lambda);

struct ProbeResult {
  std::string property;
  double mae = 0.0;  // on the test split, in target units
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
  std::size_t n_test = 0;
  double lambda = 0.0;
  /// All training targets equal; the fit reduces to predicting that constant.
  bool degenerate_targets = false;
  RidgeModel model;
};

inline constexpr double kDefaultRidgeLambda = 1e-6;

/// Ridge regression on split.train, MAE on split.test.
ProbeResult linear_probe(const Eigen::Ref<const RowMatrix>& x, std::span<const double> targets,
                         const Split& split, double lambda = kDefaultRidgeLambda,
                         std::string property = "target");

/// Header plus one row: property,mae,n_train,n_validation,n_test,lambda
std::string probe_result_csv(const ProbeResult& result);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace crystclr
