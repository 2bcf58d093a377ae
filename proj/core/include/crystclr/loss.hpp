#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "crystclr/structure.hpp"

namespace crystclr {

struct LossConfig {
  double tau = 0.1;
  bool use_cs = false;
  /// Weight of the composition-similarity term; pinned to 1 (equal weighting).
  double cs_weight = 1.0;

  void validate() const;
  bool operator==(const LossConfig&) const = default;
};

/// P(i) for every batch position: the positions (other than i) whose
/// composition shares at least one element with i's.
using PositiveSets = std::vector<std::vector<int>>;

/// u.v / (|u| |v|). Throws NumericalError on a zero-norm input.
double cosine_sim(const Eigen::Ref<const Eigen::VectorXd>& u,
                  const Eigen::Ref<const Eigen::VectorXd>& v);

/// Batch positions are laid out as adjacent pairs: rows 2k and 2k+1 are the
/// two views of crystal k.
inline int partner_of(int position) { return position ^ 1; }

/// NT-Xent averaged over all 2N anchors (multiply by 2N for the summed form).
/// z has 2N rows; throws NumericalError on a zero-norm row.
double nt_xent(const Eigen::Ref<const Eigen::MatrixXd>& z, double tau);

/// comps holds one composition per batch position (views share their crystal's).
PositiveSets positive_sets(std::span<const CompositionVector> comps);

/// Composition-similarity loss: per anchor, -log of the mean softmax weight
/// over P(i), averaged over anchors with a non-empty P(i). Throws
/// NumericalError if every P(i) is empty.
double cs_loss(const Eigen::Ref<const Eigen::MatrixXd>& z, const PositiveSets& positives,
               double tau);

/// nt_xent, plus cs_weight * cs_loss when cfg.use_cs.
double combined_loss(const Eigen::Ref<const Eigen::MatrixXd>& z, const PositiveSets& positives,
                     const LossConfig& cfg);

struct LossTerms {
  double total = 0.0;
  double nt_xent = 0.0;
  double cs = 0.0;
  int cs_skipped = 0;  // anchors with an empty P(i)
  Eigen::MatrixXd grad;  // d total / d z, same shape as z
};

/// combined_loss together with its gradient with respect to z. Row norms are
/// clamped below at kNormFloor so all-zero projections still yield finite
/// values; above the floor the value equals combined_loss exactly.
LossTerms combined_loss_and_grad(const Eigen::Ref<const Eigen::MatrixXd>& z,
                                 const PositiveSets& positives, const LossConfig& cfg);

inline constexpr double kNormFloor = 1e-12;

}  // namespace crystclr
