#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crystclr/graph.hpp"
#include "crystclr/loss.hpp"

namespace crystclr {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kProjectionDim = 128;

struct ModelConfig {
  int atom_feat_dim = 64;
  int n_conv_layers = 3;
  int hidden_dim = 128;
  int projection_dim = kProjectionDim;
  /// Must equal GraphConfig::gauss_count.
  int edge_feat_dim = 41;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// Gated convolution weights. Inputs are [v_dst | v_src | u_edge] rows.
struct ConvLayer {
  Eigen::MatrixXd gate_w;  // (2F + E) x F
  Eigen::MatrixXd gate_b;  // 1 x F
  Eigen::MatrixXd core_w;  // (2F + E) x F
  Eigen::MatrixXd core_b;  // 1 x F
};

/// f(.): embedding table, convolutions, and the pooled-to-hidden affine map.
struct EncoderParams {
  Eigen::MatrixXd embedding;  // 100 x F, row Z-1
  std::vector<ConvLayer> convs;
  Eigen::MatrixXd out_w;  // F x H
  Eigen::MatrixXd out_b;  // 1 x H
};

/// g(.): H -> H (softplus) -> 128.
struct ProjectionParams {
  Eigen::MatrixXd w1;  // H x H
  Eigen::MatrixXd b1;  // 1 x H
  Eigen::MatrixXd w2;  // H x 128
  Eigen::MatrixXd b2;  // 1 x 128
};

struct ModelParams {
  EncoderParams encoder;
  ProjectionParams projection;

  /// Zero-filled parameters with the shapes cfg implies.
  static ModelParams zeros(const ModelConfig& cfg);
  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; the embedding table uses [-1, 1].
  static ModelParams initialize(const ModelConfig& cfg, std::uint64_t seed);

  /// Shapes read back from the arrays; throws ShapeError if inconsistent.
  ModelConfig infer_config() const;

  /// Visits every array with a stable name, in a fixed order.
  template <typename F>
  void for_each(F&& fn) {
    visit(*this, fn);
  }
  template <typename F>
  void for_each(F&& fn) const {
    visit(*this, fn);
  }

  std::size_t parameter_count() const;
  bool all_finite() const;

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& fn) {
    fn(std::string("encoder/embedding"), self.encoder.embedding);
    for (std::size_t l = 0; l < self.encoder.convs.size(); ++l) {
      const std::string prefix = "encoder/conv" + std::to_string(l) + "/";
      fn(prefix + "gate_w", self.encoder.convs[l].gate_w);
      fn(prefix + "gate_b", self.encoder.convs[l].gate_b);
      fn(prefix + "core_w", self.encoder.convs[l].core_w);
      fn(prefix + "core_b", self.encoder.convs[l].core_b);
    }
    fn(std::string("encoder/out_w"), self.encoder.out_w);
    fn(std::string("encoder/out_b"), self.encoder.out_b);
    fn(std::string("projection/w1"), self.projection.w1);
    fn(std::string("projection/b1"), self.projection.b1);
    fn(std::string("projection/w2"), self.projection.w2);
    fn(std::string("projection/b2"), self.projection.b2);
  }
};

/// Several crystal graphs concatenated into one disjoint graph. Graph g owns
/// nodes [node_offset[g], node_offset[g + 1]). Rows 2k and 2k+1 of the
/// encoder output are a positive pair when the batch is used for training.
struct Batch {
  std::vector<int> node_z;
  std::vector<int> node_graph;
  std::vector<int> node_offset;  // num_graphs + 1 entries
  std::vector<int> edge_src;
  std::vector<int> edge_dst;
  RowMatrix edge_features;
  /// Filled by the caller when the composition-similarity loss is used.
  PositiveSets positives;

  int num_graphs() const { return static_cast<int>(node_offset.size()) - 1; }
  int num_nodes() const { return static_cast<int>(node_z.size()); }
  int num_edges() const { return static_cast<int>(edge_src.size()); }
};

/// Throws ShapeError on an empty list or mismatched edge feature widths.
Batch collate(std::span<const CrystalGraph> graphs);

/// One h row per graph.
RowMatrix encode(const Batch& batch, const EncoderParams& enc, const ModelConfig& cfg);

/// One z row per h row.
RowMatrix project(const Eigen::Ref<const RowMatrix>& h, const ProjectionParams& proj);

struct LossAndGrads {
  LossTerms loss;
  ModelParams grads;
};

/// Forward through f, g and the contrastive loss, then the exact reverse pass.
/// Needs at least two positive pairs; throws NumericalError on a non-finite loss.
LossAndGrads loss_and_grads(const Batch& batch, const ModelParams& params, const ModelConfig& cfg,
                            const LossConfig& loss_cfg);

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool operator==(const AdamHyper&) const = default;
};

struct AdamState {
  AdamHyper hyper;
  std::int64_t step = 0;
  ModelParams m;
  ModelParams v;

  static AdamState fresh(const ModelParams& like, const AdamHyper& hyper);
};

/// Bias-corrected Adam update in place.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state);

}  // namespace crystclr
