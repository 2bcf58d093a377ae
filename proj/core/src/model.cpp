#include "crystclr/model.hpp"

#include <cmath>
#include <string>

#include "crystclr/errors.hpp"
#include "crystclr/rng.hpp"

namespace crystclr {

void ModelConfig::validate() const {
  if (atom_feat_dim < 1 || n_conv_layers < 1 || hidden_dim < 1 || edge_feat_dim < 1) {
    throw InvariantError("model dimensions must all be >= 1");
  }
  if (projection_dim != kProjectionDim) {
    throw InvariantError("model.projection_dim is fixed at 128");
  }
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

RowMatrix apply(const RowMatrix& m, double (*f)(double)) { return m.unaryExpr(f); }

void expect_shape(const MatrixXd& m, Index rows, Index cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(name + " has shape " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

}  // namespace

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
  cfg.validate();
  const Index f = cfg.atom_feat_dim;
  const Index e = cfg.edge_feat_dim;
  const Index h = cfg.hidden_dim;
  ModelParams p;
  p.encoder.embedding = MatrixXd::Zero(kMaxAtomicNumber, f);
  for (int l = 0; l < cfg.n_conv_layers; ++l) {
    p.encoder.convs.push_back({MatrixXd::Zero(2 * f + e, f), MatrixXd::Zero(1, f),
                               MatrixXd::Zero(2 * f + e, f), MatrixXd::Zero(1, f)});
  }
  p.encoder.out_w = MatrixXd::Zero(f, h);
  p.encoder.out_b = MatrixXd::Zero(1, h);
  p.projection.w1 = MatrixXd::Zero(h, h);
  p.projection.b1 = MatrixXd::Zero(1, h);
  p.projection.w2 = MatrixXd::Zero(h, cfg.projection_dim);
  p.projection.b2 = MatrixXd::Zero(1, cfg.projection_dim);
  return p;
}

ModelParams ModelParams::initialize(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = zeros(cfg);
  RngStream rng = RngStream::derive(seed, {0x1417});
  auto fill = [&rng](MatrixXd& m, double bound) {
    // Row-major fill order so the result does not depend on Eigen's storage.
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
    }
  };
  fill(p.encoder.embedding, 1.0);
  for (ConvLayer& conv : p.encoder.convs) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(conv.gate_w.rows()));
    fill(conv.gate_w, bound);
    fill(conv.gate_b, bound);
    fill(conv.core_w, bound);
    fill(conv.core_b, bound);
  }
  const double out_bound = 1.0 / std::sqrt(static_cast<double>(p.encoder.out_w.rows()));
  fill(p.encoder.out_w, out_bound);
  fill(p.encoder.out_b, out_bound);
  const double proj_bound = 1.0 / std::sqrt(static_cast<double>(p.projection.w1.rows()));
  fill(p.projection.w1, proj_bound);
  fill(p.projection.b1, proj_bound);
  fill(p.projection.w2, proj_bound);
  fill(p.projection.b2, proj_bound);
  return p;
}

ModelConfig ModelParams::infer_config() const {
  ModelConfig cfg;
  cfg.atom_feat_dim = static_cast<int>(encoder.embedding.cols());
  cfg.n_conv_layers = static_cast<int>(encoder.convs.size());
  cfg.hidden_dim = static_cast<int>(encoder.out_w.cols());
  cfg.projection_dim = static_cast<int>(projection.w2.cols());
  if (encoder.convs.empty()) throw ShapeError("encoder has no convolution layers");
  cfg.edge_feat_dim = static_cast<int>(encoder.convs.front().gate_w.rows()) - 2 * cfg.atom_feat_dim;
  try {
    cfg.validate();
  } catch (const InvariantError& e) {
    throw ShapeError(std::string("inconsistent parameter shapes: ") + e.what());
  }
  const ModelParams reference = zeros(cfg);
  std::vector<std::pair<Index, Index>> shapes;
  reference.for_each([&](const std::string&, const MatrixXd& m) {
    shapes.emplace_back(m.rows(), m.cols());
  });
  std::size_t k = 0;
  for_each([&](const std::string& name, const MatrixXd& m) {
    expect_shape(m, shapes[k].first, shapes[k].second, name);
    ++k;
  });
  return cfg;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const MatrixXd& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each([&](const std::string&, const MatrixXd& m) { ok = ok && m.allFinite(); });
  return ok;
}

Batch collate(std::span<const CrystalGraph> graphs) {
  if (graphs.empty()) throw ShapeError("cannot collate an empty list of graphs");
  Batch batch;
  const Index width = graphs.front().edge_features.cols();
  Index total_edges = 0;
  for (const CrystalGraph& g : graphs) {
    if (g.edge_features.cols() != width) throw ShapeError("graphs disagree on edge feature width");
    total_edges += g.num_edges();
  }
  batch.edge_features.resize(total_edges, width);
  batch.node_offset.push_back(0);
  Index edge_row = 0;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const CrystalGraph& g = graphs[gi];
    const int offset = batch.node_offset.back();
    for (int z : g.node_z) {
      batch.node_z.push_back(z);
      batch.node_graph.push_back(static_cast<int>(gi));
    }
    for (int e = 0; e < g.num_edges(); ++e) {
      batch.edge_src.push_back(g.edge_src[static_cast<std::size_t>(e)] + offset);
      batch.edge_dst.push_back(g.edge_dst[static_cast<std::size_t>(e)] + offset);
    }
    batch.edge_features.middleRows(edge_row, g.num_edges()) = g.edge_features;
    edge_row += g.num_edges();
    batch.node_offset.push_back(offset + g.num_nodes());
  }
  return batch;
}

namespace {

struct LayerCache {
  RowMatrix input;     // m x (2F + E)
  RowMatrix gate_pre;  // m x F
  RowMatrix core_pre;  // m x F
};

struct EncoderCache {
  std::vector<LayerCache> layers;
  RowMatrix pooled;  // B x F
};

void check_batch(const Batch& batch, const EncoderParams& enc, const ModelConfig& cfg) {
  cfg.validate();
  if (batch.num_graphs() < 1) throw ShapeError("batch holds no graphs");
  if (batch.edge_features.cols() != cfg.edge_feat_dim) {
    throw ShapeError("batch edge features have width " +
                     std::to_string(batch.edge_features.cols()) + ", model expects " +
                     std::to_string(cfg.edge_feat_dim));
  }
  const int n = batch.num_nodes();
  for (std::size_t e = 0; e < batch.edge_src.size(); ++e) {
    if (batch.edge_src[e] < 0 || batch.edge_src[e] >= n || batch.edge_dst[e] < 0 ||
        batch.edge_dst[e] >= n) {
      throw ShapeError("edge " + std::to_string(e) + " references a node out of range");
    }
  }
  for (int z : batch.node_z) {
    if (z < 1 || z > kMaxAtomicNumber) throw ShapeError("node atomic number out of range");
  }
  const Index f = cfg.atom_feat_dim;
  expect_shape(enc.embedding, kMaxAtomicNumber, f, "encoder/embedding");
  if (static_cast<int>(enc.convs.size()) != cfg.n_conv_layers) {
    throw ShapeError("encoder has " + std::to_string(enc.convs.size()) +
                     " convolution layers, config expects " + std::to_string(cfg.n_conv_layers));
  }
  for (std::size_t l = 0; l < enc.convs.size(); ++l) {
    const std::string prefix = "encoder/conv" + std::to_string(l) + "/";
    expect_shape(enc.convs[l].gate_w, 2 * f + cfg.edge_feat_dim, f, prefix + "gate_w");
    expect_shape(enc.convs[l].gate_b, 1, f, prefix + "gate_b");
    expect_shape(enc.convs[l].core_w, 2 * f + cfg.edge_feat_dim, f, prefix + "core_w");
    expect_shape(enc.convs[l].core_b, 1, f, prefix + "core_b");
  }
  expect_shape(enc.out_w, f, cfg.hidden_dim, "encoder/out_w");
  expect_shape(enc.out_b, 1, cfg.hidden_dim, "encoder/out_b");
}

RowMatrix encode_impl(const Batch& batch, const EncoderParams& enc, const ModelConfig& cfg,
                      EncoderCache* cache) {
  check_batch(batch, enc, cfg);
  const Index f = cfg.atom_feat_dim;
  const Index n = batch.num_nodes();
  const Index m = batch.num_edges();

  RowMatrix x(n, f);
  for (Index i = 0; i < n; ++i) x.row(i) = enc.embedding.row(batch.node_z[static_cast<std::size_t>(i)] - 1);

  for (const ConvLayer& conv : enc.convs) {
    LayerCache layer;
    layer.input.resize(m, 2 * f + cfg.edge_feat_dim);
    for (Index e = 0; e < m; ++e) {
      layer.input.row(e).head(f) = x.row(batch.edge_dst[static_cast<std::size_t>(e)]);
      layer.input.row(e).segment(f, f) = x.row(batch.edge_src[static_cast<std::size_t>(e)]);
    }
    layer.input.rightCols(cfg.edge_feat_dim) = batch.edge_features;
    layer.gate_pre = (layer.input * conv.gate_w).rowwise() + conv.gate_b.row(0);
    layer.core_pre = (layer.input * conv.core_w).rowwise() + conv.core_b.row(0);
    const RowMatrix message =
        apply(layer.gate_pre, sigmoid).cwiseProduct(apply(layer.core_pre, softplus));
    for (Index e = 0; e < m; ++e) x.row(batch.edge_dst[static_cast<std::size_t>(e)]) += message.row(e);
    if (cache) cache->layers.push_back(std::move(layer));
  }

  const int graphs = batch.num_graphs();
  RowMatrix pooled = RowMatrix::Zero(graphs, f);
  for (int g = 0; g < graphs; ++g) {
    const int begin = batch.node_offset[static_cast<std::size_t>(g)];
    const int end = batch.node_offset[static_cast<std::size_t>(g) + 1];
    if (end <= begin) throw ShapeError("graph " + std::to_string(g) + " has no nodes");
    pooled.row(g) = x.middleRows(begin, end - begin).colwise().sum() / static_cast<double>(end - begin);
  }
  RowMatrix h = (pooled * enc.out_w).rowwise() + enc.out_b.row(0);
  if (cache) cache->pooled = std::move(pooled);
  return h;
}

void check_projection(const ProjectionParams& proj, Index hidden) {
  expect_shape(proj.w1, hidden, hidden, "projection/w1");
  expect_shape(proj.b1, 1, hidden, "projection/b1");
  expect_shape(proj.w2, hidden, kProjectionDim, "projection/w2");
  expect_shape(proj.b2, 1, kProjectionDim, "projection/b2");
}

}  // namespace

RowMatrix encode(const Batch& batch, const EncoderParams& enc, const ModelConfig& cfg) {
  return encode_impl(batch, enc, cfg, nullptr);
}

RowMatrix project(const Eigen::Ref<const RowMatrix>& h, const ProjectionParams& proj) {
  check_projection(proj, h.cols());
  const RowMatrix hidden = apply((h * proj.w1).rowwise() + proj.b1.row(0), softplus);
  return (hidden * proj.w2).rowwise() + proj.b2.row(0);
}

LossAndGrads loss_and_grads(const Batch& batch, const ModelParams& params, const ModelConfig& cfg,
                            const LossConfig& loss_cfg) {
  loss_cfg.validate();
  const int graphs = batch.num_graphs();
  if (graphs % 2 != 0) throw ShapeError("training batch must hold whole positive pairs");
  if (graphs / 2 < 2) {
    throw ShapeError("contrastive training needs at least 2 pairs per batch (got " +
                     std::to_string(graphs / 2) + ")");
  }
  if (loss_cfg.use_cs && static_cast<int>(batch.positives.size()) != graphs) {
    throw ShapeError("composition-similarity loss needs positive sets for every batch position");
  }
  check_projection(params.projection, cfg.hidden_dim);

  EncoderCache cache;
  const RowMatrix h = encode_impl(batch, params.encoder, cfg, &cache);
  const RowMatrix a1 = (h * params.projection.w1).rowwise() + params.projection.b1.row(0);
  const RowMatrix s1 = apply(a1, softplus);
  const RowMatrix z = (s1 * params.projection.w2).rowwise() + params.projection.b2.row(0);

  LossAndGrads out{combined_loss_and_grad(z, batch.positives, loss_cfg), ModelParams::zeros(cfg)};
  ModelParams& g = out.grads;
  const RowMatrix dz = out.loss.grad;

  // Projection head.
  g.projection.w2 = s1.transpose() * dz;
  g.projection.b2 = dz.colwise().sum();
  const RowMatrix da1 = (dz * params.projection.w2.transpose()).cwiseProduct(apply(a1, sigmoid));
  g.projection.w1 = h.transpose() * da1;
  g.projection.b1 = da1.colwise().sum();
  const RowMatrix dh = da1 * params.projection.w1.transpose();

  // Pooling and readout.
  const EncoderParams& enc = params.encoder;
  g.encoder.out_w = cache.pooled.transpose() * dh;
  g.encoder.out_b = dh.colwise().sum();
  const RowMatrix dpooled = dh * enc.out_w.transpose();
  const Index f = cfg.atom_feat_dim;
  const Index n = batch.num_nodes();
  RowMatrix dx(n, f);
  for (int gi = 0; gi < graphs; ++gi) {
    const int begin = batch.node_offset[static_cast<std::size_t>(gi)];
    const int end = batch.node_offset[static_cast<std::size_t>(gi) + 1];
    const RowMatrix share = dpooled.row(gi) / static_cast<double>(end - begin);
    for (int i = begin; i < end; ++i) dx.row(i) = share;
  }

  // Convolutions, last to first. x_out = x_in + scatter_dst(sigmoid(G) * softplus(C)).
  const Index m = batch.num_edges();
  for (int l = cfg.n_conv_layers - 1; l >= 0; --l) {
    const LayerCache& layer = cache.layers[static_cast<std::size_t>(l)];
    const ConvLayer& conv = enc.convs[static_cast<std::size_t>(l)];
    RowMatrix dmessage(m, f);
    for (Index e = 0; e < m; ++e) dmessage.row(e) = dx.row(batch.edge_dst[static_cast<std::size_t>(e)]);
    const RowMatrix gate = apply(layer.gate_pre, sigmoid);
    const RowMatrix core = apply(layer.core_pre, softplus);
    const RowMatrix dgate_pre =
        dmessage.cwiseProduct(core).cwiseProduct(gate.cwiseProduct((1.0 - gate.array()).matrix()));
    const RowMatrix dcore_pre = dmessage.cwiseProduct(gate).cwiseProduct(apply(layer.core_pre, sigmoid));
    ConvLayer& gconv = g.encoder.convs[static_cast<std::size_t>(l)];
    gconv.gate_w = layer.input.transpose() * dgate_pre;
    gconv.gate_b = dgate_pre.colwise().sum();
    gconv.core_w = layer.input.transpose() * dcore_pre;
    gconv.core_b = dcore_pre.colwise().sum();
    const RowMatrix dinput = dgate_pre * conv.gate_w.transpose() + dcore_pre * conv.core_w.transpose();
    for (Index e = 0; e < m; ++e) {
      dx.row(batch.edge_dst[static_cast<std::size_t>(e)]) += dinput.row(e).head(f);
      dx.row(batch.edge_src[static_cast<std::size_t>(e)]) += dinput.row(e).segment(f, f);
    }
  }

  for (Index i = 0; i < n; ++i) g.encoder.embedding.row(batch.node_z[static_cast<std::size_t>(i)] - 1) += dx.row(i);

  if (!g.all_finite()) throw NumericalError("non-finite gradient");
  return out;
}

AdamState AdamState::fresh(const ModelParams& like, const AdamHyper& hyper) {
  const ModelConfig cfg = like.infer_config();
  return AdamState{hyper, 0, ModelParams::zeros(cfg), ModelParams::zeros(cfg)};
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state) {
  std::vector<const MatrixXd*> g;
  grads.for_each([&](const std::string&, const MatrixXd& m) { g.push_back(&m); });
  std::vector<MatrixXd*> m1;
  state.m.for_each([&](const std::string&, MatrixXd& m) { m1.push_back(&m); });
  std::vector<MatrixXd*> m2;
  state.v.for_each([&](const std::string&, MatrixXd& m) { m2.push_back(&m); });

  std::vector<MatrixXd*> p;
  std::vector<std::string> names;
  params.for_each([&](const std::string& name, MatrixXd& m) {
    p.push_back(&m);
    names.push_back(name);
  });
  if (g.size() != p.size() || m1.size() != p.size() || m2.size() != p.size()) {
    throw ShapeError("optimizer state does not match the parameter list");
  }
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (g[k]->rows() != p[k]->rows() || g[k]->cols() != p[k]->cols() ||
        m1[k]->rows() != p[k]->rows() || m1[k]->cols() != p[k]->cols() ||
        m2[k]->rows() != p[k]->rows() || m2[k]->cols() != p[k]->cols()) {
      throw ShapeError("shape mismatch in optimizer for " + names[k]);
    }
  }

  const AdamHyper& hp = state.hyper;
  ++state.step;
  const double correction1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto grad = g[k]->array();
    auto first = m1[k]->array();
    auto second = m2[k]->array();
    first = hp.beta1 * first + (1.0 - hp.beta1) * grad;
    second = hp.beta2 * second + (1.0 - hp.beta2) * grad.square();
    p[k]->array() -= hp.lr * (first / correction1) / ((second / correction2).sqrt() + hp.eps);
  }
}

}  // namespace crystclr
