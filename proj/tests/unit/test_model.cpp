#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "crystclr/augment.hpp"
#include "crystclr/errors.hpp"
#include "crystclr/model.hpp"
#include "fixtures.hpp"
#include "model_oracles.hpp"

using namespace crystclr;

namespace {

GraphConfig small_graph() {
  GraphConfig g;
  g.cutoff = 6.0;
  g.max_neighbors = 6;
  g.gauss_max = 6.0;
  g.gauss_count = 10;
  return g;
}

ModelConfig small_model() {
  ModelConfig m;
  m.atom_feat_dim = 6;
  m.n_conv_layers = 2;
  m.hidden_dim = 8;
  m.edge_feat_dim = 10;
  return m;
}

Batch batch_of(const std::vector<CrystalStructure>& crystals, const GraphConfig& g) {
  std::vector<CrystalGraph> graphs;
  for (const auto& s : crystals) graphs.push_back(build_graph(s, g));
  Batch b = collate(graphs);
  std::vector<CompositionVector> comps;
  for (const auto& s : crystals) comps.push_back(composition_vector(s));
  b.positives = positive_sets(comps);
  return b;
}

double relative_diff(const RowMatrix& a, const RowMatrix& b) {
  return (a - b).norm() / std::max(a.norm(), 1e-300);
}

}  // namespace

TEST_CASE("parameter shapes and initialisation") {
  const ModelConfig cfg;
  const auto p = ModelParams::initialize(cfg, 1);
  CHECK(p.encoder.embedding.rows() == 100);
  CHECK(p.encoder.embedding.cols() == 64);
  CHECK(p.encoder.convs.size() == 3);
  CHECK(p.encoder.convs[0].gate_w.rows() == 2 * 64 + 41);
  CHECK(p.projection.w2.cols() == 128);
  CHECK(p.infer_config() == cfg);
  CHECK(p.all_finite());
  CHECK(p.encoder.embedding.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(p.encoder.convs[1].core_w.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(2 * 64 + 41));
  CHECK(p.projection.w1.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(128));

  const auto q = ModelParams::initialize(cfg, 1);
  const auto r = ModelParams::initialize(cfg, 2);
  CHECK(p.projection.w2 == q.projection.w2);
  CHECK_FALSE(p.projection.w2 == r.projection.w2);

  std::vector<std::string> names;
  p.for_each([&](const std::string& name, const Eigen::MatrixXd&) { names.push_back(name); });
  CHECK(names.size() == 1 + 3 * 4 + 2 + 4);
  CHECK(names.front() == "encoder/embedding");
  CHECK(names[1] == "encoder/conv0/gate_w");
  CHECK(names.back() == "projection/b2");
}

TEST_CASE("encode matches a direct evaluation") {
  const auto g = small_graph();
  const auto cfg = small_model();
  const auto params = ModelParams::initialize(cfg, 4);
  const auto fixtures = testing::fixture_set();
  for (const auto& s : fixtures) {
    const CrystalGraph graph = build_graph(s, g);
    const Batch b = collate(std::span<const CrystalGraph>(&graph, 1));
    const RowMatrix h = encode(b, params.encoder, cfg);
    REQUIRE(h.rows() == 1);
    REQUIRE(h.cols() == cfg.hidden_dim);
    const auto direct = oracle::encode_direct(graph, params.encoder);
    for (int k = 0; k < cfg.hidden_dim; ++k) CHECK(std::abs(h(0, k) - direct[0][static_cast<std::size_t>(k)]) < 1e-10);

    const RowMatrix z = project(h, params.projection);
    REQUIRE(z.cols() == kProjectionDim);
    const auto zd = oracle::project_direct(direct[0], params.projection);
    for (int k = 0; k < kProjectionDim; ++k) CHECK(std::abs(z(0, k) - zd[static_cast<std::size_t>(k)]) < 1e-12);
  }
}

TEST_CASE("project edge cases") {
  const auto cfg = small_model();
  auto params = ModelParams::zeros(cfg);
  RowMatrix h = RowMatrix::Random(3, cfg.hidden_dim);
  CHECK(project(h, params.projection).isZero(0.0));
  params.projection.w1.setIdentity();
  CHECK(project(h, params.projection).isZero(0.0));
  CHECK_THROWS_AS(project(RowMatrix::Ones(2, cfg.hidden_dim + 1), params.projection), ShapeError);
}

TEST_CASE("encoder invariances") {
  const auto g = small_graph();
  const auto cfg = small_model();
  const auto params = ModelParams::initialize(cfg, 8);
  const auto fixtures = testing::fixture_set(20);

  std::vector<CrystalGraph> graphs;
  RowMatrix separate(static_cast<Eigen::Index>(fixtures.size()), cfg.hidden_dim);
  for (std::size_t k = 0; k < fixtures.size(); ++k) {
    const auto& s = fixtures[k];
    graphs.push_back(build_graph(s, g));
    const RowMatrix h = encode(collate(std::span<const CrystalGraph>(&graphs.back(), 1)), params.encoder, cfg);
    separate.row(static_cast<Eigen::Index>(k)) = h.row(0);

    auto sites = s.sites();
    std::reverse(sites.begin(), sites.end());
    const CrystalStructure permuted(s.lattice(), sites, s.id());
    const CrystalGraph pg = build_graph(permuted, g);
    const RowMatrix hp = encode(collate(std::span<const CrystalGraph>(&pg, 1)), params.encoder, cfg);
    CHECK(relative_diff(h, hp) <= 1e-10);

    const CrystalGraph sg = build_graph(make_supercell(s, 3), g);
    const RowMatrix hs = encode(collate(std::span<const CrystalGraph>(&sg, 1)), params.encoder, cfg);
    CHECK(relative_diff(h, hs) <= 1e-6);
  }
  const RowMatrix batched = encode(collate(graphs), params.encoder, cfg);
  CHECK(relative_diff(separate, batched) <= 1e-10);
}

TEST_CASE("collate offsets") {
  const auto g = small_graph();
  std::vector<CrystalGraph> graphs = {build_graph(testing::nacl(), g), build_graph(testing::elemental_si(), g)};
  const Batch b = collate(graphs);
  CHECK(b.num_graphs() == 2);
  CHECK(b.node_offset == std::vector<int>{0, 8, 10});
  CHECK(b.num_edges() == graphs[0].num_edges() + graphs[1].num_edges());
  for (int e = graphs[0].num_edges(); e < b.num_edges(); ++e) {
    CHECK(b.edge_src[static_cast<std::size_t>(e)] >= 8);
    CHECK(b.edge_dst[static_cast<std::size_t>(e)] >= 8);
  }
  CHECK_THROWS_AS(collate(std::span<const CrystalGraph>()), ShapeError);
}

TEST_CASE("loss_and_grads") {
  const auto g = small_graph();
  const auto cfg = small_model();
  const auto params = ModelParams::initialize(cfg, 12);
  const auto si = testing::elemental_si();
  const auto tri = testing::triclinic();
  RngStream rng(6);
  const Batch batch = batch_of({si, perturb_structure(si, 0.5, rng), tri, perturb_structure(tri, 0.5, rng)}, g);

  LossConfig clr;
  const auto out = loss_and_grads(batch, params, cfg, clr);
  const RowMatrix z = project(encode(batch, params.encoder, cfg), params.projection);
  CHECK(std::abs(out.loss.total - nt_xent(z, clr.tau)) < 1e-12);

  for (bool use_cs : {false, true}) {
    LossConfig lc;
    lc.use_cs = use_cs;
    for (const auto& group : oracle::gradient_check(batch, params, cfg, lc)) {
      INFO(group.name);
      CHECK(group.relative_error <= 1e-4);
    }
  }

  const auto zero = loss_and_grads(batch, ModelParams::zeros(cfg), cfg, clr);
  CHECK(std::isfinite(zero.loss.total));
  CHECK(zero.grads.all_finite());

  const Batch one_pair = batch_of({si, si}, g);
  CHECK_THROWS_AS(loss_and_grads(one_pair, params, cfg, clr), ShapeError);
}

TEST_CASE("adam") {
  const auto cfg = small_model();
  auto params = ModelParams::initialize(cfg, 3);
  const auto start = params;
  auto ones = ModelParams::zeros(cfg);
  ones.for_each([](const std::string&, Eigen::MatrixXd& a) { a.setOnes(); });
  AdamState state = AdamState::fresh(params, AdamHyper{});
  adam_step(params, ones, state);
  CHECK(state.step == 1);
  const double expected = 1e-4 / (1 + 1e-8);
  CHECK(((start.projection.w2 - params.projection.w2).array() - expected).abs().maxCoeff() < 1e-15);

  auto zeros = ModelParams::zeros(cfg);
  const auto before = params;
  const double m_before = state.m.projection.w2(0, 0);
  adam_step(params, zeros, state);
  CHECK(state.m.projection.w2(0, 0) == doctest::Approx(0.9 * m_before));
  // Momentum keeps moving the weights even with a zero gradient.
  CHECK_FALSE(params.projection.w2 == before.projection.w2);

  AdamState fresh = AdamState::fresh(params, AdamHyper{});
  const auto frozen = params;
  adam_step(params, zeros, fresh);
  CHECK(params.projection.w2 == frozen.projection.w2);

  auto run = [&](std::uint64_t seed) {
    auto p = ModelParams::initialize(cfg, seed);
    AdamState s = AdamState::fresh(p, AdamHyper{});
    const auto batch = batch_of({testing::elemental_si(), testing::elemental_si(), testing::triclinic(),
                                 testing::triclinic()},
                                small_graph());
    for (int step = 0; step < 10; ++step) adam_step(p, loss_and_grads(batch, p, cfg, LossConfig{}).grads, s);
    return p;
  };
  const auto a = run(5);
  const auto b = run(5);
  std::vector<Eigen::MatrixXd> av, bv;
  a.for_each([&](const std::string&, const Eigen::MatrixXd& m) { av.push_back(m); });
  b.for_each([&](const std::string&, const Eigen::MatrixXd& m) { bv.push_back(m); });
  CHECK(av == bv);

  auto wrong = ModelParams::zeros(small_model());
  wrong.projection.w2.resize(3, 3);
  CHECK_THROWS_AS(adam_step(params, wrong, state), ShapeError);
}
