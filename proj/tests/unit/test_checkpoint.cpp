#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "crystclr/checkpoint.hpp"
#include "crystclr/config.hpp"
#include "crystclr/errors.hpp"
#include "fixtures.hpp"

using namespace crystclr;

namespace {

ModelConfig small_model() {
  ModelConfig m;
  m.atom_feat_dim = 5;
  m.n_conv_layers = 2;
  m.hidden_dim = 7;
  m.edge_feat_dim = 41;
  return m;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("checkpoint round trip is bit-identical") {
  const auto dir = testing::scratch_dir("checkpoint");
  const std::string path = (dir / "model.cclr").string();
  const auto params = ModelParams::initialize(small_model(), 17);
  AdamState state = AdamState::fresh(params, AdamHyper{3e-4, 0.8, 0.99, 1e-7});
  state.step = 42;
  state.m.projection.w1.setConstant(0.25);
  state.v.encoder.out_b.setConstant(1.0 / 3.0);
  GraphConfig graph;
  graph.cutoff = 6.5;
  graph.gauss_width = 0.3;

  save_checkpoint(path, params, state, graph);
  const Checkpoint back = load_checkpoint(path, small_model());

  std::vector<Eigen::MatrixXd> a, b;
  params.for_each([&](const std::string&, const Eigen::MatrixXd& m) { a.push_back(m); });
  back.params.for_each([&](const std::string&, const Eigen::MatrixXd& m) { b.push_back(m); });
  CHECK(a == b);
  CHECK(back.optimizer.step == 42);
  CHECK(back.optimizer.hyper == state.hyper);
  CHECK(back.optimizer.m.projection.w1 == state.m.projection.w1);
  CHECK(back.optimizer.v.encoder.out_b == state.v.encoder.out_b);
  CHECK(back.graph == graph);

  // Saving the loaded checkpoint reproduces the file byte for byte.
  const std::string again = (dir / "again.cclr").string();
  save_checkpoint(again, back.params, back.optimizer, back.graph);
  CHECK(testing::read_file(path) == testing::read_file(again));
}

TEST_CASE("checkpoint errors") {
  const auto dir = testing::scratch_dir("checkpoint_errors");
  const std::string path = (dir / "model.cclr").string();
  const auto params = ModelParams::initialize(small_model(), 1);
  save_checkpoint(path, params, AdamState::fresh(params, AdamHyper{}), GraphConfig{});
  const std::string bytes = testing::read_file(path);

  const std::string bad_magic = (dir / "magic.cclr").string();
  std::ofstream(bad_magic, std::ios::binary) << "XCLR" << bytes.substr(4);
  CHECK(message_of([&] { load_checkpoint(bad_magic); }).find("bad checkpoint header") != std::string::npos);

  std::string future = bytes;
  future[4] = 9;
  const std::string versioned = (dir / "version.cclr").string();
  std::ofstream(versioned, std::ios::binary) << future;
  CHECK(message_of([&] { load_checkpoint(versioned); }).find("version") != std::string::npos);

  const std::string cut = (dir / "cut.cclr").string();
  std::ofstream(cut, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  CHECK(message_of([&] { load_checkpoint(cut); }).find("truncated") != std::string::npos);

  ModelConfig other = small_model();
  other.hidden_dim = 9;
  try {
    load_checkpoint(path, other);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("encoder/out_w") != std::string::npos);
  }
  CHECK_THROWS_AS(load_checkpoint((dir / "missing.cclr").string()), DataError);
}

TEST_CASE("train config parsing") {
  const TrainConfig defaults = parse_train_config("{}");
  CHECK(defaults.epochs == 5000);
  CHECK(defaults.batch_size == 512);
  CHECK(defaults.optimizer.lr == 1e-4);
  CHECK(defaults.loss.tau == 0.1);
  CHECK(defaults.augment.apply_prob == 0.5);
  CHECK(defaults.model.edge_feat_dim == defaults.graph.gauss_count);

  const TrainConfig cfg = parse_train_config(
      R"({"epochs": 3, "batch_size": 4, "seed": 9, "loss": {"tau": 0.2, "use_cs": true},
          "augment": {"supercell_enabled": true}, "graph": {"gauss_count": 20, "gauss_width": 0.5},
          "model": {"hidden_dim": 16}})");
  CHECK(cfg.epochs == 3);
  CHECK(cfg.seed == 9);
  CHECK(cfg.loss.use_cs);
  CHECK(cfg.augment.supercell_enabled);
  CHECK(cfg.graph.gauss_width == 0.5);
  CHECK(cfg.model.edge_feat_dim == 20);
  CHECK(cfg.model.hidden_dim == 16);

  // Serialization round trip.
  const TrainConfig back = parse_train_config(train_config_to_json(cfg));
  CHECK(train_config_to_json(back) == train_config_to_json(cfg));

  CHECK(message_of([] { parse_train_config(R"({"epochs": 3, "epoch": 4})"); }).find("epoch") != std::string::npos);
  CHECK(message_of([] { parse_train_config(R"({"loss": {"temperature": 1}})"); }).find("loss.temperature") !=
        std::string::npos);
  CHECK(message_of([] { parse_train_config(R"({"batch_size": "big"})"); }).find("batch_size") != std::string::npos);
  CHECK(message_of([] { parse_train_config(R"({"batch_size": 1})"); }).find("batch_size must be >= 2") !=
        std::string::npos);
  CHECK_THROWS_AS(parse_train_config(R"({"loss": {"cs_weight": 0.5}})"), DataError);
  CHECK_THROWS_AS(parse_train_config("[1, 2]"), DataError);

  const std::string reference = config_reference();
  for (const char* key : {"epochs", "batch_size", "seed", "checkpoint_every", "log_path", "checkpoint_path",
                          "loss.tau", "loss.use_cs", "augment.apply_prob", "augment.supercell_factor",
                          "graph.cutoff", "graph.gauss_width", "model.hidden_dim", "optimizer.lr"}) {
    CHECK_MESSAGE(reference.find(key) != std::string::npos, key);
  }
}

TEST_CASE("shipped configs parse") {
  for (const char* name : {"configs/smoke.json", "configs/default.json"}) {
    const std::string path = std::string(CRYSTCLR_REPO_DIR) + "/" + name;
    if (!std::filesystem::exists(path)) continue;
    CHECK_NOTHROW(load_train_config(path));
  }
}
