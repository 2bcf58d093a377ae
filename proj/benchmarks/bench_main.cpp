#include <benchmark/benchmark.h>

#include "crystclr/augment.hpp"
#include "crystclr/graph.hpp"
#include "crystclr/loss.hpp"
#include "crystclr/model.hpp"
#include "crystclr/synthetic.hpp"
#include "crystclr/trainer.hpp"

using namespace crystclr;

namespace {

CrystalStructure rocksalt() {
  std::vector<Site> sites;
  for (const Vec3& f : {Vec3(0, 0, 0), Vec3(0, 0.5, 0.5), Vec3(0.5, 0, 0.5), Vec3(0.5, 0.5, 0)}) {
    sites.push_back({11, f});
    sites.push_back({17, f + Vec3(0.5, 0, 0)});
  }
  return CrystalStructure(Lattice(Mat3::Identity() * 5.64), sites, "NaCl");
}

void BM_BuildGraph(benchmark::State& state) {
  const auto s = state.range(0) == 1 ? rocksalt() : make_supercell(rocksalt(), static_cast<int>(state.range(0)));
  const GraphConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(build_graph(s, cfg));
  state.SetLabel(std::to_string(s.size()) + " sites");
}
BENCHMARK(BM_BuildGraph)->Arg(1)->Arg(2)->Arg(3);

void BM_NtXent(benchmark::State& state) {
  const auto rows = static_cast<Eigen::Index>(state.range(0));
  const Eigen::MatrixXd z = Eigen::MatrixXd::Random(rows, kProjectionDim);
  for (auto _ : state) benchmark::DoNotOptimize(nt_xent(z, 0.1));
}
BENCHMARK(BM_NtXent)->Arg(16)->Arg(128)->Arg(1024);

void BM_LossAndGrad(benchmark::State& state) {
  const auto rows = static_cast<Eigen::Index>(state.range(0));
  const Eigen::MatrixXd z = Eigen::MatrixXd::Random(rows, kProjectionDim);
  PositiveSets p(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) p[static_cast<std::size_t>(i)] = {partner_of(i)};
  LossConfig cfg;
  cfg.use_cs = true;
  for (auto _ : state) benchmark::DoNotOptimize(combined_loss_and_grad(z, p, cfg));
}
BENCHMARK(BM_LossAndGrad)->Arg(16)->Arg(128);

void BM_TrainStep(benchmark::State& state) {
  const auto crystals = synthetic_corpus(static_cast<std::size_t>(state.range(0)), 1).structures();
  const ModelConfig model;
  const GraphConfig graph;
  const Batch batch = make_pair_batch(crystals, AugmentConfig{}, graph, 1, 0, 0);
  const auto params = ModelParams::initialize(model, 1);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grads(batch, params, model, LossConfig{}));
  state.SetLabel(std::to_string(batch.num_nodes()) + " nodes");
}
BENCHMARK(BM_TrainStep)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_MakePairBatch(benchmark::State& state) {
  const auto crystals = synthetic_corpus(8, 1).structures();
  std::uint64_t epoch = 0;
  for (auto _ : state) benchmark::DoNotOptimize(make_pair_batch(crystals, AugmentConfig{}, GraphConfig{}, 1, epoch++, 0));
}
BENCHMARK(BM_MakePairBatch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
