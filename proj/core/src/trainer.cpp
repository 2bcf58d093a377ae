#include "crystclr/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "crystclr/augment.hpp"
#include "crystclr/checkpoint.hpp"
#include "crystclr/errors.hpp"
#include "crystclr/parallel.hpp"
#include "crystclr/rng.hpp"

namespace crystclr {

Batch make_pair_batch(std::span<const CrystalStructure> crystals, const AugmentConfig& augment,
                      const GraphConfig& graph, std::uint64_t seed, std::uint64_t epoch,
                      std::uint64_t batch_index) {
  std::vector<CrystalGraph> graphs(2 * crystals.size());
  parallel_for(crystals.size(), [&](std::size_t k) {
    RngStream rng = RngStream::derive(seed, {epoch, batch_index, k});
    auto [first, second] = make_views(crystals[k], augment, rng);
    graphs[2 * k] = build_graph(first, graph);
    graphs[2 * k + 1] = build_graph(second, graph);
  });
  Batch batch = collate(graphs);
  std::vector<CompositionVector> comps;
  comps.reserve(graphs.size());
  for (const CrystalStructure& c : crystals) {
    const CompositionVector comp = composition_vector(c);
    comps.push_back(comp);
    comps.push_back(comp);
  }
  batch.positives = positive_sets(comps);
  return batch;
}

TrainState train(const TrainConfig& cfg, const std::vector<CrystalStructure>& crystals,
                 const EpochCallback& on_epoch) {
  cfg.validate();
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t batches = crystals.size() / batch_size;
  if (batches == 0) {
    throw DataError("dataset has " + std::to_string(crystals.size()) +
                    " structures, fewer than batch_size " + std::to_string(cfg.batch_size));
  }
  TrainState state{ModelParams::initialize(cfg.model, cfg.seed), {}, {}};
  state.optimizer = AdamState::fresh(state.params, cfg.optimizer);

  std::vector<std::size_t> order(crystals.size());
  std::vector<CrystalStructure> chunk;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    RngStream shuffle = RngStream::derive(cfg.seed, {static_cast<std::uint64_t>(epoch), 0x5F1E});
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[shuffle.uniform_index(i + 1)]);
    }
    double total = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      chunk.clear();
      for (std::size_t k = 0; k < batch_size; ++k) chunk.push_back(crystals[order[b * batch_size + k]]);
      const Batch batch = make_pair_batch(chunk, cfg.augment, cfg.graph, cfg.seed,
                                          static_cast<std::uint64_t>(epoch), b);
      try {
        LossAndGrads result = loss_and_grads(batch, state.params, cfg.model, cfg.loss);
        adam_step(state.params, result.grads, state.optimizer);
        total += result.loss.total;
      } catch (const NumericalError& e) {
        throw NumericalError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                             ": " + e.what());
      }
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    state.log.push_back({epoch, total / static_cast<double>(batches), elapsed.count()});
    if (on_epoch) on_epoch(state.log.back(), state);
  }
  return state;
}

std::string epoch_log_line(const EpochLog& entry) {
  char seconds[32];
  std::snprintf(seconds, sizeof seconds, "%.3f", entry.seconds);
  return std::to_string(entry.epoch) + "," + format_double(entry.loss) + "," + seconds;
}

std::string pretrain(const TrainConfig& cfg, const Dataset& data) {
  cfg.validate();
  std::ofstream log(cfg.log_path, std::ios::binary | std::ios::trunc);
  if (!log) throw DataError(cfg.log_path + ": cannot open log for writing");
  log << "epoch,loss,seconds\n";
  train(cfg, data.structures(), [&](const EpochLog& entry, const TrainState& state) {
    log << epoch_log_line(entry) << '\n' << std::flush;
    if (entry.epoch % cfg.checkpoint_every == 0 || entry.epoch == cfg.epochs) {
      save_checkpoint(cfg.checkpoint_path, state.params, state.optimizer, cfg.graph);
    }
  });
  return cfg.checkpoint_path;
}

EmbeddingTable embed_structures(std::span<const CrystalStructure> crystals, const ModelParams& params,
                                const GraphConfig& graph, bool with_z) {
  const ModelConfig cfg = params.infer_config();
  EmbeddingTable table;
  const auto n = static_cast<Eigen::Index>(crystals.size());
  table.h.resize(n, cfg.hidden_dim);
  if (with_z) table.z = RowMatrix(n, cfg.projection_dim);
  std::vector<CrystalGraph> graphs(crystals.size());
  parallel_for(crystals.size(), [&](std::size_t i) { graphs[i] = build_graph(crystals[i], graph); });
  // Fixed-size chunks keep memory bounded; encoding is per-graph independent.
  constexpr std::size_t kChunk = 64;
  for (std::size_t begin = 0; begin < crystals.size(); begin += kChunk) {
    const std::size_t count = std::min(kChunk, crystals.size() - begin);
    const Batch batch = collate(std::span<const CrystalGraph>(graphs).subspan(begin, count));
    const RowMatrix h = encode(batch, params.encoder, cfg);
    table.h.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)) = h;
    if (with_z) {
      table.z->middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)) =
          project(h, params.projection);
    }
  }
  for (const CrystalStructure& c : crystals) table.ids.push_back(c.id());
  if (!table.h.allFinite()) throw NumericalError("non-finite embedding");
  return table;
}

EmbeddingTable embed_dataset(const std::string& checkpoint_path, const Dataset& data, bool with_z) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const ModelConfig cfg = ck.params.infer_config();
  if (cfg.edge_feat_dim != ck.graph.gauss_count) {
    throw ShapeError(checkpoint_path + ": encoder expects " + std::to_string(cfg.edge_feat_dim) +
                     " edge features but graph settings give " + std::to_string(ck.graph.gauss_count));
  }
  const std::vector<CrystalStructure> crystals = data.structures();
  return embed_structures(crystals, ck.params, ck.graph, with_z);
}

ProbeResult probe_embeddings(const EmbeddingTable& table, const Dataset& data, std::uint64_t seed,
                             double lambda, std::string property) {
  RowMatrix x(static_cast<Eigen::Index>(data.size()), table.h.cols());
  std::vector<double> y;
  y.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Sample& s = data.samples[i];
    if (!s.target) throw DataError("structure '" + s.structure.id() + "' has no target value");
    x.row(static_cast<Eigen::Index>(i)) = table.h.row(table.row_of(s.structure.id()));
    y.push_back(*s.target);
  }
  return linear_probe(x, y, split_dataset(data.size(), seed), lambda, std::move(property));
}

StudyResult augmentation_study(const TrainConfig& base, const Dataset& data,
                               const StudyProgress& progress) {
  if (!data.has_targets()) throw DataError("augmentation study needs a target for every structure");
  const std::vector<CrystalStructure> crystals = data.structures();
  StudyResult result;
  for (std::size_t a = 0; a < kAllTransforms.size(); ++a) {
    for (std::size_t b = a; b < kAllTransforms.size(); ++b) {
      TrainConfig cfg = base;
      for (Transform t : kAllTransforms) cfg.augment.set_enabled(t, false);
      cfg.augment.set_enabled(kAllTransforms[a], true);
      cfg.augment.set_enabled(kAllTransforms[b], true);
      cfg.augment.one_view = true;
      const TrainState state = train(cfg, crystals);
      const EmbeddingTable table = embed_structures(crystals, state.params, cfg.graph);
      const double mae = probe_embeddings(table, data, base.seed).mae;
      result.mae[a][b] = mae;
      result.mae[b][a] = mae;
      ++result.models_trained;
      if (progress) progress(kAllTransforms[a], kAllTransforms[b], mae);
    }
  }
  return result;
}

std::string study_csv(const StudyResult& result) {
  std::string out = "transform";
  for (Transform t : kAllTransforms) out += "," + std::string(transform_name(t));
  out += "\n";
  for (std::size_t a = 0; a < kAllTransforms.size(); ++a) {
    out += std::string(transform_name(kAllTransforms[a]));
    for (std::size_t b = 0; b < kAllTransforms.size(); ++b) out += "," + format_double(result.mae[a][b]);
    out += "\n";
  }
  return out;
}

}  // namespace crystclr
