#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "crystclr/config.hpp"
#include "crystclr/dataset.hpp"
#include "crystclr/model.hpp"
#include "crystclr/probe.hpp"

namespace crystclr {

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;  // mean over the epoch's batches
  double seconds = 0.0;
};

struct TrainState {
  ModelParams params;
  AdamState optimizer;
  std::vector<EpochLog> log;
};

/// Augments every crystal into a positive pair and collates both views
/// (rows 2k, 2k+1 belong to crystals[k]). Position k draws from the stream
/// keyed by (seed, epoch, batch, k), so the result does not depend on how
/// positions are scheduled across threads. Positive sets come from the
/// original crystals' compositions.
Batch make_pair_batch(std::span<const CrystalStructure> crystals, const AugmentConfig& augment,
                      const GraphConfig& graph, std::uint64_t seed, std::uint64_t epoch,
                      std::uint64_t batch_index);

using EpochCallback = std::function<void(const EpochLog&, const TrainState&)>;

/// In-memory pretraining. Each epoch shuffles with a seeded stream and drops
/// the final short batch. Throws DataError if no full batch exists and
/// NumericalError (with epoch and batch) on a non-finite loss.
TrainState train(const TrainConfig& cfg, const std::vector<CrystalStructure>& crystals,
                 const EpochCallback& on_epoch = {});

/// train() plus files: the epoch log CSV (epoch,loss,seconds) at
/// cfg.log_path and a checkpoint at cfg.checkpoint_path every
/// cfg.checkpoint_every epochs and after the last one. Returns the
/// checkpoint path.
std::string pretrain(const TrainConfig& cfg, const Dataset& data);

std::string epoch_log_line(const EpochLog& entry);

/// h (and optionally z) for unaugmented structures.
EmbeddingTable embed_structures(std::span<const CrystalStructure> crystals, const ModelParams& params,
                                const GraphConfig& graph, bool with_z = false);

/// Loads the checkpoint (graph settings included) and embeds every sample.
EmbeddingTable embed_dataset(const std::string& checkpoint_path, const Dataset& data,
                             bool with_z = false);

/// Matches embeddings to targets by id, splits 80/10/10 with seed, probes h.
ProbeResult probe_embeddings(const EmbeddingTable& table, const Dataset& data, std::uint64_t seed,
                             double lambda = kDefaultRidgeLambda, std::string property = "target");

struct StudyResult {
  /// mae[a][b] for transforms a, b in kAllTransforms order; symmetric.
  std::array<std::array<double, 4>, 4> mae{};
  int models_trained = 0;
};

using StudyProgress = std::function<void(Transform, Transform, double mae)>;

/// For every unordered pair of transforms (the diagonal being a single
/// transform), pretrain in one-view mode with exactly those transforms
/// enabled, embed without augmentation and probe. All cells share base.seed.
StudyResult augmentation_study(const TrainConfig& base, const Dataset& data,
                               const StudyProgress& progress = {});

/// Header row and column name the transforms.
std::string study_csv(const StudyResult& result);

}  // namespace crystclr
