#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "crystclr/augment.hpp"
#include "crystclr/graph.hpp"
#include "crystclr/loss.hpp"
#include "crystclr/model.hpp"

namespace crystclr {

/// Everything a pretraining run depends on. Defaults are the full-scale
/// protocol (5000 epochs, 512 pairs per batch, Adam at 1e-4).
struct TrainConfig {
  int epochs = 5000;
  int batch_size = 512;
  std::uint64_t seed = 0;
  int checkpoint_every = 100;
  std::string log_path = "train_log.csv";
  std::string checkpoint_path = "model.cclr";
  LossConfig loss;
  AugmentConfig augment;
  GraphConfig graph;
  ModelConfig model;
  AdamHyper optimizer;

  /// Throws InvariantError naming the offending key.
  void validate() const;
};

/// Strict parse: unknown keys and wrong types are DataErrors naming the key
/// path; omitted keys keep their defaults. model.edge_feat_dim follows
/// graph.gauss_count. The result is validated.
TrainConfig parse_train_config(std::string_view json_text);
TrainConfig load_train_config(const std::string& path);
std::string train_config_to_json(const TrainConfig& cfg);

/// One "key = default" line per configuration key, for --help.
std::string config_reference();

}  // namespace crystclr
