#pragma once

#include <optional>
#include <string>

#include "crystclr/graph.hpp"
#include "crystclr/model.hpp"

namespace crystclr {

/// Binary layout (little-endian):
///   "CCLR" | u32 version | u32 array count |
///   per array: u16 name length, name bytes, u8 rank, u32 dims[rank], f64 data (row-major)
///
/// Model arrays use the ModelParams names; Adam moments live under "opt/m/"
/// and "opt/v/", with "opt/step" and "opt/hyper" (lr, beta1, beta2, eps).
/// "meta/graph" records the GraphConfig the encoder was trained against.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  AdamState optimizer;
  GraphConfig graph;
};

void save_checkpoint(const std::string& path, const ModelParams& params, const AdamState& state,
                     const GraphConfig& graph);

/// Throws DataError on a bad header, version mismatch or truncation, and
/// ShapeError naming the array when shapes disagree with `expected`.
Checkpoint load_checkpoint(const std::string& path,
                           const std::optional<ModelConfig>& expected = std::nullopt);

}  // namespace crystclr
