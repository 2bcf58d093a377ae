#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crystclr/structure.hpp"

namespace crystclr {

struct Sample {
  CrystalStructure structure;
  std::optional<double> target;
};

struct Dataset {
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  std::vector<CrystalStructure> structures() const;
  bool has_targets() const;
};

struct ManifestEntry {
  std::string path;  // resolved against the manifest's directory
  std::optional<double> target;
  int line = 0;
};

/// Parses manifest lines without loading the structures they name.
std::vector<ManifestEntry> read_manifest(const std::string& manifest_path);

/// Reads a manifest: one structure path per line, optionally followed by
/// whitespace and a float target. Relative paths resolve against the
/// manifest's directory; blank lines and '#' comments are skipped. Throws
/// DataError naming the manifest line for missing files, parse failures and
/// duplicate ids.
Dataset load_dataset(const std::string& manifest_path);

struct Split {
  std::vector<int> train;
  std::vector<int> validation;
  std::vector<int> test;
};

/// Seeded shuffle, then a contiguous cut into train / validation / test.
/// Validation and test sizes round down; the remainder goes to train.
Split split_dataset(std::size_t n, std::uint64_t seed, double train_ratio = 0.8,
                    double validation_ratio = 0.1, double test_ratio = 0.1);

}  // namespace crystclr
