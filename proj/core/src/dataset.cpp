#include "crystclr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "crystclr/errors.hpp"
#include "crystclr/rng.hpp"

namespace crystclr {

std::vector<CrystalStructure> Dataset::structures() const {
  std::vector<CrystalStructure> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(s.structure);
  return out;
}

bool Dataset::has_targets() const {
  return !samples.empty() &&
         std::all_of(samples.begin(), samples.end(), [](const Sample& s) { return s.target.has_value(); });
}

std::vector<ManifestEntry> read_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError(manifest_path + ": cannot open manifest");
  const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = manifest_path + ":" + std::to_string(lineno);
    std::istringstream tokens(line);
    std::string path;
    if (!(tokens >> path) || path.front() == '#') continue;
    ManifestEntry entry;
    entry.line = lineno;
    std::string target_text;
    if (tokens >> target_text) {
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(target_text.data(), target_text.data() + target_text.size(), value);
      if (ec != std::errc() || ptr != target_text.data() + target_text.size() || !std::isfinite(value)) {
        throw DataError(where + ": malformed target value '" + target_text + "'");
      }
      entry.target = value;
    }
    std::string extra;
    if (tokens >> extra) throw DataError(where + ": unexpected extra field '" + extra + "'");
    std::filesystem::path resolved(path);
    if (resolved.is_relative()) resolved = base / resolved;
    entry.path = resolved.string();
    entries.push_back(std::move(entry));
  }
  return entries;
}

Dataset load_dataset(const std::string& manifest_path) {
  Dataset data;
  std::set<std::string> ids;
  for (const ManifestEntry& entry : read_manifest(manifest_path)) {
    const std::string where = manifest_path + ":" + std::to_string(entry.line);
    if (!std::filesystem::exists(entry.path)) {
      throw DataError(where + ": structure file not found: " + entry.path);
    }
    CrystalStructure structure = [&] {
      try {
        return read_structure_file(entry.path);
      } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
      }
    }();
    if (!ids.insert(structure.id()).second) {
      throw DataError(where + ": duplicate structure id '" + structure.id() + "'");
    }
    data.samples.push_back({std::move(structure), entry.target});
  }
  return data;
}

Split split_dataset(std::size_t n, std::uint64_t seed, double train_ratio, double validation_ratio,
                    double test_ratio) {
  if (n < 3) throw DataError("split_dataset needs at least 3 items (got " + std::to_string(n) + ")");
  const double total = train_ratio + validation_ratio + test_ratio;
  if (!(train_ratio > 0 && validation_ratio >= 0 && test_ratio >= 0 && std::abs(total - 1.0) < 1e-9)) {
    throw DataError("split ratios must be non-negative and sum to 1");
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  RngStream rng = RngStream::derive(seed, {0x5B1E});
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.uniform_index(i + 1)]);
  }
  // A small epsilon keeps e.g. 0.1 * 10 from rounding down to 0.
  const auto n_val = static_cast<std::size_t>(std::floor(validation_ratio * static_cast<double>(n) + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(test_ratio * static_cast<double>(n) + 1e-9));
  const std::size_t n_train = n - n_val - n_test;
  Split split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                          order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return split;
}

}  // namespace crystclr
