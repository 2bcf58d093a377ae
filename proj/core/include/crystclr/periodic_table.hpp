#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace crystclr {

inline constexpr int kMaxAtomicNumber = 100;

/// Element lookups for Z in [1, 100].
///
/// Columns follow the IUPAC 1-18 numbering. The f-block has no IUPAC column,
/// so La..Lu and Ac..Fm are assigned pseudo-columns 19..33 by their position
/// within the series: La and Ac share column 19, Ce and Th column 20, and so
/// on. Tm, Yb and Lu have no partner below Z = 101.
class PeriodicTable {
 public:
  static const PeriodicTable& instance();

  /// Column (group) of element Z; throws InvariantError outside [1, 100].
  int group_of(int z) const;
  int period_of(int z) const;
  std::string_view symbol(int z) const;
  /// Case-sensitive symbol lookup ("Na", not "NA").
  std::optional<int> atomic_number(std::string_view symbol) const;
  /// All elements (Z <= 100) sharing a column with z, including z itself.
  std::span<const int> column_members(int z) const;

 private:
  PeriodicTable();
  std::vector<int> group_;
  std::vector<int> period_;
  std::vector<std::vector<int>> members_;
};

}  // namespace crystclr
