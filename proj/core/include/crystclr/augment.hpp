#pragma once

#include <array>
#include <string_view>
#include <utility>

#include "crystclr/periodic_table.hpp"
#include "crystclr/rng.hpp"
#include "crystclr/structure.hpp"

namespace crystclr {

/// The four transformations, in the order make_views applies them.
enum class Transform { kPerturb = 0, kStrain = 1, kColumnReplace = 2, kSupercell = 3 };

inline constexpr std::array<Transform, 4> kAllTransforms = {
    Transform::kPerturb, Transform::kStrain, Transform::kColumnReplace, Transform::kSupercell};

std::string_view transform_name(Transform t);

struct AugmentConfig {
  bool perturb_enabled = true;
  bool strain_enabled = true;
  bool column_enabled = true;
  bool supercell_enabled = false;
  double apply_prob = 0.5;
  double perturb_max_frac = 0.5;
  double strain_max = 0.05;
  int supercell_factor = 3;
  /// Leave the first view of every pair untouched and augment only the second.
  bool one_view = false;

  bool enabled(Transform t) const;
  void set_enabled(Transform t, bool on);
  void validate() const;
  bool operator==(const AugmentConfig&) const = default;
};

/// Moves every site by a length drawn from U[0, max_frac * d_min] along a
/// direction uniform on the sphere, where d_min is the input's minimum
/// pairwise distance.
CrystalStructure perturb_structure(const CrystalStructure& s, double max_frac, RngStream& rng);

/// Scales lattice row k by (1 + eps_k), eps_k ~ U[0, strain_max].
CrystalStructure apply_strain(const CrystalStructure& s, double strain_max, RngStream& rng);
/// Deterministic form: scales lattice row k by (1 + eps[k]).
CrystalStructure apply_strain_factors(const CrystalStructure& s, const std::array<double, 3>& eps);

struct ColumnReplaceResult {
  CrystalStructure structure;
  /// True when the chosen element has no other column member with Z <= 100.
  bool no_op = false;
  int site = -1;
  int old_z = 0;
  int new_z = 0;
};

/// Picks one site uniformly and swaps its element for a different member of
/// the same periodic-table column.
ColumnReplaceResult column_replace(const CrystalStructure& s, const PeriodicTable& table,
                                   RngStream& rng);

/// Replicates the cell factor^3 times; site order is (shift, original index)
/// with shifts in lexicographic order.
CrystalStructure make_supercell(const CrystalStructure& s, int factor);

/// Two independently augmented copies of s. Each enabled transformation is
/// applied with probability apply_prob, in the order perturb, strain,
/// column replace, supercell. With one_view set, the first copy is s itself.
std::pair<CrystalStructure, CrystalStructure> make_views(const CrystalStructure& s,
                                                         const AugmentConfig& cfg,
                                                         RngStream& rng);

}  // namespace crystclr
