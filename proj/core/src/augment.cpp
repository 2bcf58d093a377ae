#include "crystclr/augment.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "crystclr/errors.hpp"

namespace crystclr {

std::string_view transform_name(Transform t) {
  switch (t) {
    case Transform::kPerturb:
      return "perturb";
    case Transform::kStrain:
      return "strain";
    case Transform::kColumnReplace:
      return "column_replace";
    case Transform::kSupercell:
      return "supercell";
  }
  return "unknown";
}

bool AugmentConfig::enabled(Transform t) const {
  switch (t) {
    case Transform::kPerturb:
      return perturb_enabled;
    case Transform::kStrain:
      return strain_enabled;
    case Transform::kColumnReplace:
      return column_enabled;
    case Transform::kSupercell:
      return supercell_enabled;
  }
  return false;
}

void AugmentConfig::set_enabled(Transform t, bool on) {
  switch (t) {
    case Transform::kPerturb:
      perturb_enabled = on;
      break;
    case Transform::kStrain:
      strain_enabled = on;
      break;
    case Transform::kColumnReplace:
      column_enabled = on;
      break;
    case Transform::kSupercell:
      supercell_enabled = on;
      break;
  }
}

void AugmentConfig::validate() const {
  if (!(apply_prob >= 0.0 && apply_prob <= 1.0)) {
    throw InvariantError("augment.apply_prob must lie in [0, 1]");
  }
  if (!(perturb_max_frac > 0.0 && perturb_max_frac <= 1.0)) {
    throw InvariantError("augment.perturb_max_frac must lie in (0, 1]");
  }
  if (!(strain_max > 0.0 && strain_max <= 0.5)) {
    throw InvariantError("augment.strain_max must lie in (0, 0.5]");
  }
  if (supercell_factor < 2) throw InvariantError("augment.supercell_factor must be >= 2");
}

CrystalStructure perturb_structure(const CrystalStructure& s, double max_frac, RngStream& rng) {
  const double max_shift = max_frac * min_pairwise_distance(s);
  std::vector<Site> sites = s.sites();
  for (Site& site : sites) {
    const double length = rng.uniform(0.0, max_shift);
    // Archimedes: z uniform on [-1, 1] and an independent azimuth give a
    // uniform direction on the sphere.
    const double cz = rng.uniform(-1.0, 1.0);
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double r = std::sqrt(std::max(0.0, 1.0 - cz * cz));
    const Vec3 shift = length * Vec3(r * std::cos(phi), r * std::sin(phi), cz);
    site.frac += cart_to_frac(s.lattice(), shift);
  }
  return CrystalStructure(s.lattice(), std::move(sites), s.id());
}

CrystalStructure apply_strain_factors(const CrystalStructure& s, const std::array<double, 3>& eps) {
  Mat3 rows = s.lattice().matrix();
  for (int k = 0; k < 3; ++k) rows.row(k) *= 1.0 + eps[static_cast<std::size_t>(k)];
  return CrystalStructure(Lattice(rows), s.sites(), s.id());
}

CrystalStructure apply_strain(const CrystalStructure& s, double strain_max, RngStream& rng) {
  std::array<double, 3> eps{};
  for (double& e : eps) e = rng.uniform(0.0, strain_max);
  return apply_strain_factors(s, eps);
}

ColumnReplaceResult column_replace(const CrystalStructure& s, const PeriodicTable& table,
                                   RngStream& rng) {
  const auto site = static_cast<int>(rng.uniform_index(s.size()));
  const int old_z = s.sites()[static_cast<std::size_t>(site)].z;
  std::vector<int> candidates;
  for (int z : table.column_members(old_z)) {
    if (z != old_z) candidates.push_back(z);
  }
  if (candidates.empty()) return {s, true, site, old_z, old_z};
  const int new_z = candidates[rng.uniform_index(candidates.size())];
  std::vector<Site> sites = s.sites();
  sites[static_cast<std::size_t>(site)].z = new_z;
  return {CrystalStructure(s.lattice(), std::move(sites), s.id()), false, site, old_z, new_z};
}

CrystalStructure make_supercell(const CrystalStructure& s, int factor) {
  if (factor < 1) throw InvariantError("supercell factor must be >= 1");
  if (factor == 1) return s;
  const double f = factor;
  std::vector<Site> sites;
  sites.reserve(s.size() * static_cast<std::size_t>(factor * factor * factor));
  for (int a = 0; a < factor; ++a) {
    for (int b = 0; b < factor; ++b) {
      for (int c = 0; c < factor; ++c) {
        const Vec3 shift(a, b, c);
        for (const Site& site : s.sites()) sites.push_back({site.z, (site.frac + shift) / f});
      }
    }
  }
  return CrystalStructure(Lattice(s.lattice().matrix() * f), std::move(sites), s.id());
}

namespace {

CrystalStructure augment_once(const CrystalStructure& s, const AugmentConfig& cfg,
                              RngStream& rng) {
  CrystalStructure out = s;
  for (Transform t : kAllTransforms) {
    if (!cfg.enabled(t)) continue;
    if (!rng.bernoulli(cfg.apply_prob)) continue;
    switch (t) {
      case Transform::kPerturb:
        out = perturb_structure(out, cfg.perturb_max_frac, rng);
        break;
      case Transform::kStrain:
        out = apply_strain(out, cfg.strain_max, rng);
        break;
      case Transform::kColumnReplace:
        out = column_replace(out, PeriodicTable::instance(), rng).structure;
        break;
      case Transform::kSupercell:
        out = make_supercell(out, cfg.supercell_factor);
        break;
    }
  }
  return out;
}

}  // namespace

std::pair<CrystalStructure, CrystalStructure> make_views(const CrystalStructure& s,
                                                         const AugmentConfig& cfg,
                                                         RngStream& rng) {
  if (cfg.one_view) return {s, augment_once(s, cfg, rng)};
  CrystalStructure first = augment_once(s, cfg, rng);
  CrystalStructure second = augment_once(s, cfg, rng);
  return {std::move(first), std::move(second)};
}

}  // namespace crystclr
