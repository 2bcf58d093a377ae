#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>

#include "crystclr/augment.hpp"
#include "crystclr/errors.hpp"
#include "fixtures.hpp"

using namespace crystclr;
using crystclr::testing::data_path;
using crystclr::testing::read_file;

namespace {

/// Compares text against a frozen golden file; CRYSTCLR_REGEN_GOLDEN=1 rewrites it.
void check_golden(const std::string& name, const std::string& text) {
  const std::string path = data_path("golden/" + name);
  if (std::getenv("CRYSTCLR_REGEN_GOLDEN") != nullptr) {
    std::ofstream(path, std::ios::binary) << text;
  }
  const std::string frozen = read_file(path);
  REQUIRE_MESSAGE(!frozen.empty(), "missing golden file " << path);
  CHECK(frozen == text);
}

std::map<int, int> element_counts(const CrystalStructure& s) {
  std::map<int, int> out;
  for (const auto& site : s.sites()) ++out[site.z];
  return out;
}

CrystalStructure single(int z) {
  return CrystalStructure(Lattice(Mat3::Identity() * 4), {{z, Vec3::Zero()}}, "single");
}

}  // namespace

TEST_CASE("perturb_structure") {
  const auto nacl = testing::nacl();
  RngStream zero_rng(1);
  const auto same = perturb_structure(nacl, 1e-15, zero_rng);
  for (std::size_t k = 0; k < nacl.size(); ++k) {
    CHECK(min_image_distance(nacl.lattice(), nacl.sites()[k].frac, same.sites()[k].frac) < 1e-12);
  }

  for (const auto& s : testing::fixture_set()) {
    const double d_min = min_pairwise_distance(s);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      RngStream rng(seed);
      const auto moved = perturb_structure(s, 0.5, rng);
      CHECK(moved.lattice() == s.lattice());
      REQUIRE(moved.size() == s.size());
      for (std::size_t k = 0; k < s.size(); ++k) {
        CHECK(moved.sites()[k].z == s.sites()[k].z);
        CHECK(min_image_distance(s.lattice(), s.sites()[k].frac, moved.sites()[k].frac) <=
              0.5 * d_min + 1e-9);
        for (int c = 0; c < 3; ++c) {
          CHECK(moved.sites()[k].frac[c] >= 0.0);
          CHECK(moved.sites()[k].frac[c] < 1.0);
        }
      }
    }
  }

  RngStream golden_rng(42);
  check_golden("perturb_nacl_seed42.json", write_structure_json(perturb_structure(nacl, 0.5, golden_rng)));
}

TEST_CASE("strain") {
  const auto s = testing::triclinic();
  const auto same = apply_strain_factors(s, {0, 0, 0});
  CHECK(same.lattice() == s.lattice());

  const CrystalStructure cube(Lattice(Mat3::Identity() * 3), {{1, Vec3(0.1, 0.2, 0.3)}}, "c");
  const auto stretched = apply_strain_factors(cube, {0.05, 0, 0});
  CHECK(stretched.lattice().row(0).isApprox(Vec3(3.15, 0, 0), 1e-15));
  CHECK(stretched.sites() == cube.sites());

  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RngStream rng(seed);
    const auto out = apply_strain(s, 0.05, rng);
    for (int k = 0; k < 3; ++k) {
      const double ratio = out.lattice().row(k).norm() / s.lattice().row(k).norm();
      CHECK(ratio >= 1.0 - 1e-15);
      CHECK(ratio <= 1.05 + 1e-15);
      // direction unchanged
      CHECK(out.lattice().row(k).normalized().isApprox(s.lattice().row(k).normalized(), 1e-12));
    }
    CHECK(out.sites() == s.sites());
  }
}

TEST_CASE("column_replace") {
  const auto& table = PeriodicTable::instance();
  const CrystalStructure na = single(11);
  std::set<int> seen;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    RngStream rng(seed);
    const auto r = column_replace(na, table, rng);
    CHECK_FALSE(r.no_op);
    seen.insert(r.structure.sites()[0].z);
  }
  CHECK(seen == std::set<int>{1, 3, 19, 37, 55, 87});

  seen.clear();
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    RngStream rng(seed);
    seen.insert(column_replace(single(2), table, rng).new_z);
  }
  CHECK(seen == std::set<int>{10, 18, 36, 54, 86});

  RngStream rng(0);
  const auto yb = column_replace(single(70), table, rng);
  CHECK(yb.no_op);
  CHECK(yb.structure == single(70));

  for (const auto& s : testing::fixture_set()) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      RngStream r(seed);
      const auto out = column_replace(s, table, r);
      int changed = 0;
      for (std::size_t k = 0; k < s.size(); ++k) {
        CHECK(out.structure.sites()[k].frac == s.sites()[k].frac);
        if (out.structure.sites()[k].z != s.sites()[k].z) {
          ++changed;
          CHECK(static_cast<int>(k) == out.site);
          CHECK(table.group_of(out.structure.sites()[k].z) == table.group_of(s.sites()[k].z));
        }
      }
      CHECK(changed == (out.no_op ? 0 : 1));
      CHECK(out.structure.lattice() == s.lattice());
      // At most two composition bits move.
      const auto diff = composition_vector(s).bits() ^ composition_vector(out.structure).bits();
      CHECK(diff.count() <= 2);
    }
  }
}

TEST_CASE("make_supercell") {
  const auto s = testing::elemental_si();
  CHECK(make_supercell(s, 1) == s);
  const auto big = make_supercell(s, 3);
  CHECK(big.size() == 54);
  CHECK(big.lattice().matrix().isApprox(s.lattice().matrix() * 3, 1e-15));
  CHECK(min_pairwise_distance(big) == doctest::Approx(min_pairwise_distance(s)).epsilon(1e-9));
  // (shift, original index) order: the first block is the original cell scaled by 1/3.
  for (std::size_t k = 0; k < s.size(); ++k) {
    CHECK(big.sites()[k].frac.isApprox(s.sites()[k].frac / 3.0, 1e-15));
    CHECK(big.sites()[s.size() + k].frac.isApprox((s.sites()[k].frac + Vec3(0, 0, 1)) / 3.0, 1e-15));
  }
  for (const auto& f : testing::fixture_set()) {
    const auto sc = make_supercell(f, 3);
    CHECK(sc.size() == 27 * f.size());
    CHECK(composition_vector(sc) == composition_vector(f));
    auto counts = element_counts(f);
    for (auto& [z, n] : counts) n *= 27;
    CHECK(element_counts(sc) == counts);
  }
}

TEST_CASE("make_views") {
  const auto nacl = testing::nacl();
  AugmentConfig off;
  for (Transform t : kAllTransforms) off.set_enabled(t, false);
  RngStream rng(5);
  const auto [a, b] = make_views(nacl, off, rng);
  CHECK(a == nacl);
  CHECK(b == nacl);

  AugmentConfig strain_only = off;
  strain_only.strain_enabled = true;
  strain_only.apply_prob = 1.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RngStream r(seed);
    const auto [v1, v2] = make_views(nacl, strain_only, r);
    for (const auto* v : {&v1, &v2}) {
      CHECK(v->sites() == nacl.sites());
      for (int k = 0; k < 3; ++k) {
        const double ratio = v->lattice().row(k).norm() / nacl.lattice().row(k).norm();
        CHECK(ratio >= 1.0);
        CHECK(ratio <= 1.05 + 1e-15);
      }
    }
    CHECK_FALSE(v1.lattice() == v2.lattice());
  }

  AugmentConfig one = strain_only;
  one.one_view = true;
  RngStream r1(3);
  CHECK(make_views(nacl, one, r1).first == nacl);

  AugmentConfig full;
  full.supercell_enabled = true;
  RngStream g1(42), g2(42);
  const auto first = make_views(nacl, full, g1);
  const auto second = make_views(nacl, full, g2);
  CHECK(write_structure_json(first.first) == write_structure_json(second.first));
  CHECK(write_structure_json(first.second) == write_structure_json(second.second));
  check_golden("views_nacl_seed42.json",
               write_structure_json(first.first) + write_structure_json(first.second));
}

TEST_CASE("augment config validation") {
  AugmentConfig cfg;
  cfg.validate();
  cfg.apply_prob = 1.5;
  CHECK_THROWS_AS(cfg.validate(), InvariantError);
  cfg = {};
  cfg.perturb_max_frac = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvariantError);
  cfg = {};
  cfg.strain_max = 0.6;
  CHECK_THROWS_AS(cfg.validate(), InvariantError);
  cfg = {};
  cfg.supercell_factor = 1;
  CHECK_THROWS_AS(cfg.validate(), InvariantError);
  CHECK(transform_name(Transform::kColumnReplace) == "column_replace");
}
