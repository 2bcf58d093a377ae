#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "crystclr/structure.hpp"
#include "crystclr/synthetic.hpp"

namespace crystclr::testing {

inline std::string data_path(const std::string& relative) {
  return std::string(CRYSTCLR_TEST_DATA_DIR) + "/" + relative;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("crystclr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Mat3 cubic_rows(double a) { return Mat3::Identity() * a; }

/// Conventional rocksalt cell: cation on fcc, anion shifted by a/2.
inline CrystalStructure rocksalt(int cation, int anion, double a, std::string id = "rocksalt") {
  std::vector<Site> sites;
  const std::vector<Vec3> fcc = {Vec3(0, 0, 0), Vec3(0, 0.5, 0.5), Vec3(0.5, 0, 0.5),
                                 Vec3(0.5, 0.5, 0)};
  for (const Vec3& f : fcc) sites.push_back({cation, f});
  for (const Vec3& f : fcc) sites.push_back({anion, f + Vec3(0.5, 0, 0)});
  return CrystalStructure(Lattice(cubic_rows(a)), std::move(sites), std::move(id));
}

inline CrystalStructure nacl() { return rocksalt(11, 17, 5.64, "NaCl"); }
inline CrystalStructure kcl() { return rocksalt(19, 17, 6.29, "KCl"); }
inline CrystalStructure mgo() { return rocksalt(12, 8, 4.21, "MgO"); }

inline CrystalStructure elemental_si() {
  Mat3 rows;
  rows << 0, 2.715, 2.715, 2.715, 0, 2.715, 2.715, 2.715, 0;
  return CrystalStructure(Lattice(rows), {{14, Vec3(0, 0, 0)}, {14, Vec3(0.25, 0.25, 0.25)}}, "Si");
}

inline CrystalStructure triclinic() {
  return CrystalStructure(Lattice::from_parameters(4.1, 5.3, 6.2, 80.0, 95.0, 105.0),
                          {{8, Vec3(0.1, 0.2, 0.3)}, {26, Vec3(0.6, 0.55, 0.8)},
                           {8, Vec3(0.35, 0.9, 0.05)}},
                          "triclinic");
}

/// Hand-built fixtures plus synthetic prototypes: at least `count` structures
/// with 1-5 sites spanning cubic, fcc-primitive, hexagonal and triclinic cells.
inline std::vector<CrystalStructure> fixture_set(std::size_t count = 24) {
  std::vector<CrystalStructure> out = {nacl(), kcl(), mgo(), elemental_si(), triclinic()};
  const Dataset synthetic = synthetic_corpus(count > out.size() ? count - out.size() : 0, 99, "fx");
  for (const Sample& s : synthetic.samples) out.push_back(s.structure);
  return out;
}

}  // namespace crystclr::testing
