#include "crystclr/synthetic.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "crystclr/errors.hpp"
#include "crystclr/periodic_table.hpp"
#include "crystclr/probe.hpp"
#include "crystclr/rng.hpp"

namespace crystclr {
namespace {

using Pool = std::vector<int>;

const Pool kAlkali = {3, 11, 19, 37, 55};
const Pool kAlkalineEarth = {4, 12, 20, 38, 56};
const Pool kHalogen = {9, 17, 35, 53};
const Pool kChalcogen = {8, 16, 34, 52};
const Pool kPnictogen = {7, 15, 33, 51};
const Pool kTriel = {5, 13, 31, 49};
const Pool kGroup12 = {30, 48, 80};
const Pool kTransition = {22, 23, 24, 25, 26, 27, 28, 40, 41, 72, 73};
const Pool kBccMetal = {3, 11, 19, 23, 24, 26, 41, 42, 73, 74};
const Pool kFccMetal = {13, 28, 29, 45, 46, 47, 77, 78, 79, 82};
const Pool kFluoriteCation = {20, 38, 56, 58, 90};

int pick(RngStream& rng, const Pool& pool) { return pool[rng.uniform_index(pool.size())]; }

Mat3 fcc_primitive(double a) {
  Mat3 m;
  m << 0.0, 0.5, 0.5,  //
      0.5, 0.0, 0.5,   //
      0.5, 0.5, 0.0;
  return m * a;
}

Mat3 hexagonal(double a, double c) {
  Mat3 m;
  m << a, 0.0, 0.0,                          //
      -0.5 * a, std::sqrt(3.0) / 2.0 * a, 0.0,  //
      0.0, 0.0, c;
  return m;
}

constexpr int kPrototypeCount = 8;

// Prototype k with freshly drawn elements and lattice constant.
std::pair<Mat3, std::vector<Site>> prototype(int k, RngStream& rng) {
  switch (k) {
    case 0: {  // rocksalt, primitive
      const bool alkali = rng.bernoulli(0.5);
      const int a = pick(rng, alkali ? kAlkali : kAlkalineEarth);
      const int x = pick(rng, alkali ? kHalogen : kChalcogen);
      return {fcc_primitive(rng.uniform(4.2, 6.4)), {{a, Vec3(0, 0, 0)}, {x, Vec3(0.5, 0.5, 0.5)}}};
    }
    case 1: {  // CsCl
      const int a = pick(rng, kAlkali);
      const int x = pick(rng, kHalogen);
      return {Mat3::Identity() * rng.uniform(3.3, 4.6),
              {{a, Vec3(0, 0, 0)}, {x, Vec3(0.5, 0.5, 0.5)}}};
    }
    case 2: {  // zincblende, primitive
      const bool iii_v = rng.bernoulli(0.5);
      const int a = pick(rng, iii_v ? kTriel : kGroup12);
      const int x = pick(rng, iii_v ? kPnictogen : kChalcogen);
      return {fcc_primitive(rng.uniform(5.0, 6.6)),
              {{a, Vec3(0, 0, 0)}, {x, Vec3(0.25, 0.25, 0.25)}}};
    }
    case 3: {  // fluorite AX2, primitive
      const int a = pick(rng, kFluoriteCation);
      const int x = rng.bernoulli(0.5) ? pick(rng, kHalogen) : 8;
      return {fcc_primitive(rng.uniform(5.2, 6.3)),
              {{a, Vec3(0, 0, 0)}, {x, Vec3(0.25, 0.25, 0.25)}, {x, Vec3(0.75, 0.75, 0.75)}}};
    }
    case 4: {  // cubic perovskite ABX3
      const int a = pick(rng, rng.bernoulli(0.5) ? kAlkali : kAlkalineEarth);
      const int b = pick(rng, kTransition);
      const int x = rng.bernoulli(0.7) ? 8 : pick(rng, kHalogen);
      return {Mat3::Identity() * rng.uniform(3.7, 4.3),
              {{a, Vec3(0, 0, 0)},
               {b, Vec3(0.5, 0.5, 0.5)},
               {x, Vec3(0.5, 0.5, 0.0)},
               {x, Vec3(0.5, 0.0, 0.5)},
               {x, Vec3(0.0, 0.5, 0.5)}}};
    }
    case 5: {  // wurtzite
      const bool iii_v = rng.bernoulli(0.5);
      const int a = pick(rng, iii_v ? kTriel : kGroup12);
      const int x = pick(rng, iii_v ? kPnictogen : kChalcogen);
      const double lattice = rng.uniform(3.1, 4.3);
      const double u = 0.375;
      return {hexagonal(lattice, lattice * rng.uniform(1.58, 1.66)),
              {{a, Vec3(1.0 / 3, 2.0 / 3, 0.0)},
               {a, Vec3(2.0 / 3, 1.0 / 3, 0.5)},
               {x, Vec3(1.0 / 3, 2.0 / 3, u)},
               {x, Vec3(2.0 / 3, 1.0 / 3, 0.5 + u)}}};
    }
    case 6: {  // bcc metal, conventional cell
      const int a = pick(rng, kBccMetal);
      return {Mat3::Identity() * rng.uniform(2.8, 3.7),
              {{a, Vec3(0, 0, 0)}, {a, Vec3(0.5, 0.5, 0.5)}}};
    }
    default: {  // fcc metal, primitive
      const int a = pick(rng, kFccMetal);
      return {fcc_primitive(rng.uniform(3.5, 4.2)), {{a, Vec3(0, 0, 0)}}};
    }
  }
}

// Fixed per-element weights: a smooth trend in column and row plus an
// element-specific offset drawn once from a fixed stream.
const std::vector<double>& element_weights() {
  static const std::vector<double> weights = [] {
    const auto& table = PeriodicTable::instance();
    std::vector<double> w(kMaxAtomicNumber + 1, 0.0);
    RngStream rng(0xC0FFEE);
    for (int z = 1; z <= kMaxAtomicNumber; ++z) {
      w[static_cast<std::size_t>(z)] = 40.0 * table.group_of(z) + 120.0 * table.period_of(z) +
                                       rng.uniform(0.0, 200.0);
    }
    return w;
  }();
  return weights;
}

}  // namespace

double composition_target(const CrystalStructure& s) {
  const auto& w = element_weights();
  double total = 0.0;
  for (const Site& site : s.sites()) total += w[static_cast<std::size_t>(site.z)];
  return total / static_cast<double>(s.size());
}

Dataset synthetic_corpus(std::size_t count, std::uint64_t seed, const std::string& id_prefix) {
  Dataset data;
  data.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RngStream rng = RngStream::derive(seed, {0x5E7, i});
    const int k = static_cast<int>(i % kPrototypeCount);
    auto [rows, sites] = prototype(k, rng);
    char id[64];
    std::snprintf(id, sizeof id, "%s-%04zu", id_prefix.c_str(), i);
    CrystalStructure s(Lattice(rows), std::move(sites), id);
    const double target = composition_target(s);
    data.samples.push_back({std::move(s), target});
  }
  return data;
}

std::string write_corpus(const Dataset& data, const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  const fs::path manifest = fs::path(directory) / "manifest.txt";
  std::ofstream list(manifest, std::ios::binary | std::ios::trunc);
  if (!list) throw DataError(manifest.string() + ": cannot open for writing");
  for (const Sample& sample : data.samples) {
    const std::string name = sample.structure.id() + ".json";
    std::ofstream out(fs::path(directory) / name, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError((fs::path(directory) / name).string() + ": cannot open for writing");
    out << write_structure_json(sample.structure);
    list << name;
    if (sample.target) list << ' ' << format_double(*sample.target);
    list << '\n';
  }
  return manifest.string();
}

}  // namespace crystclr
