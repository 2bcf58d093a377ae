#pragma once

#include <Eigen/Core>
#include <bitset>
#include <string>
#include <vector>

#include "crystclr/periodic_table.hpp"

namespace crystclr {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Three lattice vectors stored as the rows of a 3x3 matrix, in Angstrom.
class Lattice {
 public:
  /// Throws InvariantError unless det > 0 and every row is longer than 0.1 A.
  explicit Lattice(const Mat3& rows);

  /// Builds a cell from lengths (A) and angles (degrees): a along x, b in
  /// the xy-plane. Throws InvariantError for a non-positive volume.
  static Lattice from_parameters(double a, double b, double c, double alpha, double beta,
                                 double gamma);

  const Mat3& matrix() const { return rows_; }
  Vec3 row(int k) const { return rows_.row(k).transpose(); }
  double volume() const { return rows_.determinant(); }
  /// Angle between rows j and k, degrees.
  double angle_deg(int j, int k) const;
  /// Distance between lattice planes spanned by the two rows other than k.
  double plane_spacing(int k) const;
  const Mat3& inverse() const { return inverse_; }

  bool operator==(const Lattice& other) const { return rows_ == other.rows_; }

 private:
  Mat3 rows_;
  Mat3 inverse_;
};

struct Site {
  int z = 0;
  Vec3 frac = Vec3::Zero();

  bool operator==(const Site& other) const { return z == other.z && frac == other.frac; }
};

/// Wraps each fractional component into [0, 1).
Vec3 wrap_frac(const Vec3& frac);

/// A periodic crystal. Immutable after construction; the constructor wraps
/// fractional coordinates and enforces every structural invariant.
class CrystalStructure {
 public:
  /// Throws InvariantError when there are no sites, a Z falls outside
  /// [1, 100], a cell angle leaves [45, 135] degrees, or two sites coincide
  /// (minimum-image distance <= 1e-4 A).
  CrystalStructure(Lattice lattice, std::vector<Site> sites, std::string id);

  const Lattice& lattice() const { return lattice_; }
  const std::vector<Site>& sites() const { return sites_; }
  const std::string& id() const { return id_; }
  std::size_t size() const { return sites_.size(); }

  CrystalStructure with_id(std::string id) const;

  bool operator==(const CrystalStructure& other) const = default;

 private:
  Lattice lattice_;
  std::vector<Site> sites_;
  std::string id_;
};

/// Bit k is set iff an element with Z = k + 1 is present.
class CompositionVector {
 public:
  using Bits = std::bitset<kMaxAtomicNumber>;

  explicit CompositionVector(Bits bits);

  const Bits& bits() const { return bits_; }
  bool has(int z) const { return bits_.test(static_cast<std::size_t>(z - 1)); }
  int dot(const CompositionVector& other) const {
    return static_cast<int>((bits_ & other.bits_).count());
  }
  bool operator==(const CompositionVector& other) const = default;

 private:
  Bits bits_;
};

inline constexpr double kMinCellAngleDeg = 45.0;
inline constexpr double kMaxCellAngleDeg = 135.0;
inline constexpr double kCoincidenceTolerance = 1e-4;

Vec3 frac_to_cart(const Lattice& lattice, const Vec3& frac);
Vec3 cart_to_frac(const Lattice& lattice, const Vec3& cart);

/// Shortest Cartesian separation between two fractional positions over the
/// 27 image shifts around the wrapped difference. Exact for cells whose
/// angles pass the [45, 135] degree guard.
double min_image_distance(const Lattice& lattice, const Vec3& frac_i, const Vec3& frac_j);

/// Minimum-image displacement vector from frac_i to frac_j (Cartesian).
Vec3 min_image_vector(const Lattice& lattice, const Vec3& frac_i, const Vec3& frac_j);

/// Minimum over distinct site pairs; for one site, the nearest periodic image.
double min_pairwise_distance(const CrystalStructure& structure);

CompositionVector composition_vector(const CrystalStructure& structure);

// Structure file formats.

/// P1 CIF subset: cell lengths/angles and an atom-site loop with
/// type symbols and fractional coordinates. Throws DataError.
CrystalStructure parse_cif(std::string_view text, std::string fallback_id = "cif");

/// {"id", "lattice": [[3]x3], "sites": [{"z", "frac": [3]}]}. Throws DataError
/// whose message starts with the offending field path.
CrystalStructure parse_structure_json(std::string_view text);

/// Inverse of parse_structure_json; floats carry 9 significant digits.
std::string write_structure_json(const CrystalStructure& structure);

/// Dispatches on extension (.cif or .json).
CrystalStructure read_structure_file(const std::string& path);

}  // namespace crystclr
