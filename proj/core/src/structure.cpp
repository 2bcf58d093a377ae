#include "crystclr/structure.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "crystclr/errors.hpp"

namespace crystclr {
namespace {

// cos of an angle in degrees, exact at the angles cells are usually written with.
double cos_deg(double degrees) {
  if (degrees == 90.0) return 0.0;
  if (degrees == 60.0) return 0.5;
  if (degrees == 120.0) return -0.5;
  return std::cos(degrees * std::numbers::pi / 180.0);
}

double sin_deg(double degrees) {
  if (degrees == 90.0) return 1.0;
  return std::sin(degrees * std::numbers::pi / 180.0);
}

}  // namespace

Lattice::Lattice(const Mat3& rows) : rows_(rows) {
  for (int k = 0; k < 3; ++k) {
    if (!rows_.row(k).allFinite() || rows_.row(k).norm() <= 0.1) {
      std::ostringstream msg;
      msg << "lattice vector " << k << " has length <= 0.1 A";
      throw InvariantError(msg.str());
    }
  }
  if (!(rows_.determinant() > 0.0)) {
    throw InvariantError("lattice has non-positive cell volume");
  }
  inverse_ = rows_.inverse();
}

Lattice Lattice::from_parameters(double a, double b, double c, double alpha, double beta,
                                 double gamma) {
  const double ca = cos_deg(alpha);
  const double cb = cos_deg(beta);
  const double cg = cos_deg(gamma);
  const double sg = sin_deg(gamma);
  if (!(sg > 0.0)) throw InvariantError("non-positive cell volume (gamma)");
  const double cy = (ca - cb * cg) / sg;
  const double radicand = 1.0 - cb * cb - cy * cy;
  if (!(radicand > 0.0)) throw InvariantError("non-positive cell volume");
  Mat3 m;
  m << a, 0.0, 0.0,          //
      b * cg, b * sg, 0.0,   //
      c * cb, c * cy, c * std::sqrt(radicand);
  return Lattice(m);
}

double Lattice::angle_deg(int j, int k) const {
  const Vec3 u = row(j);
  const Vec3 v = row(k);
  const double c = std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

double Lattice::plane_spacing(int k) const {
  const Vec3 n = row((k + 1) % 3).cross(row((k + 2) % 3));
  return volume() / n.norm();
}

Vec3 wrap_frac(const Vec3& frac) {
  Vec3 out;
  for (int k = 0; k < 3; ++k) {
    double x = frac[k] - std::floor(frac[k]);
    // floor() of a tiny negative number can land exactly on 1.0.
    if (x >= 1.0) x = 0.0;
    out[k] = x;
  }
  return out;
}

CrystalStructure::CrystalStructure(Lattice lattice, std::vector<Site> sites, std::string id)
    : lattice_(std::move(lattice)), sites_(std::move(sites)), id_(std::move(id)) {
  if (sites_.empty()) throw InvariantError("structure '" + id_ + "' has no sites");
  for (int j = 0; j < 3; ++j) {
    for (int k = j + 1; k < 3; ++k) {
      const double angle = lattice_.angle_deg(j, k);
      if (angle < kMinCellAngleDeg || angle > kMaxCellAngleDeg) {
        std::ostringstream msg;
        msg << "structure '" << id_ << "': cell angle " << angle
            << " deg outside [45, 135]; reduce the cell first";
        throw InvariantError(msg.str());
      }
    }
  }
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    Site& site = sites_[i];
    if (site.z < 1 || site.z > kMaxAtomicNumber) {
      throw InvariantError("structure '" + id_ + "' site " + std::to_string(i) +
                           ": atomic number out of range (" + std::to_string(site.z) + ")");
    }
    if (!site.frac.allFinite()) {
      throw InvariantError("structure '" + id_ + "' site " + std::to_string(i) +
                           ": non-finite coordinate");
    }
    site.frac = wrap_frac(site.frac);
  }
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    for (std::size_t j = i + 1; j < sites_.size(); ++j) {
      if (min_image_distance(lattice_, sites_[i].frac, sites_[j].frac) <= kCoincidenceTolerance) {
        throw InvariantError("structure '" + id_ + "': sites " + std::to_string(i) + " and " +
                             std::to_string(j) + " coincide");
      }
    }
  }
}

CrystalStructure CrystalStructure::with_id(std::string id) const {
  CrystalStructure copy = *this;
  copy.id_ = std::move(id);
  return copy;
}

CompositionVector::CompositionVector(Bits bits) : bits_(bits) {
  if (bits_.none()) throw InvariantError("composition vector has no element set");
}

Vec3 frac_to_cart(const Lattice& lattice, const Vec3& frac) {
  return lattice.matrix().transpose() * frac;
}

Vec3 cart_to_frac(const Lattice& lattice, const Vec3& cart) {
  return lattice.inverse().transpose() * cart;
}

Vec3 min_image_vector(const Lattice& lattice, const Vec3& frac_i, const Vec3& frac_j) {
  Vec3 delta = frac_j - frac_i;
  for (int k = 0; k < 3; ++k) delta[k] -= std::round(delta[k]);
  Vec3 best = frac_to_cart(lattice, delta);
  double best_sq = best.squaredNorm();
  for (int a = -1; a <= 1; ++a) {
    for (int b = -1; b <= 1; ++b) {
      for (int c = -1; c <= 1; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        const Vec3 cart = frac_to_cart(lattice, delta + Vec3(a, b, c));
        const double sq = cart.squaredNorm();
        if (sq < best_sq) {
          best_sq = sq;
          best = cart;
        }
      }
    }
  }
  return best;
}

double min_image_distance(const Lattice& lattice, const Vec3& frac_i, const Vec3& frac_j) {
  return min_image_vector(lattice, frac_i, frac_j).norm();
}

double min_pairwise_distance(const CrystalStructure& structure) {
  const auto& sites = structure.sites();
  const Lattice& lattice = structure.lattice();
  double best = std::numeric_limits<double>::infinity();
  if (sites.size() == 1) {
    for (int a = -1; a <= 1; ++a) {
      for (int b = -1; b <= 1; ++b) {
        for (int c = -1; c <= 1; ++c) {
          if (a == 0 && b == 0 && c == 0) continue;
          best = std::min(best, frac_to_cart(lattice, Vec3(a, b, c)).norm());
        }
      }
    }
    return best;
  }
  for (std::size_t i = 0; i < sites.size(); ++i) {
    for (std::size_t j = i + 1; j < sites.size(); ++j) {
      best = std::min(best, min_image_distance(lattice, sites[i].frac, sites[j].frac));
    }
  }
  return best;
}

CompositionVector composition_vector(const CrystalStructure& structure) {
  CompositionVector::Bits bits;
  for (const Site& site : structure.sites()) bits.set(static_cast<std::size_t>(site.z - 1));
  return CompositionVector(bits);
}

}  // namespace crystclr
