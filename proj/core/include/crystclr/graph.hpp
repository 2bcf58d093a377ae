#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "crystclr/structure.hpp"

namespace crystclr {

struct GraphConfig {
  double cutoff = 8.0;
  int max_neighbors = 12;
  double gauss_min = 0.0;
  double gauss_max = 8.0;
  int gauss_count = 41;
  /// Defaults to the spacing between neighbouring centres.
  std::optional<double> gauss_width;

  double width() const {
    return gauss_width.value_or((gauss_max - gauss_min) / (gauss_count - 1));
  }
  /// Throws InvariantError on a bad combination.
  void validate() const;
  bool operator==(const GraphConfig&) const = default;
};

struct Neighbor {
  int center = 0;    // i: the site whose neighbourhood this is
  int neighbor = 0;  // j: may equal i for a periodic self-image
  double distance = 0.0;
  Vec3 offset = Vec3::Zero();  // Cartesian vector from i to the chosen image of j
};

/// Up to cfg.max_neighbors nearest periodic images within the cutoff, per
/// site. Candidates whose distances agree to 1e-6 A are ordered by their
/// Cartesian offset (rounded to 1e-6 A), then by neighbour index; that key
/// depends only on local geometry, so a site and its copies in a supercell
/// select equivalent neighbours. Output is sorted by (center, distance key,
/// offset key, neighbour). Throws DataError if a site has no neighbour.
std::vector<Neighbor> neighbor_list(const CrystalStructure& structure, const GraphConfig& cfg);

/// Gaussian basis expansion of a distance: one component per centre.
Eigen::RowVectorXd gaussian_expand(double distance, const GraphConfig& cfg);

/// Directed crystal graph. Edge e carries a message from edge_src[e] to
/// edge_dst[e]; every node receives at least one edge.
struct CrystalGraph {
  std::vector<int> node_z;
  std::vector<int> edge_src;
  std::vector<int> edge_dst;
  Eigen::MatrixXd edge_features;  // num_edges x gauss_count

  int num_nodes() const { return static_cast<int>(node_z.size()); }
  int num_edges() const { return static_cast<int>(edge_src.size()); }
};

CrystalGraph build_graph(const CrystalStructure& structure, const GraphConfig& cfg);

}  // namespace crystclr
