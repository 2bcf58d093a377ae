#include "crystclr/graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "crystclr/errors.hpp"

namespace crystclr {

void GraphConfig::validate() const {
  if (!(cutoff > 0.0)) throw InvariantError("graph.cutoff must be > 0");
  if (max_neighbors < 1) throw InvariantError("graph.max_neighbors must be >= 1");
  if (gauss_count < 2) throw InvariantError("graph.gauss_count must be >= 2");
  if (!(gauss_max > gauss_min)) throw InvariantError("graph.gauss_max must exceed graph.gauss_min");
  if (gauss_width && !(*gauss_width > 0.0)) throw InvariantError("graph.gauss_width must be > 0");
}

namespace {

constexpr double kKeyResolution = 1e6;  // 1e-6 A

struct Candidate {
  std::array<long long, 4> key;  // rounded distance, then rounded offset x, y, z
  int neighbor;
  double distance;
  Vec3 offset;

  bool operator<(const Candidate& other) const {
    if (key != other.key) return key < other.key;
    return neighbor < other.neighbor;
  }
};

long long quantize(double x) { return std::llround(x * kKeyResolution); }

}  // namespace

std::vector<Neighbor> neighbor_list(const CrystalStructure& structure, const GraphConfig& cfg) {
  cfg.validate();
  const Lattice& lattice = structure.lattice();
  const auto& sites = structure.sites();
  const int n = static_cast<int>(sites.size());

  // Enough image shells along each axis to reach the cutoff from any point
  // inside the cell.
  std::array<int, 3> reach{};
  for (int k = 0; k < 3; ++k) {
    reach[k] = static_cast<int>(std::ceil(cfg.cutoff / lattice.plane_spacing(k))) + 1;
  }
  const double cutoff_sq = (cfg.cutoff + 1e-9) * (cfg.cutoff + 1e-9);

  std::vector<Neighbor> out;
  out.reserve(static_cast<std::size_t>(n * cfg.max_neighbors));
  std::vector<Candidate> candidates;
  for (int i = 0; i < n; ++i) {
    candidates.clear();
    for (int j = 0; j < n; ++j) {
      const Vec3 delta = sites[j].frac - sites[i].frac;
      for (int a = -reach[0]; a <= reach[0]; ++a) {
        for (int b = -reach[1]; b <= reach[1]; ++b) {
          for (int c = -reach[2]; c <= reach[2]; ++c) {
            if (i == j && a == 0 && b == 0 && c == 0) continue;
            const Vec3 offset = frac_to_cart(lattice, delta + Vec3(a, b, c));
            const double sq = offset.squaredNorm();
            if (sq > cutoff_sq) continue;
            const double d = std::sqrt(sq);
            candidates.push_back({{quantize(d), quantize(offset[0]), quantize(offset[1]),
                                   quantize(offset[2])},
                                  j,
                                  d,
                                  offset});
          }
        }
      }
    }
    if (candidates.empty()) {
      std::ostringstream msg;
      msg << "structure '" << structure.id() << "': site " << i << " has no neighbors within cutoff "
          << cfg.cutoff << " A";
      throw DataError(msg.str());
    }
    const auto keep = std::min<std::size_t>(candidates.size(),
                                            static_cast<std::size_t>(cfg.max_neighbors));
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end());
    for (std::size_t k = 0; k < keep; ++k) {
      out.push_back({i, candidates[k].neighbor, candidates[k].distance, candidates[k].offset});
    }
  }
  return out;
}

Eigen::RowVectorXd gaussian_expand(double distance, const GraphConfig& cfg) {
  const double width = cfg.width();
  const double step = (cfg.gauss_max - cfg.gauss_min) / (cfg.gauss_count - 1);
  Eigen::RowVectorXd out(cfg.gauss_count);
  for (int k = 0; k < cfg.gauss_count; ++k) {
    const double mu = cfg.gauss_min + step * k;
    const double diff = distance - mu;
    out[k] = std::exp(-(diff * diff) / (2.0 * width * width));
  }
  return out;
}

CrystalGraph build_graph(const CrystalStructure& structure, const GraphConfig& cfg) {
  const std::vector<Neighbor> neighbors = neighbor_list(structure, cfg);
  CrystalGraph graph;
  graph.node_z.reserve(structure.size());
  for (const Site& site : structure.sites()) graph.node_z.push_back(site.z);
  const auto m = static_cast<Eigen::Index>(neighbors.size());
  graph.edge_src.reserve(neighbors.size());
  graph.edge_dst.reserve(neighbors.size());
  graph.edge_features.resize(m, cfg.gauss_count);
  for (Eigen::Index e = 0; e < m; ++e) {
    const Neighbor& nb = neighbors[static_cast<std::size_t>(e)];
    graph.edge_src.push_back(nb.neighbor);
    graph.edge_dst.push_back(nb.center);
    graph.edge_features.row(e) = gaussian_expand(nb.distance, cfg);
  }
  return graph;
}

}  // namespace crystclr
