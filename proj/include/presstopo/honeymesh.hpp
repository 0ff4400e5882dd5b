#pragma once

// Honeycomb tessellation of a rectangle into 6-node convex hexagons, with
// Wachspress shape functions and a centroid-fan quadrature rule.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "presstopo/errors.hpp"

namespace presstopo {

using Vec2 = Eigen::Vector2d;
using Hexagon = std::array<Vec2, 6>;

/// How consecutive element rows are laid out.
///
/// `staggered` puts nex hexagons in every row with odd rows shifted by half an
/// element width, so the mesh has exactly nex * ney elements and a jagged
/// left/right profile. `mirror_symmetric` centres the odd rows and gives them
/// nex - 1 hexagons, which makes the tessellation symmetric about x = Lx / 2.
enum class RowLayout { staggered, mirror_symmetric };

struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 6>> elements;  // counter-clockwise
  int nex = 0;
  int ney = 0;
  double lx = 0.0;
  double ly = 0.0;
  RowLayout layout = RowLayout::staggered;
  std::vector<int> row_start;  // ney + 1 offsets into `elements`
  std::map<std::string, std::vector<int>> boundary_node_sets;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }

  Hexagon element_vertices(int e) const {
    Hexagon v;
    for (int a = 0; a < 6; ++a) v[a] = nodes[elements[e][a]];
    return v;
  }

  const std::vector<int>& boundary(const std::string& name) const {
    auto it = boundary_node_sets.find(name);
    if (it == boundary_node_sets.end()) {
      throw InvalidArgument("unknown boundary node set '" + name + "'");
    }
    return it->second;
  }

  /// Vertical extent of one element row, Ly / ney.
  double element_height() const { return ly / ney; }
  /// Horizontal extent of one element, Lx / nex.
  double element_width() const { return lx / nex; }
};

// ---------------------------------------------------------------------------
// Polygon helpers
// ---------------------------------------------------------------------------

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline double polygon_area(std::span<const Vec2> v) {
  double twice = 0.0;
  for (std::size_t a = 0; a < v.size(); ++a) twice += cross2(v[a], v[(a + 1) % v.size()]);
  return 0.5 * twice;
}

inline Vec2 polygon_centroid(std::span<const Vec2> v) {
  double twice = 0.0;
  Vec2 c = Vec2::Zero();
  for (std::size_t a = 0; a < v.size(); ++a) {
    const Vec2& p = v[a];
    const Vec2& q = v[(a + 1) % v.size()];
    const double w = cross2(p, q);
    twice += w;
    c += w * (p + q);
  }
  if (twice == 0.0) throw GeometryError("zero-area polygon has no centroid");
  return c / (3.0 * twice);
}

namespace detail {

inline double polygon_scale(const Hexagon& v) {
  double s = 0.0;
  for (int a = 0; a < 6; ++a) s = std::max(s, (v[(a + 1) % 6] - v[a]).norm());
  return s;
}

// Throws unless the hexagon is strictly convex and counter-clockwise.
inline void require_convex(const Hexagon& v) {
  const double scale = polygon_scale(v);
  if (!(scale > 0.0)) throw GeometryError("degenerate hexagon (coincident vertices)");
  const double tol = 1e-12 * scale * scale;
  for (int a = 0; a < 6; ++a) {
    const Vec2 e0 = v[a] - v[(a + 5) % 6];
    const Vec2 e1 = v[(a + 1) % 6] - v[a];
    if (!(cross2(e0, e1) > tol)) {
      throw GeometryError("hexagon is not strictly convex and counter-clockwise at vertex " +
                          std::to_string(a));
    }
  }
}

// Outward unit normals of edge a (v[a] -> v[a+1]) and signed distances from x
// to each edge line (positive inside).
struct EdgeFrame {
  std::array<Vec2, 6> normal;
  std::array<double, 6> distance;
};

inline EdgeFrame edge_frame(const Hexagon& v, const Vec2& x) {
  EdgeFrame f;
  const double scale = polygon_scale(v);
  for (int a = 0; a < 6; ++a) {
    const Vec2 e = v[(a + 1) % 6] - v[a];
    f.normal[a] = Vec2(e.y(), -e.x()) / e.norm();
    f.distance[a] = (v[a] - x).dot(f.normal[a]);
    if (!(f.distance[a] > 1e-12 * scale)) {
      throw DomainError("point is on or outside hexagon edge " + std::to_string(a));
    }
  }
  return f;
}

// Unnormalized Wachspress weights w_a = det(n_{a-1}, n_a) / (h_{a-1} h_a).
inline std::array<double, 6> wachspress_weights(const EdgeFrame& f) {
  std::array<double, 6> w;
  for (int a = 0; a < 6; ++a) {
    const int prev = (a + 5) % 6;
    w[a] = cross2(f.normal[prev], f.normal[a]) / (f.distance[prev] * f.distance[a]);
  }
  return w;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Wachspress basis
// ---------------------------------------------------------------------------

inline std::array<double, 6> wachspress_shape(const Hexagon& v, const Vec2& x) {
  detail::require_convex(v);
  const auto w = detail::wachspress_weights(detail::edge_frame(v, x));
  double sum = 0.0;
  for (double wa : w) sum += wa;
  std::array<double, 6> n;
  for (int a = 0; a < 6; ++a) n[a] = w[a] / sum;
  return n;
}

/// grad N_a = N_a (R_a - sum_b N_b R_b), R_a = n_{a-1}/h_{a-1} + n_a/h_a.
inline std::array<Vec2, 6> wachspress_gradients(const Hexagon& v, const Vec2& x) {
  detail::require_convex(v);
  const auto f = detail::edge_frame(v, x);
  const auto w = detail::wachspress_weights(f);
  double sum = 0.0;
  for (double wa : w) sum += wa;

  std::array<double, 6> n;
  std::array<Vec2, 6> r;
  Vec2 mean_r = Vec2::Zero();
  for (int a = 0; a < 6; ++a) {
    const int prev = (a + 5) % 6;
    n[a] = w[a] / sum;
    r[a] = f.normal[prev] / f.distance[prev] + f.normal[a] / f.distance[a];
    mean_r += n[a] * r[a];
  }
  std::array<Vec2, 6> g;
  for (int a = 0; a < 6; ++a) g[a] = n[a] * (r[a] - mean_r);
  return g;
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

struct QuadratureRule {
  std::vector<Vec2> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

/// Six centroid-fan triangles, 3-point degree-2 Gauss rule on each.
inline QuadratureRule hex_quadrature(const Hexagon& v) {
  const double area = polygon_area(v);
  const double scale = detail::polygon_scale(v);
  if (!(area > 1e-14 * scale * scale)) throw GeometryError("zero-area hexagon");
  const Vec2 c = polygon_centroid(v);

  static constexpr double kBary[3][3] = {
      {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
      {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
      {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0},
  };
  QuadratureRule rule;
  rule.points.reserve(18);
  rule.weights.reserve(18);
  for (int a = 0; a < 6; ++a) {
    const Vec2& p = v[a];
    const Vec2& q = v[(a + 1) % 6];
    const double tri = 0.5 * cross2(p - c, q - c);
    if (!(tri > 0.0)) throw GeometryError("centroid fan triangle has non-positive area");
    for (const auto& b : kBary) {
      rule.points.push_back(b[0] * c + b[1] * p + b[2] * q);
      rule.weights.push_back(tri / 3.0);
    }
  }
  return rule;
}

// ---------------------------------------------------------------------------
// Mesh generation
// ---------------------------------------------------------------------------

/// Builds the honeycomb on an integer lattice (x in half element widths, y in
/// quarter element heights) and scales it affinely onto [0, lx] x [0, ly].
inline Mesh generate_mesh(int nex, int ney, double lx, double ly,
                          RowLayout layout = RowLayout::staggered) {
  if (nex < 1 || ney < 1) throw InvalidArgument("element counts must be at least 1");
  if (!(lx > 0.0) || !(ly > 0.0)) throw InvalidArgument("domain dimensions must be positive");
  if (layout == RowLayout::mirror_symmetric && nex < 2 && ney > 1) {
    throw InvalidArgument("mirror-symmetric layout needs nex >= 2");
  }

  Mesh mesh;
  mesh.nex = nex;
  mesh.ney = ney;
  mesh.lx = lx;
  mesh.ly = ly;
  mesh.layout = layout;

  const bool stagger_extends = layout == RowLayout::staggered && ney > 1;
  const long kx_max = 2L * nex + (stagger_extends ? 1 : 0);
  const long ky_max = 3L * ney + 1;
  const double sx = lx / static_cast<double>(kx_max);
  const double sy = ly / static_cast<double>(ky_max);

  std::unordered_map<long long, int> lattice_to_node;
  auto node_at = [&](long kx, long ky) {
    const long long key = static_cast<long long>(ky) * (kx_max + 1) + kx;
    auto [it, inserted] = lattice_to_node.try_emplace(key, mesh.num_nodes());
    if (inserted) {
      // Snap the far edges so the bounding box is exact.
      const double x = kx == kx_max ? lx : static_cast<double>(kx) * sx;
      const double y = ky == ky_max ? ly : static_cast<double>(ky) * sy;
      mesh.nodes.emplace_back(x, y);
    }
    return it->second;
  };

  static constexpr int kOffsets[6][2] = {{0, -2}, {1, -1}, {1, 1}, {0, 2}, {-1, 1}, {-1, -1}};
  mesh.row_start.push_back(0);
  for (int j = 0; j < ney; ++j) {
    const bool odd = (j % 2) == 1;
    const int count = (odd && layout == RowLayout::mirror_symmetric) ? nex - 1 : nex;
    const long cy = 3L * j + 2;
    for (int i = 0; i < count; ++i) {
      const long cx = 2L * i + (odd ? 2 : 1);
      std::array<int, 6> conn;
      for (int a = 0; a < 6; ++a) conn[a] = node_at(cx + kOffsets[a][0], cy + kOffsets[a][1]);
      mesh.elements.push_back(conn);
    }
    mesh.row_start.push_back(mesh.num_elements());
  }

  const double tol = 1e-9 * std::min(lx, ly);
  auto& sets = mesh.boundary_node_sets;
  sets["left"];
  sets["right"];
  sets["bottom"];
  sets["top"];
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    const Vec2& p = mesh.nodes[n];
    if (p.x() <= tol) sets["left"].push_back(n);
    if (p.x() >= lx - tol) sets["right"].push_back(n);
    if (p.y() <= tol) sets["bottom"].push_back(n);
    if (p.y() >= ly - tol) sets["top"].push_back(n);
  }
  return mesh;
}

/// Row index of element e.
inline int element_row(const Mesh& mesh, int e) {
  auto it = std::upper_bound(mesh.row_start.begin(), mesh.row_start.end(), e);
  return static_cast<int>(it - mesh.row_start.begin()) - 1;
}

inline std::vector<Vec2> element_centroids(const Mesh& mesh) {
  std::vector<Vec2> c(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) c[e] = polygon_centroid(mesh.element_vertices(e));
  return c;
}

/// Element paired with each element under reflection about x = Lx / 2, or
/// nullopt when the tessellation has no such symmetry.
inline std::optional<std::vector<int>> mirror_element_map(const Mesh& mesh) {
  const auto centroids = element_centroids(mesh);
  const double tol = 1e-9 * mesh.element_width();
  std::vector<int> map(mesh.num_elements(), -1);
  for (int j = 0; j < mesh.ney; ++j) {
    for (int e = mesh.row_start[j]; e < mesh.row_start[j + 1]; ++e) {
      const double target = mesh.lx - centroids[e].x();
      for (int f = mesh.row_start[j]; f < mesh.row_start[j + 1]; ++f) {
        if (std::abs(centroids[f].x() - target) <= tol) {
          map[e] = f;
          break;
        }
      }
      if (map[e] < 0) return std::nullopt;
    }
  }
  return map;
}

}  // namespace presstopo
