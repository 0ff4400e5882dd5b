#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include <Eigen/Geometry>

#include "presstopo/fe_model.hpp"
#include "presstopo/honeymesh.hpp"

using namespace presstopo;

namespace {

Hexagon regular_hexagon(double edge = 1.0) {
  Hexagon v;
  for (int a = 0; a < 6; ++a) {
    const double t = -M_PI / 2.0 + a * M_PI / 3.0;
    v[a] = Vec2(edge * std::cos(t), edge * std::sin(t));
  }
  return v;
}

Hexagon perturbed_hexagon(std::mt19937& rng) {
  std::uniform_real_distribution<double> jitter(-0.12, 0.12);
  Hexagon v = regular_hexagon();
  for (auto& p : v) p += Vec2(jitter(rng), jitter(rng));
  return v;
}

Vec2 random_interior(const Hexagon& v, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Convex combination biased away from the boundary.
  std::array<double, 6> w;
  double s = 0.0;
  for (double& x : w) s += (x = 0.05 + u(rng));
  Vec2 p = Vec2::Zero();
  for (int a = 0; a < 6; ++a) p += w[a] / s * v[a];
  return p;
}

using Edge = std::pair<int, int>;

std::map<Edge, int> edge_counts(const Mesh& m) {
  std::map<Edge, int> count;
  for (const auto& el : m.elements) {
    for (int a = 0; a < 6; ++a) {
      int i = el[a], j = el[(a + 1) % 6];
      if (i > j) std::swap(i, j);
      ++count[{i, j}];
    }
  }
  return count;
}

}  // namespace

TEST(GenerateMesh, SingleHexagon) {
  const Mesh m = generate_mesh(1, 1, 1.0, 1.0);
  EXPECT_EQ(m.num_elements(), 1);
  EXPECT_EQ(m.num_nodes(), 6);
  double xmin = 1e9, xmax = -1e9, ymin = 1e9, ymax = -1e9;
  for (const auto& p : m.nodes) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  EXPECT_DOUBLE_EQ(xmin, 0.0);
  EXPECT_DOUBLE_EQ(xmax, 1.0);
  EXPECT_DOUBLE_EQ(ymin, 0.0);
  EXPECT_DOUBLE_EQ(ymax, 1.0);
}

TEST(GenerateMesh, ArchResolution) {
  const Mesh m = generate_mesh(200, 100, 0.2, 0.1);
  EXPECT_EQ(m.num_elements(), 20000);
}

TEST(GenerateMesh, InteriorEdgesSharedByTwo) {
  const Mesh m = generate_mesh(3, 2, 0.3, 0.2);
  ASSERT_EQ(m.num_elements(), 6);
  const auto count = edge_counts(m);
  // Brute-force: an edge is interior iff some second element also contains both nodes.
  for (const auto& [edge, c] : count) {
    int holders = 0;
    for (const auto& el : m.elements) {
      const std::set<int> s(el.begin(), el.end());
      if (s.count(edge.first) && s.count(edge.second)) ++holders;
    }
    EXPECT_EQ(c, holders);
    EXPECT_LE(c, 2);
  }
  int interior = 0;
  for (const auto& [edge, c] : count) interior += c == 2;
  // 3 + 3 hexagons: 2 + 2 within rows, 5 between rows.
  EXPECT_EQ(interior, 9);
}

TEST(GenerateMesh, TopologyInvariants) {
  for (auto layout : {RowLayout::staggered, RowLayout::mirror_symmetric}) {
    const Mesh m = generate_mesh(7, 5, 0.21, 0.1, layout);
    double total = 0.0;
    for (int e = 0; e < m.num_elements(); ++e) {
      const Hexagon v = m.element_vertices(e);
      EXPECT_GT(polygon_area(v), 0.0);
      total += polygon_area(v);
      const std::set<int> distinct(m.elements[e].begin(), m.elements[e].end());
      EXPECT_EQ(distinct.size(), 6u);
      for (const auto& p : v) {
        EXPECT_GE(p.x(), -1e-12);
        EXPECT_LE(p.x(), m.lx + 1e-12);
        EXPECT_GE(p.y(), -1e-12);
        EXPECT_LE(p.y(), m.ly + 1e-12);
      }
    }
    // Shared node pairs are always full edges.
    for (int e = 0; e < m.num_elements(); ++e) {
      for (int f = e + 1; f < m.num_elements(); ++f) {
        std::vector<int> shared;
        for (int a : m.elements[e])
          for (int b : m.elements[f])
            if (a == b) shared.push_back(a);
        if (shared.size() > 1) {
          ASSERT_EQ(shared.size(), 2u);
          const auto& el = m.elements[e];
          const int ia = static_cast<int>(std::find(el.begin(), el.end(), shared[0]) - el.begin());
          const int ib = static_cast<int>(std::find(el.begin(), el.end(), shared[1]) - el.begin());
          EXPECT_TRUE((ia - ib + 6) % 6 == 1 || (ib - ia + 6) % 6 == 1);
        }
      }
    }
    // Sum of areas equals the area enclosed by the boundary edges.
    double enclosed = 0.0;
    const auto count = edge_counts(m);
    for (const auto& el : m.elements) {
      for (int a = 0; a < 6; ++a) {
        int i = el[a], j = el[(a + 1) % 6];
        if (count.at({std::min(i, j), std::max(i, j)}) == 1) {
          enclosed += 0.5 * cross2(m.nodes[i], m.nodes[j]);
        }
      }
    }
    EXPECT_NEAR(total, enclosed, 1e-9 * enclosed);
  }
}

TEST(GenerateMesh, MirrorLayout) {
  const Mesh stag = generate_mesh(6, 4, 0.2, 0.1);
  EXPECT_FALSE(mirror_element_map(stag).has_value());
  const Mesh sym = generate_mesh(6, 4, 0.2, 0.1, RowLayout::mirror_symmetric);
  EXPECT_EQ(sym.num_elements(), 6 * 2 + 5 * 2);
  const auto map = mirror_element_map(sym);
  ASSERT_TRUE(map.has_value());
  for (int e = 0; e < sym.num_elements(); ++e) EXPECT_EQ((*map)[(*map)[e]], e);
}

TEST(GenerateMesh, RejectsBadArguments) {
  EXPECT_THROW(generate_mesh(0, 1, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(generate_mesh(1, -2, 1.0, 1.0), InvalidArgument);
  EXPECT_THROW(generate_mesh(1, 1, 0.0, 1.0), InvalidArgument);
  EXPECT_THROW(generate_mesh(1, 1, 1.0, -1.0), InvalidArgument);
}

TEST(GenerateMesh, BoundarySets) {
  const Mesh m = generate_mesh(4, 3, 0.4, 0.3);
  for (const char* name : {"left", "right", "bottom", "top"}) EXPECT_FALSE(m.boundary(name).empty());
  for (int n : m.boundary("top")) EXPECT_DOUBLE_EQ(m.nodes[n].y(), 0.3);
  EXPECT_THROW(m.boundary("front"), InvalidArgument);
}

TEST(Wachspress, RegularCentroid) {
  const Hexagon v = regular_hexagon();
  const auto n = wachspress_shape(v, Vec2::Zero());
  for (double x : n) EXPECT_NEAR(x, 1.0 / 6.0, 1e-14);
}

TEST(Wachspress, PartitionAndReproduction) {
  std::mt19937 rng(7);
  const Hexagon reg = regular_hexagon();
  for (int k = 0; k < 100; ++k) {
    const Vec2 x = random_interior(reg, rng);
    const auto n = wachspress_shape(reg, x);
    double s = 0.0;
    Vec2 r = Vec2::Zero();
    for (int a = 0; a < 6; ++a) {
      s += n[a];
      r += n[a] * reg[a];
      EXPECT_GT(n[a], 0.0);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_NEAR((r - x).norm(), 0.0, 1e-12);
  }
  for (int k = 0; k < 50; ++k) {
    const Hexagon v = perturbed_hexagon(rng);
    const auto n = wachspress_shape(v, random_interior(v, rng));
    double s = 0.0;
    for (double x : n) s += x;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Wachspress, GradientsSumToZero) {
  std::mt19937 rng(11);
  for (int k = 0; k < 50; ++k) {
    const Hexagon v = perturbed_hexagon(rng);
    const auto g = wachspress_gradients(v, random_interior(v, rng));
    Vec2 s = Vec2::Zero();
    for (const auto& x : g) s += x;
    EXPECT_LT(s.norm(), 1e-12);
  }
}

TEST(Wachspress, RegularCentroidGradientsRotate) {
  const Hexagon v = regular_hexagon();
  const auto g = wachspress_gradients(v, Vec2::Zero());
  const Eigen::Rotation2Dd rot(M_PI / 3.0);
  for (int a = 0; a < 6; ++a) {
    EXPECT_LT((rot * g[a] - g[(a + 1) % 6]).norm(), 1e-13);
  }
}

TEST(Wachspress, GradientsMatchFiniteDifferences) {
  std::mt19937 rng(3);
  const double h = 1e-6;
  for (int k = 0; k < 20; ++k) {
    const Hexagon v = perturbed_hexagon(rng);
    const Vec2 x = random_interior(v, rng);
    const auto g = wachspress_gradients(v, x);
    for (int c = 0; c < 2; ++c) {
      Vec2 dx = Vec2::Zero();
      dx[c] = h;
      const auto np = wachspress_shape(v, x + dx);
      const auto nm = wachspress_shape(v, x - dx);
      for (int a = 0; a < 6; ++a) {
        const double fd = (np[a] - nm[a]) / (2.0 * h);
        EXPECT_LT(std::abs(fd - g[a][c]), 1e-5 * std::max(1.0, std::abs(g[a][c])));
      }
    }
  }
}

TEST(Wachspress, Errors) {
  Hexagon v = regular_hexagon();
  EXPECT_THROW(wachspress_shape(v, v[0]), DomainError);
  EXPECT_THROW(wachspress_shape(v, Vec2(3.0, 0.0)), DomainError);
  EXPECT_THROW(wachspress_shape(v, 0.5 * (v[1] + v[2])), DomainError);
  Hexagon dented = v;
  dented[1] = 0.2 * v[1];  // reflex vertex
  EXPECT_THROW(wachspress_shape(dented, Vec2(0.0, 0.3)), GeometryError);
}

TEST(Quadrature, RegularHexagonArea) {
  const auto q = hex_quadrature(regular_hexagon());
  double s = 0.0;
  for (double w : q.weights) {
    EXPECT_GT(w, 0.0);
    s += w;
  }
  EXPECT_NEAR(s, 3.0 * std::sqrt(3.0) / 2.0, 1e-12);
}

TEST(Quadrature, FirstMomentGivesCentroid) {
  std::mt19937 rng(5);
  for (int k = 0; k < 10; ++k) {
    Hexagon v = perturbed_hexagon(rng);
    for (auto& p : v) p += Vec2(0.7, -0.2);
    const auto q = hex_quadrature(v);
    double area = 0.0;
    Vec2 m = Vec2::Zero();
    for (std::size_t g = 0; g < q.size(); ++g) {
      area += q.weights[g];
      m += q.weights[g] * q.points[g];
    }
    EXPECT_NEAR(area, polygon_area(v), 1e-12 * polygon_area(v));
    EXPECT_LT((m / area - polygon_centroid(v)).norm(), 1e-12);
  }
}

TEST(Quadrature, DegenerateElement) {
  Hexagon v;
  for (int a = 0; a < 6; ++a) v[a] = Vec2(a, 0.0);
  EXPECT_THROW(hex_quadrature(v), GeometryError);
}

TEST(FeModel, BasisDefectsOnMesh) {
  const Mesh m = generate_mesh(6, 4, 0.2, 0.1);
  for (int e = 0; e < m.num_elements(); ++e) {
    const Hexagon v = m.element_vertices(e);
    const auto d = basis_defects(v, tabulate_element(v));
    EXPECT_LT(d.partition, 1e-10);
    EXPECT_LT(d.reproduction, 1e-10);
    EXPECT_LT(d.gradient_sum, 1e-10);
    EXPECT_LT(d.gradient_reproduction, 1e-10);
  }
}
