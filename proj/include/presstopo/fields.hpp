#pragma once

// Design variables, density filtering, extended SIMP interpolation and
// volume measures.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "presstopo/errors.hpp"
#include "presstopo/honeymesh.hpp"

namespace presstopo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Candidate materials, stiffest last. One design variable per material:
/// column 0 is the solid/void topology variable, column k >= 1 selects
/// between material k and the stiffer ones.
struct MaterialSet {
  std::vector<double> youngs;  // Pa, strictly ascending
  double e_min = 0.0;          // Pa
  double penalty = 3.0;
  double nu = 0.4;
  double thickness = 0.001;  // m

  static MaterialSet make(std::vector<double> youngs, double nu, double thickness,
                          double penalty = 3.0) {
    if (youngs.empty()) throw InvalidArgument("at least one candidate material is required");
    if (youngs.size() > 3) throw InvalidArgument("at most three candidate materials are supported");
    for (std::size_t k = 0; k < youngs.size(); ++k) {
      if (!(youngs[k] > 0.0)) throw InvalidArgument("Young's moduli must be positive");
      if (k > 0 && !(youngs[k] > youngs[k - 1])) {
        throw InvalidArgument("Young's moduli must be strictly ascending");
      }
    }
    if (!(nu >= 0.0 && nu < 0.5)) throw InvalidArgument("Poisson's ratio must lie in [0, 0.5)");
    if (!(thickness > 0.0)) throw InvalidArgument("thickness must be positive");
    if (!(penalty >= 1.0)) throw InvalidArgument("SIMP penalty must be at least 1");
    MaterialSet m;
    m.youngs = std::move(youngs);
    m.e_min = 1e-6 * m.youngs.front();
    m.penalty = penalty;
    m.nu = nu;
    m.thickness = thickness;
    return m;
  }

  int num_variables() const { return static_cast<int>(youngs.size()); }
};

namespace detail {

inline constexpr double kDensityTolerance = 1e-12;

inline double checked_density(double r) {
  if (!(r >= -kDensityTolerance && r <= 1.0 + kDensityTolerance)) {
    throw InvalidArgument("density " + std::to_string(r) + " outside [0, 1]");
  }
  return std::clamp(r, 0.0, 1.0);
}

}  // namespace detail

/// E = (1 - r1^p) E_min + r1^p [(1 - r2^p) E_1 + r2^p [(1 - r3^p) E_2 + r3^p E_3]],
/// truncated to the number of candidate materials.
inline double interpolate_modulus(std::span<const double> design, const MaterialSet& mat) {
  const int m = mat.num_variables();
  if (static_cast<int>(design.size()) != m) {
    throw InvalidArgument("design row has " + std::to_string(design.size()) +
                          " entries, expected " + std::to_string(m));
  }
  // Nested from the stiffest material outwards.
  double s = mat.youngs[m - 1];
  for (int k = m - 1; k >= 0; --k) {
    const double lower = k == 0 ? mat.e_min : mat.youngs[k - 1];
    const double t = std::pow(detail::checked_density(design[k]), mat.penalty);
    s = (1.0 - t) * lower + t * s;
  }
  return s;
}

/// dE/dr_k = (prod_{i<k} r_i^p) p r_k^{p-1} (S_k - V_{k-1}), where S_k is the
/// nested modulus below level k and V_{k-1} the phase it blends against.
inline std::vector<double> modulus_derivatives(std::span<const double> design,
                                               const MaterialSet& mat) {
  const int m = mat.num_variables();
  if (static_cast<int>(design.size()) != m) {
    throw InvalidArgument("design row has wrong number of entries");
  }
  const double p = mat.penalty;
  std::vector<double> r(m), t(m), inner(m + 1);
  for (int k = 0; k < m; ++k) {
    r[k] = detail::checked_density(design[k]);
    t[k] = std::pow(r[k], p);
  }
  inner[m] = mat.youngs[m - 1];
  for (int k = m - 1; k >= 0; --k) {
    const double lower = k == 0 ? mat.e_min : mat.youngs[k - 1];
    inner[k] = (1.0 - t[k]) * lower + t[k] * inner[k + 1];
  }
  std::vector<double> d(m);
  double prefix = 1.0;
  for (int k = 0; k < m; ++k) {
    const double lower = k == 0 ? mat.e_min : mat.youngs[k - 1];
    const double dt = r[k] == 0.0 ? (p == 1.0 ? 1.0 : 0.0) : p * std::pow(r[k], p - 1.0);
    d[k] = prefix * dt * (inner[k + 1] - lower);
    prefix *= t[k];
  }
  return d;
}

// ---------------------------------------------------------------------------
// Density filter
// ---------------------------------------------------------------------------

struct FilterOperator {
  Eigen::SparseMatrix<double, Eigen::RowMajor, int> h;
  double radius = 0.0;
  bool is_identity = false;  // radius below the closest centroid spacing

  int size() const { return static_cast<int>(h.rows()); }
};

/// Row i holds v_j w_ij / sum_k v_k w_ik with w_ij = max(0, 1 - |x_i - x_j| / r).
inline FilterOperator build_filter(const Mesh& mesh, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("filter radius must be positive");
  const int nel = mesh.num_elements();
  const auto centroids = element_centroids(mesh);
  std::vector<double> volume(nel);
  for (int e = 0; e < nel; ++e) volume[e] = polygon_area(mesh.element_vertices(e));

  // Uniform bins of edge `radius` so only the 3x3 neighbourhood is scanned.
  const int bx = std::max(1, static_cast<int>(std::ceil(mesh.lx / radius)));
  const int by = std::max(1, static_cast<int>(std::ceil(mesh.ly / radius)));
  auto bin_of = [&](const Vec2& c) {
    const int ix = std::clamp(static_cast<int>(c.x() / radius), 0, bx - 1);
    const int iy = std::clamp(static_cast<int>(c.y() / radius), 0, by - 1);
    return std::pair{ix, iy};
  };
  std::vector<std::vector<int>> bins(static_cast<std::size_t>(bx) * by);
  for (int e = 0; e < nel; ++e) {
    auto [ix, iy] = bin_of(centroids[e]);
    bins[static_cast<std::size_t>(iy) * bx + ix].push_back(e);
  }

  FilterOperator f;
  f.radius = radius;
  std::vector<Eigen::Triplet<double, int>> triplets;
  std::vector<std::pair<int, double>> row;
  double min_spacing = std::numeric_limits<double>::infinity();
  for (int i = 0; i < nel; ++i) {
    row.clear();
    auto [ix, iy] = bin_of(centroids[i]);
    for (int jy = std::max(0, iy - 1); jy <= std::min(by - 1, iy + 1); ++jy) {
      for (int jx = std::max(0, ix - 1); jx <= std::min(bx - 1, ix + 1); ++jx) {
        for (int j : bins[static_cast<std::size_t>(jy) * bx + jx]) {
          const double dist = (centroids[i] - centroids[j]).norm();
          if (j != i) min_spacing = std::min(min_spacing, dist);
          const double w = 1.0 - dist / radius;
          if (w > 0.0) row.emplace_back(j, volume[j] * w);
        }
      }
    }
    std::sort(row.begin(), row.end());
    double denom = 0.0;
    for (const auto& [j, w] : row) denom += w;
    for (const auto& [j, w] : row) triplets.emplace_back(i, j, w / denom);
  }
  f.h.resize(nel, nel);
  f.h.setFromTriplets(triplets.begin(), triplets.end());
  f.h.makeCompressed();
  f.is_identity = f.h.nonZeros() == nel;
  return f;
}

inline VectorXd apply_filter(const FilterOperator& f, const VectorXd& raw) {
  if (raw.size() != f.size()) throw InvalidArgument("design column length does not match filter");
  return f.h * raw;
}

/// d(objective)/d(raw) = H^T d(objective)/d(filtered).
inline VectorXd chain_filter(const FilterOperator& f, const VectorXd& d_filtered) {
  if (d_filtered.size() != f.size()) {
    throw InvalidArgument("sensitivity column length does not match filter");
  }
  return f.h.transpose() * d_filtered;
}

// ---------------------------------------------------------------------------
// Design field
// ---------------------------------------------------------------------------

struct DesignField {
  MatrixXd raw;       // Nel x m
  MatrixXd filtered;  // Nel x m
  VectorXd element_volumes;  // m^3

  int num_elements() const { return static_cast<int>(raw.rows()); }
  int num_variables() const { return static_cast<int>(raw.cols()); }

  /// Uniform raw field `values[k]` in column k, filtered through `f`.
  static DesignField uniform(const Mesh& mesh, const MaterialSet& mat, const FilterOperator& f,
                             std::span<const double> values) {
    if (static_cast<int>(values.size()) != mat.num_variables()) {
      throw InvalidArgument("one initial value per design variable is required");
    }
    MatrixXd raw(mesh.num_elements(), mat.num_variables());
    for (int k = 0; k < raw.cols(); ++k) raw.col(k).setConstant(values[k]);
    return from_raw(mesh, mat, f, std::move(raw));
  }

  static DesignField from_raw(const Mesh& mesh, const MaterialSet& mat, const FilterOperator& f,
                              MatrixXd raw) {
    if (raw.rows() != mesh.num_elements() || raw.cols() != mat.num_variables()) {
      throw InvalidArgument("raw design has wrong shape");
    }
    DesignField d;
    d.element_volumes.resize(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) {
      d.element_volumes[e] = polygon_area(mesh.element_vertices(e)) * mat.thickness;
    }
    d.raw = std::move(raw);
    d.refilter(f);
    return d;
  }

  void refilter(const FilterOperator& f) {
    if (raw.minCoeff() < 0.0 || raw.maxCoeff() > 1.0) {
      throw InvalidArgument("raw design entries must lie in [0, 1]");
    }
    filtered.resize(raw.rows(), raw.cols());
    for (int k = 0; k < raw.cols(); ++k) filtered.col(k) = apply_filter(f, raw.col(k));
    // Row sums of H are one only to rounding.
    filtered = filtered.cwiseMax(0.0).cwiseMin(1.0);
  }

  std::vector<double> filtered_row(int e) const {
    std::vector<double> r(filtered.cols());
    for (int k = 0; k < filtered.cols(); ++k) r[k] = filtered(e, k);
    return r;
  }
};

/// g_k = sum_i v_i rho~_ik / sum_i v_i for each design column.
inline VectorXd volume_measures(const DesignField& d) {
  if (d.element_volumes.size() != d.filtered.rows()) {
    throw InvalidArgument("element volume count does not match design");
  }
  const double total = d.element_volumes.sum();
  return (d.filtered.transpose() * d.element_volumes) / total;
}

/// FNV-1a over the filtered field; ties analysis states to the design they
/// were computed for.
inline std::uint64_t design_fingerprint(const MatrixXd& m) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
  const std::size_t n = static_cast<std::size_t>(m.size()) * sizeof(double);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  h ^= static_cast<std::uint64_t>(m.rows()) * 0x9E3779B97F4A7C15ULL;
  return h;
}

}  // namespace presstopo
