#pragma once

// Element-level integrals over a Wachspress hexagon. Everything here is a pure
// function of element geometry and scalar coefficients.

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "presstopo/errors.hpp"
#include "presstopo/honeymesh.hpp"

namespace presstopo {

using Matrix3 = Eigen::Matrix3d;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Matrix12 = Eigen::Matrix<double, 12, 12>;
using Matrix12x6 = Eigen::Matrix<double, 12, 6>;
using Matrix3x12 = Eigen::Matrix<double, 3, 12>;

/// Shape values and gradients tabulated at the hex_quadrature points.
struct ElementQuadrature {
  std::vector<std::array<double, 6>> shape;
  std::vector<std::array<Vec2, 6>> gradient;
  std::vector<double> weight;
  std::vector<Vec2> point;

  std::size_t size() const { return weight.size(); }
};

inline ElementQuadrature tabulate_element(const Hexagon& v) {
  const QuadratureRule rule = hex_quadrature(v);
  ElementQuadrature q;
  q.point = rule.points;
  q.weight = rule.weights;
  q.shape.reserve(rule.size());
  q.gradient.reserve(rule.size());
  for (const Vec2& x : rule.points) {
    q.shape.push_back(wachspress_shape(v, x));
    q.gradient.push_back(wachspress_gradients(v, x));
  }
  return q;
}

inline Matrix3 plane_stress_matrix(double e, double nu) {
  const double c = e / (1.0 - nu * nu);
  Matrix3 d;
  d << c, c * nu, 0.0,  //
      c * nu, c, 0.0,   //
      0.0, 0.0, c * (1.0 - nu) / 2.0;
  return d;
}

/// Strain-displacement matrix, dofs ordered (u_x, u_y) per node.
inline Matrix3x12 strain_displacement(const std::array<Vec2, 6>& grad) {
  Matrix3x12 b = Matrix3x12::Zero();
  for (int a = 0; a < 6; ++a) {
    b(0, 2 * a) = grad[a].x();
    b(1, 2 * a + 1) = grad[a].y();
    b(2, 2 * a) = grad[a].y();
    b(2, 2 * a + 1) = grad[a].x();
  }
  return b;
}

inline Matrix12 element_stiffness(const ElementQuadrature& q, double e, double nu,
                                  double thickness) {
  const Matrix3 d = plane_stress_matrix(e, nu);
  Matrix12 k = Matrix12::Zero();
  for (std::size_t g = 0; g < q.size(); ++g) {
    const Matrix3x12 b = strain_displacement(q.gradient[g]);
    k.noalias() += (q.weight[g] * thickness) * (b.transpose() * d * b);
  }
  // Exact symmetry regardless of summation order.
  return 0.5 * (k + k.transpose());
}

/// Plane-stress stiffness, thickness * int B^T C(E, nu) B dA.
inline Matrix12 element_stiffness(const Hexagon& v, double e, double nu, double thickness) {
  if (!(e > 0.0)) throw InvalidArgument("Young's modulus must be positive");
  if (!(nu >= 0.0 && nu < 0.5)) throw InvalidArgument("Poisson's ratio must lie in [0, 0.5)");
  if (!(thickness > 0.0)) throw InvalidArgument("thickness must be positive");
  return element_stiffness(tabulate_element(v), e, nu, thickness);
}

/// int grad N . grad N dA
inline Matrix6 element_laplacian(const ElementQuadrature& q) {
  Matrix6 l = Matrix6::Zero();
  for (std::size_t g = 0; g < q.size(); ++g)
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) l(a, b) += q.weight[g] * q.gradient[g][a].dot(q.gradient[g][b]);
  return 0.5 * (l + l.transpose());
}

/// int N N^T dA
inline Matrix6 element_mass(const ElementQuadrature& q) {
  Matrix6 m = Matrix6::Zero();
  for (std::size_t g = 0; g < q.size(); ++g)
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) m(a, b) += q.weight[g] * q.shape[g][a] * q.shape[g][b];
  return 0.5 * (m + m.transpose());
}

/// thickness * int N_u^T grad N_p dA: maps nodal pressures to the 12
/// displacement dofs; the consistent load is -T p.
inline Matrix12x6 element_transform(const ElementQuadrature& q, double thickness) {
  Matrix12x6 t = Matrix12x6::Zero();
  for (std::size_t g = 0; g < q.size(); ++g) {
    const double w = q.weight[g] * thickness;
    for (int a = 0; a < 6; ++a) {
      for (int b = 0; b < 6; ++b) {
        t(2 * a, b) += w * q.shape[g][a] * q.gradient[g][b].x();
        t(2 * a + 1, b) += w * q.shape[g][a] * q.gradient[g][b].y();
      }
    }
  }
  return t;
}

}  // namespace presstopo
