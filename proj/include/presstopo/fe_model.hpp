#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/SparseCore>

#include "presstopo/element_kernels.hpp"
#include "presstopo/errors.hpp"
#include "presstopo/honeymesh.hpp"
#include "presstopo/sparse.hpp"

namespace presstopo {

/// Design-independent integrals of one element.
struct ElementIntegrals {
  double area = 0.0;
  Matrix6 laplacian;
  Matrix6 mass;
  Matrix12x6 transform;
  Matrix12 unit_stiffness;  // E = 1 Pa
};

/// Largest partition-of-unity and linear-reproduction defects over the
/// quadrature points of an element.
struct BasisDefects {
  double partition = 0.0;
  double reproduction = 0.0;
  double gradient_sum = 0.0;
  double gradient_reproduction = 0.0;
};

inline BasisDefects basis_defects(const Hexagon& v, const ElementQuadrature& q) {
  BasisDefects d;
  const double scale = detail::polygon_scale(v);
  for (std::size_t g = 0; g < q.size(); ++g) {
    double s = 0.0;
    Vec2 x = Vec2::Zero();
    Vec2 gs = Vec2::Zero();
    Eigen::Matrix2d gx = Eigen::Matrix2d::Zero();
    for (int a = 0; a < 6; ++a) {
      s += q.shape[g][a];
      x += q.shape[g][a] * v[a];
      gs += q.gradient[g][a];
      gx += v[a] * q.gradient[g][a].transpose();
    }
    d.partition = std::max(d.partition, std::abs(s - 1.0));
    d.reproduction = std::max(d.reproduction, (x - q.point[g]).norm() / scale);
    d.gradient_sum = std::max(d.gradient_sum, gs.norm() * scale);
    d.gradient_reproduction =
        std::max(d.gradient_reproduction, (gx - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff());
  }
  return d;
}

/// Mesh plus everything about the discretization that does not depend on the
/// design: per-element integrals, assembly patterns and the global pressure to
/// load transformation.
class FeModel {
 public:
  FeModel(Mesh mesh, double nu, double thickness)
      : mesh_(std::move(mesh)), nu_(nu), thickness_(thickness) {
    if (!(thickness > 0.0)) throw InvalidArgument("thickness must be positive");
    if (!(nu >= 0.0 && nu < 0.5)) throw InvalidArgument("Poisson's ratio must lie in [0, 0.5)");
    const int nel = mesh_.num_elements();
    const int nn = mesh_.num_nodes();
    elements_.resize(nel);
    std::vector<int> node_dofs;
    std::vector<int> disp_dofs;
    node_dofs.reserve(static_cast<std::size_t>(nel) * 6);
    disp_dofs.reserve(static_cast<std::size_t>(nel) * 12);
    std::vector<Eigen::Triplet<double, int>> t_triplets;
    t_triplets.reserve(static_cast<std::size_t>(nel) * 72);

    for (int e = 0; e < nel; ++e) {
      const Hexagon v = mesh_.element_vertices(e);
      const ElementQuadrature q = tabulate_element(v);
#ifndef NDEBUG
      const BasisDefects defects = basis_defects(v, q);
      if (defects.partition > 1e-10 || defects.reproduction > 1e-10) {
        throw GeometryError("Wachspress basis defect on element " + std::to_string(e));
      }
#endif
      ElementIntegrals& ei = elements_[e];
      ei.area = polygon_area(v);
      ei.laplacian = element_laplacian(q);
      ei.mass = element_mass(q);
      ei.transform = element_transform(q, thickness_);
      ei.unit_stiffness = element_stiffness(q, 1.0, nu_, thickness_);

      const auto& conn = mesh_.elements[e];
      for (int a = 0; a < 6; ++a) {
        node_dofs.push_back(conn[a]);
        disp_dofs.push_back(2 * conn[a]);
        disp_dofs.push_back(2 * conn[a] + 1);
      }
      for (int b = 0; b < 6; ++b)
        for (int a = 0; a < 6; ++a)
          for (int c = 0; c < 2; ++c)
            t_triplets.emplace_back(2 * conn[a] + c, conn[b], ei.transform(2 * a + c, b));
    }
    node_pattern_ = AssemblyPattern(nn, 6, std::move(node_dofs));
    dof_pattern_ = AssemblyPattern(2 * nn, 12, std::move(disp_dofs));
    transform_.resize(2 * nn, nn);
    transform_.setFromTriplets(t_triplets.begin(), t_triplets.end());
    transform_.makeCompressed();
  }

  const Mesh& mesh() const { return mesh_; }
  double nu() const { return nu_; }
  double thickness() const { return thickness_; }
  int num_elements() const { return mesh_.num_elements(); }
  int num_nodes() const { return mesh_.num_nodes(); }
  const ElementIntegrals& element(int e) const { return elements_[e]; }
  const AssemblyPattern& node_pattern() const { return node_pattern_; }
  const AssemblyPattern& dof_pattern() const { return dof_pattern_; }
  const SparseMatrix& transform() const { return transform_; }

  /// 6 nodal values of a global nodal vector on element e.
  Eigen::Matrix<double, 6, 1> gather_nodes(int e, const VectorXd& global) const {
    Eigen::Matrix<double, 6, 1> out;
    for (int a = 0; a < 6; ++a) out[a] = global[mesh_.elements[e][a]];
    return out;
  }

  /// 12 displacement dofs of element e.
  Eigen::Matrix<double, 12, 1> gather_dofs(int e, const VectorXd& global) const {
    Eigen::Matrix<double, 12, 1> out;
    for (int a = 0; a < 6; ++a) {
      out[2 * a] = global[2 * mesh_.elements[e][a]];
      out[2 * a + 1] = global[2 * mesh_.elements[e][a] + 1];
    }
    return out;
  }

 private:
  Mesh mesh_;
  double nu_;
  double thickness_;
  std::vector<ElementIntegrals> elements_;
  AssemblyPattern node_pattern_;
  AssemblyPattern dof_pattern_;
  SparseMatrix transform_;
};

}  // namespace presstopo
