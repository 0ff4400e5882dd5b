#pragma once

// Plane-stress elasticity with SIMP-interpolated moduli.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "presstopo/element_kernels.hpp"
#include "presstopo/errors.hpp"
#include "presstopo/fe_model.hpp"
#include "presstopo/fields.hpp"
#include "presstopo/sparse.hpp"

namespace presstopo {

struct ElasticState {
  SparseMatrix k;  // 2 nodes square, N/m
  VectorXd u;      // m
  VectorXd f;      // N
  std::vector<int> fixed_dofs;
  double compliance = 0.0;  // N m
  double relative_residual = 0.0;
  std::uint64_t design_hash = 0;
  std::shared_ptr<ReducedSystem> system;
  std::uint64_t factorization_stamp = 0;
};

inline std::vector<double> element_moduli(const DesignField& design, const MaterialSet& mat) {
  std::vector<double> e(design.num_elements());
  std::vector<double> row(design.num_variables());
  for (int i = 0; i < design.num_elements(); ++i) {
    for (int k = 0; k < design.num_variables(); ++k) row[k] = design.filtered(i, k);
    e[i] = interpolate_modulus(row, mat);
  }
  return e;
}

inline SparseMatrix assemble_stiffness(const FeModel& model, const DesignField& design,
                                       const MaterialSet& mat) {
  if (design.num_elements() != model.num_elements()) {
    throw InvalidArgument("design does not match the mesh");
  }
  if (mat.nu != model.nu() || mat.thickness != model.thickness()) {
    throw InvalidArgument("material set disagrees with the model's nu or thickness");
  }
  const auto moduli = element_moduli(design, mat);
  Matrix12 block;
  return model.dof_pattern().assemble([&](int e) -> const Matrix12& {
    block = moduli[e] * model.element(e).unit_stiffness;
    return block;
  });
}

/// Throws when the constrained dofs leave a rigid-body mode free.
inline void check_rigid_modes(const Mesh& mesh, const std::vector<int>& fixed_dofs) {
  bool any_x = false;
  bool any_y = false;
  for (int d : fixed_dofs) (d % 2 == 0 ? any_x : any_y) = true;
  if (!any_x) throw SolverError("insufficient supports: rigid x-translation is unconstrained");
  if (!any_y) throw SolverError("insufficient supports: rigid y-translation is unconstrained");

  Vec2 centre = Vec2::Zero();
  for (const Vec2& p : mesh.nodes) centre += p;
  centre /= static_cast<double>(mesh.num_nodes());
  // Gram matrix of the three rigid modes restricted to the fixed dofs.
  Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
  const double len = std::max(mesh.lx, mesh.ly);
  for (int d : fixed_dofs) {
    const Vec2 r = (mesh.nodes[d / 2] - centre) / len;
    Eigen::Vector3d m;
    if (d % 2 == 0) m << 1.0, 0.0, -r.y();
    else m << 0.0, 1.0, r.x();
    gram += m * m.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(gram);
  if (eig.eigenvalues()[0] <= 1e-12 * eig.eigenvalues()[2]) {
    throw SolverError("insufficient supports: rigid in-plane rotation is unconstrained");
  }
}

/// Solves K u = F with u = 0 on `fixed_dofs`; compliance = u^T F.
inline ElasticState solve_displacements(const FeModel& model, SparseMatrix k, VectorXd f,
                                        std::vector<int> fixed_dofs,
                                        std::shared_ptr<ReducedSystem> reuse = nullptr) {
  const int ndof = 2 * model.num_nodes();
  if (k.rows() != ndof || f.size() != ndof) throw InvalidArgument("stiffness/force size mismatch");
  if (fixed_dofs.empty()) throw InvalidArgument("no displacement constraints given");
  std::sort(fixed_dofs.begin(), fixed_dofs.end());
  fixed_dofs.erase(std::unique(fixed_dofs.begin(), fixed_dofs.end()), fixed_dofs.end());
  for (int d : fixed_dofs) {
    if (d < 0 || d >= ndof) throw InvalidArgument("fixed dof index out of range");
  }
  check_rigid_modes(model.mesh(), fixed_dofs);

  std::vector<bool> fixed(ndof, false);
  for (int d : fixed_dofs) fixed[d] = true;

  ElasticState s;
  s.system = std::move(reuse);
  if (!s.system || s.system->fixed_mask() != fixed) {
    s.system = std::make_shared<ReducedSystem>(model.dof_pattern().pattern(), fixed);
  }
  s.system->factorize(k);
  s.factorization_stamp = s.system->stamp();
  const auto result = s.system->solve(k, f, VectorXd::Zero(ndof));
  s.relative_residual = result.rhs_norm > 0.0 ? result.residual / result.rhs_norm : 0.0;
  if (!(s.relative_residual < 1e-9)) {
    std::ostringstream msg;
    msg << "displacement solve did not converge, relative residual " << s.relative_residual;
    throw SolverError(msg.str());
  }
  s.k = std::move(k);
  s.u = result.x;
  s.f = std::move(f);
  s.fixed_dofs = std::move(fixed_dofs);
  s.compliance = s.u.dot(s.f);
  return s;
}

/// Nodal dof indices for the given nodes; `components` is 0 (x), 1 (y) or 2 (both).
inline std::vector<int> node_dofs(const std::vector<int>& nodes, int components) {
  std::vector<int> out;
  for (int n : nodes) {
    if (components == 0 || components == 2) out.push_back(2 * n);
    if (components == 1 || components == 2) out.push_back(2 * n + 1);
  }
  return out;
}

}  // namespace presstopo
