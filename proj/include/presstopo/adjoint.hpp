#pragma once

// Adjoint sensitivities of compliance through the coupled system
//   K(rho) u = -T p,   A(rho) p = 0 (with prescribed boundary pressures),
// and of the linear volume constraints.

#include <vector>

#include "presstopo/darcy.hpp"
#include "presstopo/elasticity.hpp"
#include "presstopo/errors.hpp"
#include "presstopo/fe_model.hpp"
#include "presstopo/fields.hpp"

namespace presstopo {

struct SensitivityBundle {
  MatrixXd d_compliance;               // Nel x m, w.r.t. raw variables
  std::vector<MatrixXd> d_constraints;  // one Nel x m matrix per volume measure
};

struct AdjointOptions {
  // Drop the flow adjoint term, i.e. treat the loads as design-independent.
  bool include_load_term = true;
};

/// Sensitivities with respect to the filtered variables:
///   dc/drho~_i1 = -u_e^T dk_e u_e + lambda^T dA_e p_e,
///   dc/drho~_ij = -u_e^T dk_e u_e  (j >= 2),
/// where A lambda = 2 T^T u with lambda = 0 on prescribed pressure nodes.
inline MatrixXd compliance_sensitivity_filtered(const FeModel& model, const DesignField& design,
                                                const MaterialSet& mat, const FlowParams& fp,
                                                const PressureState& ps, const ElasticState& es,
                                                const AdjointOptions& opt = {}) {
  const std::uint64_t hash = design_fingerprint(design.filtered);
  if (ps.design_hash != hash || es.design_hash != hash) {
    throw ConsistencyError("pressure/elastic state was computed for a different design");
  }
  if (!ps.solved()) {
    throw ConsistencyError("pressure state is unsolved or its factorization was reused since");
  }
  if (es.u.size() != 2 * model.num_nodes()) throw ConsistencyError("elastic state has not been solved");

  VectorXd lambda;
  if (opt.include_load_term) {
    const VectorXd rhs = 2.0 * (ps.t.transpose() * es.u);
    lambda = ps.system->solve(ps.a, rhs, VectorXd::Zero(model.num_nodes())).x;
  }

  const int nel = model.num_elements();
  const int m = design.num_variables();
  MatrixXd d(nel, m);
  std::vector<double> row(m);
  for (int e = 0; e < nel; ++e) {
    for (int k = 0; k < m; ++k) row[k] = design.filtered(e, k);
    const auto de = modulus_derivatives(row, mat);
    const auto ue = model.gather_dofs(e, es.u);
    const double strain_energy = ue.dot(model.element(e).unit_stiffness * ue);
    for (int k = 0; k < m; ++k) d(e, k) = -de[k] * strain_energy;
    if (opt.include_load_term) {
      const auto pe = model.gather_nodes(e, ps.p);
      const auto le = model.gather_nodes(e, lambda);
      d(e, 0) += le.dot(element_flow_derivative(model.element(e), row[0], fp) * pe);
    }
  }
  return d;
}

/// Raw-variable sensitivities, H^T applied column by column.
inline MatrixXd compliance_sensitivity(const FeModel& model, const DesignField& design,
                                       const MaterialSet& mat, const FlowParams& fp,
                                       const FilterOperator& filter, const PressureState& ps,
                                       const ElasticState& es, const AdjointOptions& opt = {}) {
  const MatrixXd df = compliance_sensitivity_filtered(model, design, mat, fp, ps, es, opt);
  MatrixXd out(df.rows(), df.cols());
  for (int k = 0; k < df.cols(); ++k) out.col(k) = chain_filter(filter, df.col(k));
  return out;
}

/// Gradients of g_k = sum v_i rho~_ik / sum v_i with respect to the raw variables.
inline std::vector<MatrixXd> constraint_sensitivities(const DesignField& design,
                                                      const FilterOperator& filter) {
  const VectorXd share = design.element_volumes / design.element_volumes.sum();
  const VectorXd chained = chain_filter(filter, share);
  std::vector<MatrixXd> out;
  for (int k = 0; k < design.num_variables(); ++k) {
    MatrixXd g = MatrixXd::Zero(design.num_elements(), design.num_variables());
    g.col(k) = chained;
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace presstopo
