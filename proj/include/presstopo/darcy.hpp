#pragma once

// Darcy flow with a drainage sink, used to turn prescribed boundary pressures
// into a design-dependent pressure field and consistent nodal loads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "presstopo/errors.hpp"
#include "presstopo/fe_model.hpp"
#include "presstopo/fields.hpp"
#include "presstopo/sparse.hpp"

namespace presstopo {

struct FlowParams {
  double kv = 1.0;          // void flow coefficient, m^4 / (N s)
  double contrast = 1e-7;   // K_s / K_v
  double eta_k = 0.2;
  double beta_k = 10.0;
  double eta_d = 0.2;
  double beta_d = 10.0;
  double ds = 0.0;          // drainage coefficient of solid
  double p_in = 1e5;        // Pa
  double p_out = 0.0;       // Pa

  double ks() const { return contrast * kv; }

  void validate() const {
    if (!(kv > 0.0)) throw InvalidArgument("K_v must be positive");
    if (!(contrast > 0.0 && contrast <= 1.0)) throw InvalidArgument("flow contrast must lie in (0, 1]");
    if (!(beta_k > 0.0) || !(beta_d > 0.0)) throw InvalidArgument("step slopes must be positive");
    if (!(eta_k > 0.0 && eta_k < 1.0) || !(eta_d > 0.0 && eta_d < 1.0)) {
      throw InvalidArgument("step positions must lie in (0, 1)");
    }
    if (!(ds >= 0.0)) throw InvalidArgument("drainage coefficient must be non-negative");
  }
};

/// D_s = (ln r / depth)^2 K_s: in a solid layer the pressure decays to the
/// fraction r of its boundary value over `depth`.
inline double penetration_drainage(double ks, double remainder, double depth) {
  if (!(remainder > 0.0 && remainder < 1.0)) throw InvalidArgument("remainder must lie in (0, 1)");
  if (!(depth > 0.0)) throw InvalidArgument("penetration depth must be positive");
  const double k = std::log(remainder) / depth;
  return k * k * ks;
}

inline double smooth_heaviside(double x, double beta, double eta) {
  const double a = std::tanh(beta * eta);
  return (a + std::tanh(beta * (x - eta))) / (a + std::tanh(beta * (1.0 - eta)));
}

inline double smooth_heaviside_derivative(double x, double beta, double eta) {
  const double c = std::cosh(beta * (x - eta));
  return beta / (c * c) / (std::tanh(beta * eta) + std::tanh(beta * (1.0 - eta)));
}

struct CoefficientValue {
  double value = 0.0;
  double derivative = 0.0;
};

/// K = K_v (1 - (1 - eps) H(rho1; beta_k, eta_k)).
inline CoefficientValue flow_coefficient(double rho1, const FlowParams& fp) {
  const double s = 1.0 - fp.contrast;
  return {fp.kv * (1.0 - s * smooth_heaviside(rho1, fp.beta_k, fp.eta_k)),
          -fp.kv * s * smooth_heaviside_derivative(rho1, fp.beta_k, fp.eta_k)};
}

/// D = D_s H(rho1; beta_d, eta_d).
inline CoefficientValue drainage_coefficient(double rho1, const FlowParams& fp) {
  return {fp.ds * smooth_heaviside(rho1, fp.beta_d, fp.eta_d),
          fp.ds * smooth_heaviside_derivative(rho1, fp.beta_d, fp.eta_d)};
}

inline Matrix6 element_flow_matrix(const ElementIntegrals& ei, double rho1, const FlowParams& fp) {
  return flow_coefficient(rho1, fp).value * ei.laplacian +
         drainage_coefficient(rho1, fp).value * ei.mass;
}

inline Matrix6 element_flow_derivative(const ElementIntegrals& ei, double rho1,
                                       const FlowParams& fp) {
  return flow_coefficient(rho1, fp).derivative * ei.laplacian +
         drainage_coefficient(rho1, fp).derivative * ei.mass;
}

struct PressureState {
  SparseMatrix a;  // nodes x nodes
  VectorXd p;      // Pa
  SparseMatrix t;  // 2 nodes x nodes
  std::map<int, double> dirichlet;
  std::uint64_t design_hash = 0;
  double relative_residual = 0.0;
  double max_principle_violation = 0.0;  // Pa, 0 when p stays within the BC range
  std::shared_ptr<ReducedSystem> system;  // factorized free block of A
  std::uint64_t factorization_stamp = 0;

  bool solved() const {
    return p.size() == a.rows() && system && system->factorized() &&
           system->stamp() == factorization_stamp;
  }
};

/// Assembles the global flow matrix for the filtered topology column and
/// copies the design-independent transformation matrix.
/// `reuse` hands over the symbolic factorization of a previous state.
inline PressureState assemble_flow(const FeModel& model, const DesignField& design,
                                   const FlowParams& fp,
                                   std::shared_ptr<ReducedSystem> reuse = nullptr) {
  fp.validate();
  if (design.num_elements() != model.num_elements()) {
    throw InvalidArgument("design does not match the mesh");
  }
  PressureState s;
  s.a = model.node_pattern().assemble([&](int e) {
    return element_flow_matrix(model.element(e), design.filtered(e, 0), fp);
  });
  s.t = model.transform();
  s.design_hash = design_fingerprint(design.filtered);
  s.system = std::move(reuse);
  return s;
}

/// Dirichlet node -> value map from named boundary sets.
inline std::map<int, double> pressure_dirichlet(const Mesh& mesh,
                                                const std::map<std::string, double>& bc) {
  std::map<int, double> out;
  for (const auto& [edge, value] : bc) {
    for (int n : mesh.boundary(edge)) {
      auto [it, inserted] = out.emplace(n, value);
      if (!inserted && it->second != value) {
        throw InvalidArgument("node " + std::to_string(n) + " receives conflicting pressures");
      }
    }
  }
  return out;
}

/// Imposes the boundary pressures, factorizes the free block and solves.
inline const VectorXd& solve_pressure(PressureState& state, const FeModel& model,
                                      const FlowParams& fp,
                                      const std::map<std::string, double>& pressure_bc) {
  if (state.a.rows() != model.num_nodes()) throw InvalidArgument("flow matrix not assembled");
  state.dirichlet = pressure_dirichlet(model.mesh(), pressure_bc);
  if (state.dirichlet.empty()) {
    throw InvalidArgument("ill-posed pressure problem: no Dirichlet pressure nodes");
  }
  const int nn = model.num_nodes();
  std::vector<bool> fixed(nn, false);
  VectorXd prescribed = VectorXd::Zero(nn);
  for (const auto& [n, v] : state.dirichlet) {
    fixed[n] = true;
    prescribed[n] = v;
  }
  if (!state.system || state.system->fixed_mask() != fixed) {
    state.system = std::make_shared<ReducedSystem>(model.node_pattern().pattern(), fixed);
  }
  try {
    state.system->factorize(state.a);
  } catch (const SolverError& err) {
    std::ostringstream msg;
    msg << "flow matrix singular; nodes not tied to a pressure boundary:";
    const auto& bad = state.system->singular_unknowns();
    for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 12); ++i) msg << ' ' << bad[i];
    if (bad.empty()) msg << " (" << err.what() << ')';
    throw SolverError(msg.str());
  }
  state.factorization_stamp = state.system->stamp();
  const auto result = state.system->solve(state.a, VectorXd::Zero(nn), prescribed);
  state.p = result.x;

  const double scale = state.system->reduced_matrix().norm() * state.p.norm();
  state.relative_residual = scale > 0.0 ? result.residual / scale : result.residual;
  if (!(state.relative_residual < 1e-10)) {
    std::ostringstream msg;
    msg << "pressure solve did not converge, relative residual " << state.relative_residual;
    throw SolverError(msg.str());
  }

  double lo = fp.ds > 0.0 ? 0.0 : state.dirichlet.begin()->second;
  double hi = lo;
  for (const auto& [n, v] : state.dirichlet) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  state.max_principle_violation = std::max(0.0, std::max(state.p.maxCoeff() - hi, lo - state.p.minCoeff()));
  return state.p;
}

/// F = -T p, in newtons.
inline VectorXd pressure_loads(const PressureState& state) {
  if (state.p.size() != state.t.cols()) throw InvalidArgument("pressure field not solved");
  return -(state.t * state.p);
}

}  // namespace presstopo
