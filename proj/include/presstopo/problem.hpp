#pragma once

// A configured benchmark: mesh, materials, boundary conditions and the
// per-design evaluation pipeline
//   filter -> pressure -> loads -> displacements -> compliance -> sensitivities.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "presstopo/adjoint.hpp"
#include "presstopo/config.hpp"
#include "presstopo/darcy.hpp"
#include "presstopo/elasticity.hpp"
#include "presstopo/fe_model.hpp"
#include "presstopo/fields.hpp"

namespace presstopo {

struct Evaluation {
  PressureState pressure;
  ElasticState elastic;
  double compliance = 0.0;             // N m
  VectorXd volumes;                    // g_k, filtered
  MatrixXd d_compliance;               // Nel x m, raw variables
  std::vector<MatrixXd> d_volumes;     // per constraint, Nel x m
};

/// Nodes of `edge` whose position along the edge, as a fraction of its
/// length, lies in [from, to].
inline std::vector<int> edge_segment_nodes(const Mesh& mesh, const std::string& edge, double from,
                                           double to) {
  const bool horizontal = edge == "top" || edge == "bottom";
  const double len = horizontal ? mesh.lx : mesh.ly;
  const double tol = 1e-9;
  std::vector<int> out;
  for (int n : mesh.boundary(edge)) {
    const double s = (horizontal ? mesh.nodes[n].x() : mesh.nodes[n].y()) / len;
    if (s >= from - tol && s <= to + tol) out.push_back(n);
  }
  return out;
}

class Problem {
 public:
  explicit Problem(ProblemConfig config) : config_(std::move(config)) {
    config_.validate();
    materials_ = MaterialSet::make(config_.youngs, config_.nu, config_.thickness, config_.penalty);
    model_ = std::make_shared<FeModel>(
        generate_mesh(config_.nex, config_.ney, config_.lx, config_.ly, config_.layout), config_.nu,
        config_.thickness);
    const Mesh& mesh = model_->mesh();

    filter_ = build_filter(mesh, config_.filter_radius());

    flow_.kv = config_.kv;
    flow_.contrast = config_.contrast;
    flow_.eta_k = config_.eta_k;
    flow_.beta_k = config_.beta_k;
    flow_.eta_d = config_.eta_d;
    flow_.beta_d = config_.beta_d;
    flow_.ds = config_.ds ? *config_.ds
                          : penetration_drainage(flow_.ks(), config_.drainage_remainder,
                                                 config_.penetration_elements * mesh.element_height());
    for (const auto& [edge, value] : config_.pressure) pressure_bc_[config_.resolve_edge(edge)] = value;
    flow_.p_in = flow_.p_out = pressure_bc_.begin()->second;
    for (const auto& [edge, value] : pressure_bc_) {
      flow_.p_in = std::max(flow_.p_in, value);
      flow_.p_out = std::min(flow_.p_out, value);
    }
    flow_.validate();

    for (const auto& seg : config_.fixed) {
      const auto nodes = edge_segment_nodes(mesh, config_.resolve_edge(seg.edge), seg.from, seg.to);
      if (nodes.empty()) {
        throw ConfigError("support segment " + seg.edge + ":" + std::to_string(seg.from) + ":" +
                          std::to_string(seg.to) + " contains no mesh nodes");
      }
      support_nodes_.insert(support_nodes_.end(), nodes.begin(), nodes.end());
      const auto dofs = node_dofs(nodes, 2);
      fixed_dofs_.insert(fixed_dofs_.end(), dofs.begin(), dofs.end());
    }
    if (!config_.symmetry_edge.empty()) {
      const bool vertical = config_.symmetry_edge == "left" || config_.symmetry_edge == "right";
      const auto dofs = node_dofs(mesh.boundary(config_.symmetry_edge), vertical ? 0 : 1);
      fixed_dofs_.insert(fixed_dofs_.end(), dofs.begin(), dofs.end());
    }
    std::sort(fixed_dofs_.begin(), fixed_dofs_.end());
    fixed_dofs_.erase(std::unique(fixed_dofs_.begin(), fixed_dofs_.end()), fixed_dofs_.end());
    std::sort(support_nodes_.begin(), support_nodes_.end());
    support_nodes_.erase(std::unique(support_nodes_.begin(), support_nodes_.end()), support_nodes_.end());
    check_rigid_modes(mesh, fixed_dofs_);

    const auto b = config_.volume_bounds();
    bounds_ = Eigen::Map<const VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  }

  const ProblemConfig& config() const { return config_; }
  const FeModel& model() const { return *model_; }
  const Mesh& mesh() const { return model_->mesh(); }
  const MaterialSet& materials() const { return materials_; }
  const FlowParams& flow() const { return flow_; }
  const FilterOperator& filter() const { return filter_; }
  const std::map<std::string, double>& pressure_bc() const { return pressure_bc_; }
  const std::vector<int>& fixed_dofs() const { return fixed_dofs_; }
  /// Nodes of the fixed support segments (not the symmetry rollers).
  const std::vector<int>& support_nodes() const { return support_nodes_; }
  const VectorXd& volume_bounds() const { return bounds_; }
  int num_variables() const { return materials_.num_variables(); }

  DesignField uniform_design() const {
    const auto v = config_.initial_values();
    return DesignField::uniform(mesh(), materials_, filter_, v);
  }

  DesignField design_from_raw(MatrixXd raw) const {
    return DesignField::from_raw(mesh(), materials_, filter_, std::move(raw));
  }

  /// Runs the coupled analysis for `design` (already filtered). The
  /// symbolic factorizations are kept between calls.
  Evaluation evaluate(const DesignField& design, bool with_sensitivities = true,
                      const AdjointOptions& opt = {}) const {
    Evaluation ev;
    ev.pressure = assemble_flow(*model_, design, flow_, flow_system_);
    solve_pressure(ev.pressure, *model_, flow_, pressure_bc_);
    flow_system_ = ev.pressure.system;

    ev.elastic = solve_displacements(*model_, assemble_stiffness(*model_, design, materials_),
                                     pressure_loads(ev.pressure), fixed_dofs_, elastic_system_);
    ev.elastic.design_hash = design_fingerprint(design.filtered);
    elastic_system_ = ev.elastic.system;
    ev.compliance = ev.elastic.compliance;
    if (!std::isfinite(ev.compliance) || ev.compliance < 0.0) {
      throw SolverError("compliance is negative or not finite");
    }
    ev.volumes = volume_measures(design);
    if (with_sensitivities) {
      ev.d_compliance = compliance_sensitivity(*model_, design, materials_, flow_, filter_,
                                               ev.pressure, ev.elastic, opt);
      ev.d_volumes = constraint_sensitivities(design, filter_);
    }
    return ev;
  }

  /// Compliance only, for finite differences.
  double compliance(const DesignField& design) const { return evaluate(design, false).compliance; }

 private:
  ProblemConfig config_;
  MaterialSet materials_;
  std::shared_ptr<FeModel> model_;
  FilterOperator filter_;
  FlowParams flow_;
  std::map<std::string, double> pressure_bc_;
  std::vector<int> fixed_dofs_;
  std::vector<int> support_nodes_;
  VectorXd bounds_;
  mutable std::shared_ptr<ReducedSystem> flow_system_;
  mutable std::shared_ptr<ReducedSystem> elastic_system_;
};

// ---------------------------------------------------------------------------
// Gradient check
// ---------------------------------------------------------------------------

struct GradientCheck {
  MatrixXd adjoint;         // Nel x m
  MatrixXd finite_diff;     // Nel x m, closest difference quotient over the steps
  MatrixXd without_load;    // adjoint with the flow term dropped
  std::vector<double> steps;
  std::vector<double> step_errors;  // max relative error using each step alone
  double max_rel_error = 0.0;       // per component, best step
  int checked = 0;                  // components above the noise floor
  double load_term_change = 0.0;    // ||d - d_noload|| / ||d||
  double seconds = 0.0;
};

/// Random design with topology variables in [0.1, 0.28] and selection
/// variables in [0.04, 0.14]: mean values sit just inside the default bounds
/// and around the flow-coefficient step, where the load term is largest.
inline MatrixXd random_feasible_design(int nel, int m, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> topo(0.1, 0.28);
  std::uniform_real_distribution<double> sel(0.04, 0.14);
  MatrixXd raw(nel, m);
  for (int k = 0; k < m; ++k)
    for (int e = 0; e < nel; ++e) raw(e, k) = k == 0 ? topo(rng) : sel(rng);
  return raw;
}

/// Central differences of the full pipeline against the adjoint gradient,
/// for each step in `steps`. Components with |dc| below `floor * max|dc|`
/// are not compared.
inline GradientCheck gradient_check(const Problem& problem, const MatrixXd& raw,
                                    std::vector<double> steps = {1e-6}, double floor = 1e-12) {
  if (steps.empty()) throw InvalidArgument("gradient check needs at least one step");
  const auto t0 = std::chrono::steady_clock::now();
  GradientCheck out;
  const DesignField base = problem.design_from_raw(raw);
  out.adjoint = problem.evaluate(base, true).d_compliance;
  AdjointOptions no_load;
  no_load.include_load_term = false;
  out.without_load = problem.evaluate(base, true, no_load).d_compliance;
  out.load_term_change = (out.adjoint - out.without_load).norm() / out.adjoint.norm();
  out.steps = steps;
  out.step_errors.assign(steps.size(), 0.0);

  out.finite_diff.resize(raw.rows(), raw.cols());
  const double scale = out.adjoint.cwiseAbs().maxCoeff();
  for (int k = 0; k < raw.cols(); ++k) {
    for (int e = 0; e < raw.rows(); ++e) {
      const double a = out.adjoint(e, k);
      const bool compared = std::abs(a) > floor * scale;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < steps.size(); ++s) {
        MatrixXd plus = raw, minus = raw;
        plus(e, k) += steps[s];
        minus(e, k) -= steps[s];
        const double cp = problem.compliance(problem.design_from_raw(plus));
        const double cm = problem.compliance(problem.design_from_raw(minus));
        const double fd = (cp - cm) / (2.0 * steps[s]);
        const double err = std::abs(fd - a);
        if (compared) out.step_errors[s] = std::max(out.step_errors[s], err / std::abs(a));
        if (err < best) {
          best = err;
          out.finite_diff(e, k) = fd;
        }
      }
      if (compared) {
        ++out.checked;
        out.max_rel_error = std::max(out.max_rel_error, best / std::abs(a));
      }
    }
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace presstopo
