#pragma once

// Optimization loop: evaluate, record, MMA step.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "presstopo/errors.hpp"
#include "presstopo/mma.hpp"
#include "presstopo/problem.hpp"

namespace presstopo {

struct IterationRecord {
  int iteration = 0;         // 1-based
  double compliance = 0.0;   // N m
  VectorXd g;                // volume measures of the filtered design
  double max_dx = 0.0;       // ||x_k - x_{k-1}||_inf, 0 for the first iterate
};

struct RunLog {
  std::vector<IterationRecord> records;
  int num_constraints = 0;
  double wall_seconds = 0.0;
};

struct RunOptions {
  std::optional<int> max_iters;          // overrides the config
  std::optional<MatrixXd> initial_raw;   // overrides the uniform start
  std::ostream* progress = nullptr;
  int log_every = 0;                     // 0: no progress lines
  std::function<void(const IterationRecord&, const DesignField&, const Evaluation&)> on_iteration;
};

struct RunResult {
  RunLog log;
  DesignField design;     // last evaluated design
  Evaluation evaluation;  // states of `design`
  bool evaluated = false; // false after a 0-iteration run
};

namespace detail {

template <typename E>
[[noreturn]] void rethrow_tagged(const E& e, int iteration) {
  throw E("iteration " + std::to_string(iteration) + ": " + e.what());
}

}  // namespace detail

/// Iteration k evaluates x_k and, unless it is the last, takes an MMA step.
/// The objective handed to MMA is c / c_1; constraints are g - bound <= 0.
inline RunResult run_optimization(const Problem& problem, const RunOptions& options = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const ProblemConfig& cfg = problem.config();
  const int max_iters = options.max_iters.value_or(cfg.max_iters);
  if (max_iters < 0) throw InvalidArgument("iteration count must be non-negative");

  RunResult out;
  out.log.num_constraints = problem.num_variables();
  out.design = options.initial_raw ? problem.design_from_raw(*options.initial_raw)
                                   : problem.uniform_design();

  MmaSettings ms;
  ms.move_limit = cfg.move_limit;
  ms.asymptote_init = cfg.asymptote_init;
  ms.asymptote_incr = cfg.asymptote_incr;
  ms.asymptote_decr = cfg.asymptote_decr;
  MmaState mma(ms);

  const int nel = out.design.num_elements();
  const int m = out.design.num_variables();
  const VectorXd& bounds = problem.volume_bounds();
  double c_scale = 0.0;
  double last_dx = 0.0;

  for (int k = 1; k <= max_iters; ++k) {
    try {
      Evaluation ev = problem.evaluate(out.design);
      if (k == 1) c_scale = ev.compliance > 0.0 ? 1.0 / ev.compliance : 1.0;

      IterationRecord rec;
      rec.iteration = k;
      rec.compliance = ev.compliance;
      rec.g = ev.volumes;
      rec.max_dx = last_dx;
      out.log.records.push_back(rec);
      if (options.progress && options.log_every > 0 && (k % options.log_every == 0 || k == 1)) {
        *options.progress << "iter " << std::setw(4) << k << "  c = " << std::setprecision(8)
                          << ev.compliance;
        for (int j = 0; j < m; ++j) *options.progress << "  g" << j + 1 << " = " << ev.volumes[j];
        *options.progress << "  max_dx = " << last_dx << '\n';
      }
      if (options.on_iteration) options.on_iteration(rec, out.design, ev);

      const bool stalled = cfg.stop_tol > 0.0 && k > 1 && last_dx < cfg.stop_tol;
      if (k == max_iters || stalled) {
        out.evaluation = std::move(ev);
        out.evaluated = true;
        break;
      }

      const Eigen::Map<const VectorXd> x(out.design.raw.data(), static_cast<Eigen::Index>(nel) * m);
      const Eigen::Map<const VectorXd> dc(ev.d_compliance.data(), x.size());
      MatrixXd dg(x.size(), m);
      for (int j = 0; j < m; ++j) dg.col(j) = Eigen::Map<const VectorXd>(ev.d_volumes[j].data(), x.size());
      const VectorXd xn =
          mma_update(x, ev.compliance * c_scale, dc * c_scale, ev.volumes - bounds, dg, mma);
      last_dx = (xn - x).cwiseAbs().maxCoeff();
      MatrixXd raw = Eigen::Map<const MatrixXd>(xn.data(), nel, m);
      // MMA works to rounding accuracy at the box; keep the filter's input in range.
      raw = raw.cwiseMax(0.0).cwiseMin(1.0);
      out.design = problem.design_from_raw(std::move(raw));
    } catch (const SolverError& e) {
      detail::rethrow_tagged(e, k);
    } catch (const ConsistencyError& e) {
      detail::rethrow_tagged(e, k);
    } catch (const OptimizerError& e) {
      detail::rethrow_tagged(e, k);
    } catch (const InvalidArgument& e) {
      detail::rethrow_tagged(e, k);
    } catch (const DomainError& e) {
      detail::rethrow_tagged(e, k);
    } catch (const GeometryError& e) {
      detail::rethrow_tagged(e, k);
    }
  }
  out.log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace presstopo
