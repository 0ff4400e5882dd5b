#pragma once

// Method of Moving Asymptotes for box-bounded variables and a handful of
// inequality constraints g_i(x) <= 0.
//
// Subproblem at x^k (a_i = 0, so no z variable):
//   min  sum_j p0_j/(U_j - x_j) + q0_j/(x_j - L_j) + sum_i c_i y_i + y_i^2/2
//   s.t. sum_j P_ij/(U_j - x_j) + Q_ij/(x_j - L_j) - y_i <= b_i
//        alpha_j <= x_j <= beta_j,  y_i >= 0
// It is solved through its concave dual in lambda >= 0 with a primal-dual
// Newton iteration on (lambda, eta), eta being the multiplier of lambda >= 0.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "presstopo/errors.hpp"

namespace presstopo {

struct MmaSettings {
  double move_limit = 0.1;
  double asymptote_init = 0.5;
  double asymptote_incr = 1.2;
  double asymptote_decr = 0.7;
  double x_min = 0.0;
  double x_max = 1.0;
  double penalty_c = 1000.0;  // cost of the elastic variables y_i
  double kkt_tolerance = 1e-9;
  double raa0 = 1e-5;
  double albefa = 0.1;
};

struct MmaState {
  Eigen::VectorXd lower;  // asymptotes
  Eigen::VectorXd upper;
  Eigen::VectorXd x_prev;   // x^{k-1}
  Eigen::VectorXd x_prev2;  // x^{k-2}
  int iteration = 0;
  double last_kkt_residual = 0.0;
  MmaSettings settings;

  MmaState() = default;
  explicit MmaState(MmaSettings s) : settings(s) {}
};

namespace detail {

struct MmaSubproblem {
  Eigen::VectorXd low, upp, alpha, beta;
  Eigen::VectorXd p0, q0;
  Eigen::MatrixXd p, q;  // n x m
  Eigen::VectorXd b;     // m
  double c = 1000.0;

  int n() const { return static_cast<int>(low.size()); }
  int m() const { return static_cast<int>(b.size()); }

  Eigen::VectorXd primal(const Eigen::VectorXd& lambda) const {
    const Eigen::ArrayXd pl = (p0 + p * lambda).array();
    const Eigen::ArrayXd ql = (q0 + q * lambda).array();
    const Eigen::ArrayXd sp = pl.sqrt();
    const Eigen::ArrayXd sq = ql.sqrt();
    Eigen::ArrayXd x = (sp * low.array() + sq * upp.array()) / (sp + sq);
    return x.max(alpha.array()).min(beta.array()).matrix();
  }

  Eigen::VectorXd elastic(const Eigen::VectorXd& lambda) const {
    return (lambda.array() - c).max(0.0).matrix();
  }

  // dW/dlambda_i = h_i(x(lambda)) - y_i(lambda) - b_i
  Eigen::VectorXd dual_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& lambda) const {
    const Eigen::VectorXd ux = (upp - x).cwiseInverse();
    const Eigen::VectorXd xl = (x - low).cwiseInverse();
    return p.transpose() * ux + q.transpose() * xl - elastic(lambda) - b;
  }

  Eigen::MatrixXd dual_hessian(const Eigen::VectorXd& x, const Eigen::VectorXd& lambda) const {
    const Eigen::ArrayXd ux = (upp - x).array();
    const Eigen::ArrayXd xl = (x - low).array();
    const Eigen::ArrayXd pl = (p0 + p * lambda).array();
    const Eigen::ArrayXd ql = (q0 + q * lambda).array();
    const Eigen::ArrayXd curvature = 2.0 * pl / ux.cube() + 2.0 * ql / xl.cube();
    const Eigen::ArrayXd interior =
        ((x.array() > alpha.array()) && (x.array() < beta.array())).cast<double>();
    Eigen::MatrixXd dh(n(), m());
    for (int i = 0; i < m(); ++i) {
      dh.col(i) = (p.col(i).array() / ux.square() - q.col(i).array() / xl.square()).matrix();
    }
    const Eigen::VectorXd w = (interior / curvature).matrix();
    Eigen::MatrixXd h = -(dh.transpose() * w.asDiagonal() * dh);
    for (int i = 0; i < m(); ++i)
      if (lambda[i] > c) h(i, i) -= 1.0;
    return h;
  }

  // max_i |min(lambda_i, -dW_i)|
  double kkt_residual(const Eigen::VectorXd& lambda) const {
    if (m() == 0) return 0.0;
    const Eigen::VectorXd g = dual_gradient(primal(lambda), lambda);
    double r = 0.0;
    for (int i = 0; i < m(); ++i) r = std::max(r, std::abs(std::min(lambda[i], -g[i])));
    return r;
  }
};

inline Eigen::VectorXd solve_dual(const MmaSubproblem& sp, double& kkt) {
  const int m = sp.m();
  if (m == 0) {
    kkt = 0.0;
    return Eigen::VectorXd();
  }
  Eigen::VectorXd lambda = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd eta = Eigen::VectorXd::Ones(m);
  double epsi = 1.0;
  while (epsi > 1e-13) {
    for (int it = 0; it < 200; ++it) {
      const Eigen::VectorXd x = sp.primal(lambda);
      const Eigen::VectorXd grad = sp.dual_gradient(x, lambda);
      Eigen::VectorXd res(2 * m);
      res << grad + eta, (eta.array() * lambda.array() - epsi).matrix();
      if (res.cwiseAbs().maxCoeff() <= 0.9 * epsi) break;

      Eigen::MatrixXd h = sp.dual_hessian(x, lambda);
      h -= (eta.array() / lambda.array()).matrix().asDiagonal();
      // Keeps the system nonsingular when every variable sits on a move limit.
      h.diagonal().array() -= 1e-12 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
      const Eigen::VectorXd rhs = -grad - (epsi / lambda.array()).matrix();
      const Eigen::VectorXd dlam = h.partialPivLu().solve(rhs);
      const Eigen::VectorXd deta =
          (-eta.array() + epsi / lambda.array() - dlam.array() * eta.array() / lambda.array()).matrix();

      // Fraction-to-boundary damping, then backtrack on the residual.
      double step = 1.0;
      for (int i = 0; i < m; ++i) {
        if (dlam[i] < 0.0) step = std::min(step, -0.99 * lambda[i] / dlam[i]);
        if (deta[i] < 0.0) step = std::min(step, -0.99 * eta[i] / deta[i]);
      }
      const double res0 = res.norm();
      for (int bt = 0; bt < 30; ++bt) {
        const Eigen::VectorXd lt = lambda + step * dlam;
        const Eigen::VectorXd et = eta + step * deta;
        Eigen::VectorXd rt(2 * m);
        rt << sp.dual_gradient(sp.primal(lt), lt) + et, (et.array() * lt.array() - epsi).matrix();
        if (rt.norm() < res0 || bt == 29) {
          lambda = lt;
          eta = et;
          break;
        }
        step *= 0.5;
      }
    }
    epsi *= 0.1;
  }
  kkt = sp.kkt_residual(lambda);

  // The barrier leaves min(lambda_i, -dW_i) near sqrt(epsi) for constraints
  // that are barely active. Polish with Newton on the guessed active set.
  Eigen::VectorXd lam = lambda;
  Eigen::VectorXd grad = sp.dual_gradient(sp.primal(lam), lam);
  for (int i = 0; i < m; ++i)
    if (lam[i] < -grad[i]) lam[i] = 0.0;
  for (int it = 0; it < 20 && kkt > 0.0; ++it) {
    const Eigen::VectorXd x = sp.primal(lam);
    grad = sp.dual_gradient(x, lam);
    const double r = sp.kkt_residual(lam);
    if (r < kkt) {
      kkt = r;
      lambda = lam;
    }
    std::vector<int> act;
    for (int i = 0; i < m; ++i)
      if (lam[i] > 0.0 || grad[i] > 0.0) act.push_back(i);
    if (act.empty()) break;
    const Eigen::MatrixXd h = sp.dual_hessian(x, lam);
    const int k = static_cast<int>(act.size());
    Eigen::MatrixXd ha(k, k);
    Eigen::VectorXd ga(k);
    for (int a = 0; a < k; ++a) {
      ga[a] = grad[act[a]];
      for (int b = 0; b < k; ++b) ha(a, b) = h(act[a], act[b]);
    }
    ha.diagonal().array() -= 1e-12 * std::max(1.0, ha.diagonal().cwiseAbs().maxCoeff());
    const Eigen::VectorXd d = ha.partialPivLu().solve(-ga);
    if (!d.allFinite()) break;
    for (int a = 0; a < k; ++a) lam[act[a]] = std::max(0.0, lam[act[a]] + d[a]);
  }
  return lambda;
}

}  // namespace detail

/// One MMA step. `dg` holds one constraint gradient per column (n x m) and
/// `g` the constraint values in g <= 0 form. Returns the new iterate, which
/// stays within [x_min, x_max] and within move_limit of `x`.
inline Eigen::VectorXd mma_update(const Eigen::VectorXd& x, double f0, const Eigen::VectorXd& df0,
                                  const Eigen::VectorXd& g, const Eigen::MatrixXd& dg,
                                  MmaState& state) {
  (void)f0;  // only a globalized variant would need the objective value
  const MmaSettings& s = state.settings;
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(g.size());
  if (df0.size() != n || dg.rows() != n || dg.cols() != m) {
    throw InvalidArgument("MMA: inconsistent gradient dimensions");
  }
  if (x.minCoeff() < s.x_min - 1e-12 || x.maxCoeff() > s.x_max + 1e-12) {
    throw InvalidArgument("MMA: design outside its bounds");
  }
  if (!df0.allFinite() || !dg.allFinite() || !g.allFinite()) {
    throw OptimizerError("MMA: non-finite objective or constraint data");
  }
  for (int i = 0; i < m; ++i) {
    if (g[i] > 0.0 && dg.col(i).cwiseAbs().maxCoeff() == 0.0) {
      throw OptimizerError("MMA: constraint " + std::to_string(i) +
                           " is violated and has a zero gradient; subproblem infeasible");
    }
  }
  if (state.x_prev.size() != n) {
    state.x_prev = x;
    state.x_prev2 = x;
    state.iteration = 0;
  }
  const double range = s.x_max - s.x_min;
  const Eigen::ArrayXd xa = x.array();

  detail::MmaSubproblem sp;
  sp.c = s.penalty_c;
  if (state.iteration < 2 || state.lower.size() != n) {
    sp.low = (xa - s.asymptote_init * range).matrix();
    sp.upp = (xa + s.asymptote_init * range).matrix();
  } else {
    sp.low.resize(n);
    sp.upp.resize(n);
    for (int j = 0; j < n; ++j) {
      const double osc = (x[j] - state.x_prev[j]) * (state.x_prev[j] - state.x_prev2[j]);
      const double gamma = osc > 0.0 ? s.asymptote_incr : (osc < 0.0 ? s.asymptote_decr : 1.0);
      double lo = x[j] - gamma * (state.x_prev[j] - state.lower[j]);
      double up = x[j] + gamma * (state.upper[j] - state.x_prev[j]);
      lo = std::clamp(lo, x[j] - 10.0 * range, x[j] - 0.01 * range);
      up = std::clamp(up, x[j] + 0.01 * range, x[j] + 10.0 * range);
      sp.low[j] = lo;
      sp.upp[j] = up;
    }
  }
  sp.alpha = (sp.low.array() + s.albefa * (xa - sp.low.array()))
                 .max(xa - s.move_limit * range)
                 .max(s.x_min)
                 .matrix();
  sp.beta = (sp.upp.array() - s.albefa * (sp.upp.array() - xa))
                .min(xa + s.move_limit * range)
                .min(s.x_max)
                .matrix();

  const Eigen::ArrayXd ux2 = (sp.upp.array() - xa).square();
  const Eigen::ArrayXd xl2 = (xa - sp.low.array()).square();
  const double reg = s.raa0 / std::max(range, 1e-5);
  {
    const Eigen::ArrayXd pos = df0.array().max(0.0);
    const Eigen::ArrayXd neg = (-df0.array()).max(0.0);
    const Eigen::ArrayXd pq = 0.001 * (pos + neg) + reg;
    sp.p0 = ((pos + pq) * ux2).matrix();
    sp.q0 = ((neg + pq) * xl2).matrix();
  }
  sp.p.resize(n, m);
  sp.q.resize(n, m);
  for (int i = 0; i < m; ++i) {
    const Eigen::ArrayXd pos = dg.col(i).array().max(0.0);
    const Eigen::ArrayXd neg = (-dg.col(i).array()).max(0.0);
    const Eigen::ArrayXd pq = 0.001 * (pos + neg) + reg;
    sp.p.col(i) = ((pos + pq) * ux2).matrix();
    sp.q.col(i) = ((neg + pq) * xl2).matrix();
  }
  sp.b = sp.p.transpose() * (sp.upp - x).cwiseInverse() + sp.q.transpose() * (x - sp.low).cwiseInverse() - g;

  double kkt = 0.0;
  const Eigen::VectorXd lambda = detail::solve_dual(sp, kkt);
  state.last_kkt_residual = kkt;
  if (!(kkt < s.kkt_tolerance)) {
    std::ostringstream msg;
    msg << "MMA: dual subproblem KKT residual " << kkt << " above tolerance " << s.kkt_tolerance;
    throw OptimizerError(msg.str());
  }
  Eigen::VectorXd x_new = m == 0 ? sp.primal(Eigen::VectorXd::Zero(0)) : sp.primal(lambda);

  state.lower = sp.low;
  state.upper = sp.upp;
  state.x_prev2 = state.x_prev;
  state.x_prev = x;
  ++state.iteration;
  return x_new;
}

}  // namespace presstopo
