#pragma once

// Accelerated proximal gradient for  min_beta f(beta) + lambda ||beta||_1
// with backtracking on the Lipschitz estimate and function-value restart.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "robreg/core.hpp"

namespace robreg {

struct ProxGradientOptions {
  int max_iterations = 20000;
  double tol = 1e-7;  // on the KKT residual
  double backtrack_factor = 2.0;
  double shrink_factor = 0.9;  // tentative decrease of the Lipschitz estimate per step
};

struct FitResult {
  Vector beta_hat;
  std::vector<double> objective_trace;
  std::vector<int> restarts;  // trace positions where momentum was reset
  int iterations = 0;
  double kkt_residual = 0.0;
  bool converged = false;
};

/// Worst violation of the l1 optimality conditions at beta given the smooth gradient.
inline double kkt_residual(const Vector& beta, const Vector& grad, double lambda) {
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    const double r = beta[j] == 0.0 ? std::max(std::abs(grad[j]) - lambda, 0.0)
                                    : std::abs(grad[j] + lambda * (beta[j] > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, r);
  }
  return worst;
}

/// Largest eigenvalue of sum_i a_i^2 X_i X_i^T / n over the rows of X.
inline double scaled_gram_top_eigenvalue(const Matrix& X, const Vector& a, double n) {
  if (X.rows() == 0) return 0.0;
  const Matrix ax = a.asDiagonal() * X;
  const Matrix gram = ax.transpose() * ax / n;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  return std::max(es.eigenvalues().maxCoeff(), 0.0);
}

/// `Loss` provides value(beta), gradient(beta), lipschitz_bound() and dim().
template <class Loss>
FitResult minimize_l1_penalized(const Loss& loss, double lambda, const ProxGradientOptions& opts = {}) {
  const Index d = loss.dim();
  auto penalized = [&](const Vector& b, double fb) { return fb + lambda * b.lpNorm<1>(); };
  auto prox = [&](const Vector& v, double step) {
    return v.unaryExpr([t = lambda * step](double x) { return soft_threshold(x, t); }).eval();
  };

  FitResult res;
  Vector x = Vector::Zero(d);
  Vector y = x;
  double t = 1.0;
  const double lip_global = std::max(loss.lipschitz_bound(), 1e-12);
  double lip = lip_global;
  double fx = loss.value(x);
  double Fx = penalized(x, fx);
  res.objective_trace.push_back(Fx);

  Vector gx = loss.gradient(x);
  res.kkt_residual = kkt_residual(x, gx, lambda);
  if (res.kkt_residual <= opts.tol) {
    res.beta_hat = x;
    res.converged = true;
    return res;
  }

  bool at_restart = true;  // y == x
  for (int k = 0; k < opts.max_iterations; ++k) {
    res.iterations = k + 1;
    const double fy = at_restart ? fx : loss.value(y);
    const Vector gy = at_restart ? gx : loss.gradient(y);

    Vector x_new;
    double f_new = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      x_new = prox(y - gy / lip, 1.0 / lip);
      f_new = loss.value(x_new);
      const Vector diff = x_new - y;
      const double model = fy + gy.dot(diff) + 0.5 * lip * diff.squaredNorm();
      if (f_new <= model + 1e-12 * std::max(1.0, std::abs(fy))) break;
      lip *= opts.backtrack_factor;
    }
    const double F_new = penalized(x_new, f_new);

    if (F_new > Fx) {
      if (!at_restart) {
        t = 1.0;
        y = x;
        at_restart = true;
        res.restarts.push_back(static_cast<int>(res.objective_trace.size()) - 1);
        continue;
      }
      // The backtracking slack can let lip drift below the true constant near
      // the optimum; retry with the global bound first.
      if (lip < lip_global) {
        lip = lip_global;
        continue;
      }
      // A proximal step from x cannot increase F in exact arithmetic. Near
      // the optimum its decrease falls below the rounding error of F; accept
      // such a step as the start of a new segment, otherwise stop.
      const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(fx) + lambda * x.lpNorm<1>() + 1e-300);
      if (F_new > Fx + slack) break;
      res.restarts.push_back(static_cast<int>(res.objective_trace.size()));
    }

    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x_new + ((t - 1.0) / t_new) * (x_new - x);
    x = std::move(x_new);
    fx = f_new;
    Fx = F_new;
    t = t_new;
    at_restart = false;
    res.objective_trace.push_back(Fx);
    lip *= opts.shrink_factor;

    gx = loss.gradient(x);
    res.kkt_residual = kkt_residual(x, gx, lambda);
    if (res.kkt_residual <= opts.tol) {
      res.converged = true;
      break;
    }
  }
  gx = loss.gradient(x);
  res.kkt_residual = kkt_residual(x, gx, lambda);
  res.converged = res.kkt_residual <= opts.tol;
  res.beta_hat = std::move(x);
  return res;
}

}  // namespace robreg
