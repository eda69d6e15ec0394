#pragma once

// Sample weights from the bilinear min-max problem
//
//   min_{w in capped simplex} max_{M in candidate set} sum_i w_i <A_i, M>,
//
// with A_i = X_i X_i^T - Sigma when the covariance is known and A_i = X_i X_i^T
// otherwise, followed by the {0, 1/n} truncation of the resulting weights.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "robreg/core.hpp"
#include "robreg/projections.hpp"

namespace robreg {

/// Weights with every entry exactly 0 or exactly 1/n.
struct TruncatedWeights {
  Vector w_prime;
  std::vector<Index> retained;

  Index n() const { return w_prime.size(); }

  static TruncatedWeights uniform(Index n) {
    TruncatedWeights t;
    t.w_prime = Vector::Constant(n, 1.0 / static_cast<double>(n));
    t.retained.resize(static_cast<std::size_t>(n));
    std::iota(t.retained.begin(), t.retained.end(), Index{0});
    return t;
  }
};

struct SaddleReport {
  WeightVector weights;
  double certificate_value = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;
  bool converged = false;
  bool failed = false;
};

struct WeightSolverOptions {
  int max_iterations = 2000;
  // The iterates are restarted from their running average every
  // `restart_period` steps; the returned weights are the last such average.
  int restart_period = 100;
  // Stop once the duality gap falls below tol * max(1e-12, |certificate|).
  double tol = 1e-4;
  // Iteration budget of the inner maximization when the l1 constraint binds.
  // The final certificate uses ten times this budget.
  int inner_iterations = 500;
  double step_scale = 0.9;
  int power_iterations = 30;
  FeasibleProjectionOptions projection{};
};

/// sum_i w_i <X_i X_i^T - Sigma, M>.
inline double objective_known_sigma(const Matrix& X, const Matrix& sigma, const Vector& w, const Matrix& m) {
  const Vector quad = ((X * m).cwiseProduct(X)).rowwise().sum();
  return w.dot(quad) - w.sum() * sigma.cwiseProduct(m).sum();
}

/// sum_i w_i <X_i X_i^T, M>.
inline double objective_unknown_sigma(const Matrix& X, const Vector& w, const Matrix& m) {
  const Vector quad = ((X * m).cwiseProduct(X)).rowwise().sum();
  return w.dot(quad);
}

/// Result of maximizing <G, M> over the candidate set.
struct InnerMax {
  double value = 0.0;
  Matrix m;
  bool exact = false;
};

/// Maximizes the linear functional <G, M> over PSD ∩ {Tr <= r2^2} ∩ {||M||_1 <= r1^2}.
/// Without the l1 constraint the maximizer is r2^2 v v^T for the top
/// eigenvector v (or 0 if no eigenvalue is positive); when that point also
/// satisfies the l1 bound it is exact. Otherwise ADMM splits the set into
/// the spectral block and the l1 ball, with at most `max_steps` iterations.
inline InnerMax maximize_over_candidates(const Matrix& g, double r1, double r2, int max_steps,
                                         const FeasibleProjectionOptions& popts = {}) {
  const Index d = g.rows();
  const Matrix sym = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw std::runtime_error("maximize_over_candidates: eigendecomposition failed");

  InnerMax out;
  const double top = es.eigenvalues()[d - 1];
  if (top <= 0.0) {
    out.m = Matrix::Zero(d, d);
    out.value = 0.0;
    out.exact = true;
    return out;
  }
  const Vector v = es.eigenvectors().col(d - 1);
  const double r2sq = r2 * r2;
  if (r2sq * v.lpNorm<1>() * v.lpNorm<1>() <= r1 * r1) {
    out.m = r2sq * v * v.transpose();
    out.value = r2sq * top;
    out.exact = true;
    return out;
  }

  // Scaled so that one unit of rho moves the iterate by about the set's size.
  const double gscale = sym.norm() / r2sq;
  double rho = gscale;
  Matrix z = project_l1_ball_matrix(r2sq * v * v.transpose(), r1);
  Matrix u = Matrix::Zero(d, d);
  Matrix x = z;
  for (int k = 1; k <= max_steps; ++k) {
    x = project_psd_trace(z - u + sym / rho, r2);
    Matrix z_next = project_l1_ball_matrix(x + u, r1);
    z_next = 0.5 * (z_next + z_next.transpose()).eval();
    const double dual = rho * (z_next - z).norm();
    z = std::move(z_next);
    u += x - z;
    const double primal = (x - z).norm();
    if (primal <= popts.tol * r2sq && dual <= popts.tol * r2sq * gscale) break;
    if (k % 10 == 0) {
      if (primal * gscale > 10.0 * dual) {
        rho *= 2.0;
        u /= 2.0;
      } else if (dual > 10.0 * primal * gscale) {
        rho /= 2.0;
        u *= 2.0;
      }
    }
  }
  // Return a point of the spectral set, scaled into the l1 ball if the last
  // iterate still overshoots it, so the candidate is feasible.
  const double l1 = x.cwiseAbs().sum();
  if (l1 > r1 * r1) x *= r1 * r1 / l1;
  out.m = std::move(x);
  out.value = std::max(0.0, sym.cwiseProduct(out.m).sum());
  if (sym.cwiseProduct(out.m).sum() < 0.0) out.m.setZero();
  return out;
}

/// The bilinear weight problem for a fixed design. `sigma` present selects the
/// known-covariance objective.
class WeightProblem {
 public:
  WeightProblem(const Matrix& X, std::optional<Matrix> sigma) : X_(X), sigma_(std::move(sigma)) {
    if (sigma_ && (sigma_->rows() != X_.cols() || sigma_->cols() != X_.cols())) {
      throw std::invalid_argument("WeightProblem: covariance dimension does not match design");
    }
  }

  Index n() const { return X_.rows(); }
  Index d() const { return X_.cols(); }
  bool known_sigma() const { return sigma_.has_value(); }

  /// (<A_i, M>)_i.
  Vector sample_scores(const Matrix& m) const {
    Vector s = ((X_ * m).cwiseProduct(X_)).rowwise().sum();
    if (sigma_) s.array() -= sigma_->cwiseProduct(m).sum();
    return s;
  }

  /// sum_i w_i A_i.
  Matrix moment(const Vector& w) const {
    Matrix g = X_.transpose() * w.asDiagonal() * X_;
    if (sigma_) g -= w.sum() * (*sigma_);
    return g;
  }

  double objective(const Vector& w, const Matrix& m) const {
    return sigma_ ? objective_known_sigma(X_, *sigma_, w, m) : objective_unknown_sigma(X_, w, m);
  }

  /// max over candidates at fixed weights.
  InnerMax max_at(const Vector& w, double r1, double r2, int ascent_steps,
                  const FeasibleProjectionOptions& popts = {}) const {
    return maximize_over_candidates(moment(w), r1, r2, ascent_steps, popts);
  }

  /// min over the capped simplex at fixed M: fill the cap on the smallest scores.
  double min_at(const Matrix& m, double cap) const {
    const Vector s = sample_scores(m);
    std::vector<Index> order(static_cast<std::size_t>(n()));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return s[a] < s[b]; });
    double mass = 1.0, val = 0.0;
    for (Index i : order) {
      const double take = std::min(cap, mass);
      val += take * s[i];
      mass -= take;
      if (mass <= 0.0) break;
    }
    return val;
  }

  /// Largest singular value of w -> sum_i w_i A_i, by power iteration.
  double operator_norm(int iterations) const {
    Vector v = Vector::Constant(n(), 1.0 / std::sqrt(static_cast<double>(n())));
    double est = 0.0;
    for (int k = 0; k < iterations; ++k) {
      const Vector u = sample_scores(moment(v));
      const double nu = u.norm();
      if (nu == 0.0) return 0.0;
      est = std::sqrt(nu);
      v = u / nu;
    }
    return est;
  }

 private:
  const Matrix& X_;
  std::optional<Matrix> sigma_;
};

/// Approximately solves the weight min-max problem by projected
/// descent-ascent in primal-dual form: a projected descent step on the
/// weights, then a projected ascent step on M at the extrapolated weights
/// 2 w_{k+1} - w_k. Iterates are averaged uniformly and restarted from the
/// average every `restart_period` steps. The certificate is the inner
/// maximum at the returned weights; `failed` is set iff it exceeds tau_cut.
inline SaddleReport solve_weights(const Matrix& X, const std::optional<Matrix>& sigma, const TuningParams& params,
                                  const WeightSolverOptions& opts = {}) {
  if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("solve_weights: empty design");
  if (!X.allFinite()) throw std::invalid_argument("solve_weights: non-finite design");
  if (!(params.eps >= 0.0 && params.eps < 1.0)) throw std::invalid_argument("solve_weights: eps must lie in [0, 1)");
  if (!(params.r1 > 0.0) || !(params.r2 > 0.0)) throw std::invalid_argument("solve_weights: radii must be > 0");

  const WeightProblem prob(X, sigma);
  const Index n = prob.n();
  const Index d = prob.d();
  const double nn = static_cast<double>(n);
  const double cap = 1.0 / (nn * (1.0 - params.eps));
  const double r1 = params.r1, r2 = params.r2;
  const int cert_steps = 10 * opts.inner_iterations;

  SaddleReport rep;
  rep.weights.eps = params.eps;

  auto finish = [&](Vector w, const std::optional<Matrix>& m_avg) {
    rep.weights.w = std::move(w);
    const InnerMax cert = prob.max_at(rep.weights.w, r1, r2, cert_steps, opts.projection);
    rep.certificate_value = cert.value;
    if (m_avg) {
      rep.duality_gap = std::max(0.0, cert.value - std::max(prob.min_at(*m_avg, cap), prob.min_at(cert.m, cap)));
    }
    rep.failed = rep.certificate_value > params.tau_cut;
    return rep;
  };

  if (cap * nn <= 1.0 + 1e-12) {
    // Singleton feasible set: uniform weights are the solution.
    rep.converged = true;
    return finish(Vector::Constant(n, 1.0 / nn), std::nullopt);
  }

  const double knorm = prob.operator_norm(opts.power_iterations) * 1.05;
  if (knorm == 0.0) {
    rep.converged = true;
    return finish(Vector::Constant(n, 1.0 / nn), Matrix::Zero(d, d));
  }
  // Balance the step lengths by the natural scales of the two sets.
  const double omega = (1.0 / std::sqrt(nn)) / (r2 * r2);
  const double tau = opts.step_scale * omega / knorm;
  const double sig = opts.step_scale / (omega * knorm);

  Vector w = Vector::Constant(n, 1.0 / nn);
  Matrix m = Matrix::Zero(d, d);
  Vector w_sum = Vector::Zero(n);
  Matrix m_sum = Matrix::Zero(d, d);
  int in_epoch = 0;
  Vector w_avg = w;
  Matrix m_avg = m;
  const int period = std::max(1, opts.restart_period);

  int it = 0;
  while (it < opts.max_iterations) {
    const Vector w_next = project_capped_simplex_with_cap(w - tau * prob.sample_scores(m), cap);
    const Matrix g = prob.moment(2.0 * w_next - w);
    m = project_feasible_matrix(m + sig * g, r1, r2, opts.projection).m;
    w = w_next;
    w_sum += w;
    m_sum += m;
    ++in_epoch;
    ++it;

    if (in_epoch == period || it == opts.max_iterations) {
      w_avg = w_sum / static_cast<double>(in_epoch);
      m_avg = m_sum / static_cast<double>(in_epoch);
      w = w_avg;
      m = m_avg;
      w_sum.setZero();
      m_sum.setZero();
      in_epoch = 0;

      const InnerMax best = prob.max_at(w_avg, r1, r2, opts.inner_iterations, opts.projection);
      const double upper = best.value;
      // The best response to w_avg is often a better dual point than m_avg.
      const double lower = std::max(prob.min_at(m_avg, cap), prob.min_at(best.m, cap));
      if (upper - lower <= opts.tol * std::max(1e-12, std::abs(upper))) {
        rep.converged = true;
        break;
      }
    }
  }
  rep.iterations = it;
  return finish(w_avg, m_avg);
}

/// Keeps samples with w_i >= 1/(2n) at weight 1/n and drops the rest.
inline TruncatedWeights truncate_weights(const WeightVector& wv) {
  const Index n = wv.n();
  const double nn = static_cast<double>(n);
  const double threshold = 1.0 / (2.0 * nn);
  TruncatedWeights t;
  t.w_prime = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (wv.w[i] >= threshold) {
      t.w_prime[i] = 1.0 / nn;
      t.retained.push_back(i);
    }
  }
  return t;
}

}  // namespace robreg
