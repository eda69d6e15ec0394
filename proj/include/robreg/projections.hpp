#pragma once

// Euclidean projections used by the weight solver: the capped probability
// simplex for weights, and the PSD / trace / entrywise-l1 sets for the
// candidate matrices.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "robreg/core.hpp"

namespace robreg {

/// Element of the capped simplex {w >= 0, sum w = 1, max w <= 1/(n(1-eps))}.
struct WeightVector {
  Vector w;
  double eps = 0.0;

  Index n() const { return w.size(); }
  double cap() const { return 1.0 / (static_cast<double>(w.size()) * (1.0 - eps)); }
};

/// A point of {M symmetric : M psd, Tr M <= r2^2, ||M||_1 <= r1^2}.
struct CandidateMatrix {
  Matrix m;
  bool converged = true;
  int sweeps = 0;
};

namespace detail {

// Threshold tau with sum_i clamp(v_i - tau, 0, cap) == total. The map is
// piecewise linear and nonincreasing in tau with kinks at v_i and v_i - cap.
inline double capped_threshold(const Vector& v, double cap, double total) {
  const Index n = v.size();
  auto mass = [&](double tau) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) s += std::clamp(v[i] - tau, 0.0, cap);
    return s;
  };
  std::vector<double> knots;
  knots.reserve(2 * static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    knots.push_back(v[i]);
    knots.push_back(v[i] - cap);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  // mass(knots.front()) = n*cap >= total, mass(knots.back()) = 0 < total.
  std::size_t lo = 0, hi = knots.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (mass(knots[mid]) >= total) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double m_lo = mass(knots[lo]);
  const double m_hi = mass(knots[hi]);
  if (m_lo == m_hi) return knots[lo];
  // Linear on [knots[lo], knots[hi]].
  return knots[lo] + (m_lo - total) * (knots[hi] - knots[lo]) / (m_lo - m_hi);
}

// Threshold theta >= 0 with sum_i max(|u_i| - theta, 0) == radius, assuming
// sum |u_i| > radius.
inline double l1_threshold(std::vector<double> mags, double radius) {
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < mags.size(); ++j) {
    cumsum += mags[j];
    const double t = (cumsum - radius) / static_cast<double>(j + 1);
    if (mags[j] - t > 0.0) {
      theta = t;
    } else {
      break;
    }
  }
  return std::max(theta, 0.0);
}

inline void require_finite_symmetric(const Matrix& m, const char* who) {
  if (m.rows() != m.cols()) throw std::invalid_argument(std::string(who) + ": matrix must be square");
  if (!m.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite entry");
}

}  // namespace detail

/// Euclidean projection onto {w >= 0, sum w = 1, w_i <= cap}.
inline Vector project_capped_simplex_with_cap(const Vector& v, double cap) {
  const Index n = v.size();
  if (n < 1) throw std::invalid_argument("project_capped_simplex: empty vector");
  if (!v.allFinite()) throw std::invalid_argument("project_capped_simplex: non-finite entry");
  const double room = cap * static_cast<double>(n);
  if (!(room >= 1.0 - 1e-12)) {
    throw std::invalid_argument("project_capped_simplex: cap too small for the weights to sum to one");
  }
  if (room <= 1.0 + 1e-12) {
    // The feasible set is the single point (1/n, ..., 1/n).
    return Vector::Constant(n, 1.0 / static_cast<double>(n));
  }
  const double tau = detail::capped_threshold(v, cap, 1.0);
  Vector w(n);
  for (Index i = 0; i < n; ++i) w[i] = std::clamp(v[i] - tau, 0.0, cap);
  return w;
}

inline WeightVector project_capped_simplex(const Vector& v, double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("project_capped_simplex: eps must lie in [0, 1)");
  WeightVector out;
  out.eps = eps;
  out.w = project_capped_simplex_with_cap(v, 1.0 / (static_cast<double>(v.size()) * (1.0 - eps)));
  return out;
}

/// Checks membership in the capped simplex up to `tol`.
inline bool is_feasible_weight(const WeightVector& wv, double tol = 1e-9) {
  if (wv.n() < 1) return false;
  if (std::abs(wv.w.sum() - 1.0) > tol) return false;
  return wv.w.minCoeff() >= -tol && wv.w.maxCoeff() <= wv.cap() + tol;
}

/// Frobenius projection onto the PSD cone.
inline Matrix project_psd(const Matrix& m) {
  detail::require_finite_symmetric(m, "project_psd");
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw std::runtime_error("project_psd: eigendecomposition failed");
  const Vector lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

/// Frobenius projection onto the half-space {Tr M <= r2^2}.
inline Matrix project_trace_ball(const Matrix& m, double r2) {
  if (!(r2 > 0.0)) throw std::invalid_argument("project_trace_ball: r2 must be > 0");
  const double excess = m.trace() - r2 * r2;
  if (excess <= 0.0) return m;
  Matrix out = m;
  out.diagonal().array() -= excess / static_cast<double>(m.rows());
  return out;
}

/// Frobenius projection onto {||M||_1 <= r1^2}, entrywise l1 norm.
inline Matrix project_l1_ball_matrix(const Matrix& m, double r1) {
  if (!(r1 > 0.0)) throw std::invalid_argument("project_l1_ball_matrix: r1 must be > 0");
  const double radius = r1 * r1;
  if (m.cwiseAbs().sum() <= radius) return m;
  std::vector<double> mags(static_cast<std::size_t>(m.size()));
  for (Index k = 0; k < m.size(); ++k) mags[static_cast<std::size_t>(k)] = std::abs(m.data()[k]);
  const double theta = detail::l1_threshold(std::move(mags), radius);
  return m.unaryExpr([theta](double x) { return soft_threshold(x, theta); });
}

/// Exact Frobenius projection onto {M psd, Tr M <= r2^2}: both sets are
/// spectral, so it suffices to project the eigenvalues onto
/// {mu >= 0, sum mu <= r2^2}.
inline Matrix project_psd_trace(const Matrix& m, double r2) {
  detail::require_finite_symmetric(m, "project_psd_trace");
  if (!(r2 > 0.0)) throw std::invalid_argument("project_psd_trace: r2 must be > 0");
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw std::runtime_error("project_psd_trace: eigendecomposition failed");
  Vector mu = es.eigenvalues().cwiseMax(0.0);
  const double budget = r2 * r2;
  if (mu.sum() > budget) {
    std::vector<double> lam(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    const double theta = detail::l1_threshold(std::move(lam), budget);
    mu = (es.eigenvalues().array() - theta).cwiseMax(0.0);
  }
  return es.eigenvectors() * mu.asDiagonal() * es.eigenvectors().transpose();
}

struct FeasibleProjectionOptions {
  int max_sweeps = 20000;
  double tol = 1e-10;
};

/// Frobenius projection onto PSD ∩ trace ball ∩ l1 ball. The spectral set
/// (PSD ∩ trace) has an exact projection, so the problem is split into two
/// blocks, X in the spectral set and Z in the l1 ball with X = Z, and solved
/// by ADMM with residual balancing of the penalty. If the spectral
/// projection already lies in the l1 ball it is the answer.
inline CandidateMatrix project_feasible_matrix(const Matrix& m, double r1, double r2,
                                               const FeasibleProjectionOptions& opts = {}) {
  detail::require_finite_symmetric(m, "project_feasible_matrix");
  if (!(r1 > 0.0) || !(r2 > 0.0)) throw std::invalid_argument("project_feasible_matrix: radii must be > 0");
  const double radius = r1 * r1;

  CandidateMatrix out;
  Matrix z = project_psd_trace(m, r2);
  out.sweeps = 1;
  if (z.cwiseAbs().sum() <= radius) {
    out.m = std::move(z);
    return out;
  }

  const Matrix sym = 0.5 * (m + m.transpose());
  Matrix u = Matrix::Zero(m.rows(), m.cols());
  double rho = 1.0;
  out.converged = false;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    const Matrix x = project_psd_trace((sym + rho * (z - u)) / (1.0 + rho), r2);
    Matrix z_next = project_l1_ball_matrix(x + u, r1);
    z_next = 0.5 * (z_next + z_next.transpose()).eval();
    const double dual = rho * (z_next - z).norm();
    z = std::move(z_next);
    u += x - z;
    const double primal = (x - z).norm();
    out.sweeps = sweep;
    const double scale = std::max(1.0, z.norm());
    if (primal <= opts.tol * scale && dual <= opts.tol * scale) {
      out.converged = true;
      break;
    }
    if (sweep % 10 == 0) {
      // u is the scaled dual variable and must be rescaled with rho.
      if (primal > 10.0 * dual) {
        rho *= 2.0;
        u /= 2.0;
      } else if (dual > 10.0 * primal) {
        rho /= 2.0;
        u *= 2.0;
      }
    }
  }
  out.m = std::move(z);
  return out;
}

/// Membership test for the candidate-matrix set with the tolerances used
/// throughout: min eigenvalue >= -1e-8, trace and l1 norm within 1e-8 relative.
inline bool is_feasible_matrix(const Matrix& m, double r1, double r2, double tol = 1e-8) {
  if (m.rows() != m.cols()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * std::max(1.0, m.cwiseAbs().maxCoeff())) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return false;
  if (es.eigenvalues().minCoeff() < -tol) return false;
  if (m.trace() > r2 * r2 * (1.0 + tol) + tol) return false;
  return m.cwiseAbs().sum() <= r1 * r1 * (1.0 + tol) + tol;
}

}  // namespace robreg
