#pragma once

// Brute-force reference solutions used by the unit and acceptance tests.
// Each one enumerates the combinatorial structure of the optimum instead of
// iterating, so it shares no code path with the library.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "robreg/robreg.hpp"

namespace robreg::testing {

inline std::string data_path(const std::string& name) { return std::string(ROBREG_TEST_DATA) + "/" + name; }

// Projection onto {w >= 0, sum w = 1, w <= cap}: every coordinate is at 0, at
// the cap, or free with a common shift. Enumerate all 3^n labelings.
inline Vector brute_capped_simplex(const Vector& v, double cap) {
  const Index n = v.size();
  Index combos = 1;
  for (Index i = 0; i < n; ++i) combos *= 3;
  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();
  std::vector<int> label(static_cast<std::size_t>(n));
  for (Index c = 0; c < combos; ++c) {
    Index k = c;
    int n_free = 0, n_cap = 0;
    double free_sum = 0.0;
    for (Index i = 0; i < n; ++i) {
      label[i] = static_cast<int>(k % 3);
      k /= 3;
      if (label[i] == 1) ++n_cap;
      if (label[i] == 2) {
        ++n_free;
        free_sum += v[i];
      }
    }
    double tau = 0.0;
    if (n_free == 0) {
      if (std::abs(n_cap * cap - 1.0) > 1e-12) continue;
    } else {
      tau = (free_sum + n_cap * cap - 1.0) / n_free;
    }
    Vector w(n);
    bool ok = true;
    for (Index i = 0; i < n && ok; ++i) {
      w[i] = label[i] == 0 ? 0.0 : label[i] == 1 ? cap : v[i] - tau;
      if (w[i] < -1e-12 || w[i] > cap + 1e-12) ok = false;
    }
    if (!ok) continue;
    const double dist = (w - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = w;
    }
  }
  return best;
}

// Projection onto the l1 ball of the given radius: enumerate the support.
inline Vector brute_l1_ball(const Vector& v, double radius) {
  if (v.lpNorm<1>() <= radius) return v;
  const Index n = v.size();
  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Index mask = 1; mask < (Index{1} << n); ++mask) {
    double mass = 0.0;
    int size = 0;
    for (Index i = 0; i < n; ++i) {
      if (mask >> i & 1) {
        mass += std::abs(v[i]);
        ++size;
      }
    }
    const double theta = (mass - radius) / size;
    if (theta < 0.0) continue;
    Vector x = Vector::Zero(n);
    bool ok = true;
    for (Index i = 0; i < n && ok; ++i) {
      if (!(mask >> i & 1)) continue;
      const double a = std::abs(v[i]) - theta;
      if (a < -1e-12) ok = false;
      x[i] = std::copysign(std::max(a, 0.0), v[i]);
    }
    if (!ok) continue;
    const double dist = (x - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  }
  return best;
}

// argmin (1/2m) sum_i c_i (y_i - x_i'b)^2 + lambda |b|_1 over small d, by
// enumerating sign patterns and solving each restricted stationarity system.
inline Vector brute_weighted_lasso(const Matrix& X, const Vector& y, const Vector& c, double m, double lambda) {
  const Index d = X.cols();
  auto objective = [&](const Vector& b) {
    return 0.5 / m * (c.array() * (y - X * b).array().square()).sum() + lambda * b.lpNorm<1>();
  };
  const Matrix gram = X.transpose() * c.asDiagonal() * X / m;
  const Vector xty = X.transpose() * c.asDiagonal() * y / m;
  Index combos = 1;
  for (Index j = 0; j < d; ++j) combos *= 3;
  Vector best = Vector::Zero(d);
  double best_val = objective(best);
  for (Index code = 0; code < combos; ++code) {
    std::vector<Index> active;
    std::vector<double> sign;
    Index k = code;
    for (Index j = 0; j < d; ++j) {
      const int t = static_cast<int>(k % 3);
      k /= 3;
      if (t > 0) {
        active.push_back(j);
        sign.push_back(t == 1 ? 1.0 : -1.0);
      }
    }
    if (active.empty()) continue;
    const Index a = static_cast<Index>(active.size());
    Matrix g(a, a);
    Vector rhs(a);
    for (Index p = 0; p < a; ++p) {
      rhs[p] = xty[active[p]] - lambda * sign[p];
      for (Index q = 0; q < a; ++q) g(p, q) = gram(active[p], active[q]);
    }
    const Vector sol = g.ldlt().solve(rhs);
    Vector b = Vector::Zero(d);
    bool consistent = true;
    for (Index p = 0; p < a; ++p) {
      if (sol[p] * sign[p] <= 0.0) consistent = false;
      b[active[p]] = sol[p];
    }
    if (!consistent) continue;
    const double val = objective(b);
    if (val < best_val) {
      best_val = val;
      best = b;
    }
  }
  return best;
}

inline Matrix random_symmetric(std::mt19937_64& rng, Index d, double scale) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix a(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = nd(rng);
  return 0.5 * (a + a.transpose());
}

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> nd;
  Matrix a(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) a(i, j) = nd(rng);
  return a;
}

inline Vector random_vector(std::mt19937_64& rng, Index n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = nd(rng);
  return v;
}

struct ProjectionCase {
  double r1 = 0.0, r2 = 0.0;
  Matrix m, expected;
};

// Cases solved offline as conic programs (tests/oracles/make_fixtures.py).
inline std::vector<ProjectionCase> load_projection_cases() {
  std::ifstream is(data_path("feasible_projection_cases.txt"));
  std::vector<ProjectionCase> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Index d = 0;
    ProjectionCase c;
    ls >> d >> c.r1 >> c.r2;
    c.m.resize(d, d);
    c.expected.resize(d, d);
    for (Index i = 0; i < d * d; ++i) ls >> c.m(i / d, i % d);
    for (Index i = 0; i < d * d; ++i) ls >> c.expected(i / d, i % d);
    out.push_back(std::move(c));
  }
  return out;
}

inline TruncatedWeights keep_mask(const std::vector<bool>& keep) {
  const Index n = static_cast<Index>(keep.size());
  TruncatedWeights t;
  t.w_prime = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (keep[static_cast<std::size_t>(i)]) {
      t.w_prime[i] = 1.0 / static_cast<double>(n);
      t.retained.push_back(i);
    }
  }
  return t;
}

inline TruncatedWeights random_mask(std::mt19937_64& rng, Index n) {
  std::bernoulli_distribution b(0.8);
  std::vector<bool> keep(static_cast<std::size_t>(n));
  for (auto&& k : keep) k = b(rng);
  keep[0] = true;
  return keep_mask(keep);
}

inline Dataset random_dataset(std::mt19937_64& rng, Index n, Index d, double noise) {
  const Matrix X = random_matrix(rng, n, d);
  Vector beta = Vector::Zero(d);
  beta[0] = 1.5;
  if (d > 1) beta[1] = -2.0;
  return Dataset(X, X * beta + random_vector(rng, n, noise));
}

// Trace positions where F went up, outside the recorded segment starts.
inline std::vector<std::size_t> trace_increases(const FitResult& fit) {
  std::vector<std::size_t> bad;
  for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
    const bool segment_start = std::find(fit.restarts.begin(), fit.restarts.end(), static_cast<int>(i)) != fit.restarts.end();
    if (!segment_start && fit.objective_trace[i] > fit.objective_trace[i - 1]) bad.push_back(i);
  }
  return bad;
}

inline double median(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}

}  // namespace robreg::testing
