#pragma once

// l1-penalized Huber regression on truncated sample weights:
//
//   argmin_beta  sum_i lambda_o^2 H(n w'_i (y_i - X_i^T beta) / (lambda_o sqrt(n))) + lambda_s ||beta||_1

#include <cmath>
#include <stdexcept>
#include <vector>

#include "robreg/core.hpp"
#include "robreg/prox_gradient.hpp"
#include "robreg/weight_solver.hpp"

namespace robreg {

using HuberFitResult = FitResult;

/// Smooth part of the weighted Huber objective, restricted to samples with nonzero weight.
class WeightedHuberLoss {
 public:
  WeightedHuberLoss(const Dataset& data, const Vector& w_prime, double lambda_o)
      : n_(static_cast<double>(data.n())), lambda_o_(lambda_o), scale_(lambda_o * std::sqrt(n_)) {
    if (w_prime.size() != data.n()) throw std::invalid_argument("WeightedHuberLoss: weight length mismatch");
    if (!(lambda_o > 0.0)) throw std::invalid_argument("WeightedHuberLoss: lambda_o must be > 0");
    std::vector<Index> rows;
    for (Index i = 0; i < data.n(); ++i) {
      if (w_prime[i] != 0.0) rows.push_back(i);
    }
    X_.resize(static_cast<Index>(rows.size()), data.d());
    y_.resize(static_cast<Index>(rows.size()));
    a_.resize(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const Index i = rows[k];
      const Index r = static_cast<Index>(k);
      X_.row(r) = data.design().row(i);
      y_[r] = data.response()[i];
      a_[r] = n_ * w_prime[i];
    }
    dim_ = data.d();
  }

  Index dim() const { return dim_; }
  Index active_samples() const { return X_.rows(); }

  double value(const Vector& beta) const {
    const Vector arg = a_.cwiseProduct(y_ - X_ * beta) / scale_;
    double s = 0.0;
    for (Index i = 0; i < arg.size(); ++i) s += huber_value(arg[i]);
    return lambda_o_ * lambda_o_ * s;
  }

  Vector gradient(const Vector& beta) const {
    if (X_.rows() == 0) return Vector::Zero(dim_);
    const Vector arg = a_.cwiseProduct(y_ - X_ * beta) / scale_;
    const Vector score = a_.cwiseProduct(arg.unaryExpr([](double t) { return huber_score(t); }));
    return -(lambda_o_ / std::sqrt(n_)) * (X_.transpose() * score);
  }

  double lipschitz_bound() const { return scaled_gram_top_eigenvalue(X_, a_, n_); }

 private:
  double n_;
  double lambda_o_;
  double scale_;
  Matrix X_;
  Vector y_;
  Vector a_;
  Index dim_ = 0;
};

inline double weighted_huber_objective(const Vector& beta, const Dataset& data, const TruncatedWeights& w,
                                       double lambda_o, double lambda_s) {
  return WeightedHuberLoss(data, w.w_prime, lambda_o).value(beta) + lambda_s * beta.lpNorm<1>();
}

inline Vector smooth_gradient(const Vector& beta, const Dataset& data, const TruncatedWeights& w, double lambda_o) {
  return WeightedHuberLoss(data, w.w_prime, lambda_o).gradient(beta);
}

/// Solves the weighted penalized Huber problem from beta = 0. An all-zero
/// design (or no retained samples) yields beta = 0.
inline HuberFitResult fit_penalized_huber(const Dataset& data, const TruncatedWeights& w, double lambda_o,
                                          double lambda_s, const ProxGradientOptions& opts = {}) {
  if (!(lambda_o > 0.0)) throw std::invalid_argument("fit_penalized_huber: lambda_o must be > 0");
  if (!(lambda_s >= 0.0)) throw std::invalid_argument("fit_penalized_huber: lambda_s must be >= 0");
  if (w.retained.empty()) throw std::invalid_argument("fit_penalized_huber: no retained samples");
  const WeightedHuberLoss loss(data, w.w_prime, lambda_o);
  return minimize_l1_penalized(loss, lambda_s, opts);
}

}  // namespace robreg
