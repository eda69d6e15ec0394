#pragma once

// Reference estimators: the Lasso and the unweighted penalized Huber fit.

#include <cmath>
#include <stdexcept>

#include "robreg/core.hpp"
#include "robreg/huber_regression.hpp"
#include "robreg/prox_gradient.hpp"

namespace robreg {

/// (1/2n) ||y - X beta||^2.
class SquaredLoss {
 public:
  explicit SquaredLoss(const Dataset& data) : data_(data), n_(static_cast<double>(data.n())) {}

  Index dim() const { return data_.d(); }
  double value(const Vector& beta) const {
    return 0.5 * (data_.response() - data_.design() * beta).squaredNorm() / n_;
  }
  Vector gradient(const Vector& beta) const {
    return -(data_.design().transpose() * (data_.response() - data_.design() * beta)) / n_;
  }
  double lipschitz_bound() const {
    return scaled_gram_top_eigenvalue(data_.design(), Vector::Ones(data_.n()), n_);
  }

 private:
  const Dataset& data_;
  double n_;
};

inline FitResult fit_lasso(const Dataset& data, double lambda_s, const ProxGradientOptions& opts = {}) {
  if (data.n() < 1) throw std::invalid_argument("fit_lasso: empty dataset");
  if (!(lambda_s >= 0.0)) throw std::invalid_argument("fit_lasso: lambda_s must be >= 0");
  return minimize_l1_penalized(SquaredLoss(data), lambda_s, opts);
}

/// Penalized Huber regression with every sample kept at weight 1/n.
inline HuberFitResult fit_huber_unweighted(const Dataset& data, double lambda_o, double lambda_s,
                                           const ProxGradientOptions& opts = {}) {
  return fit_penalized_huber(data, TruncatedWeights::uniform(data.n()), lambda_o, lambda_s, opts);
}

}  // namespace robreg
