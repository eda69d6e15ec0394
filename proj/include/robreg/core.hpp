#pragma once

// Domain types shared across the library: datasets, simulation ground truth,
// rate terms, tuning parameters and the Huber loss primitives.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace robreg {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Observed design matrix (n x d) and response vector (n), possibly contaminated.
class Dataset {
 public:
  Dataset() = default;

  Dataset(Matrix design, Vector response)
      : design_(std::move(design)), response_(std::move(response)) {
    if (design_.rows() != response_.size()) {
      throw std::invalid_argument("Dataset: design has " + std::to_string(design_.rows()) +
                                  " rows but response has " + std::to_string(response_.size()) +
                                  " entries");
    }
    if (!design_.allFinite() || !response_.allFinite()) {
      throw std::invalid_argument("Dataset: non-finite entry");
    }
  }

  const Matrix& design() const { return design_; }
  const Vector& response() const { return response_; }
  Index n() const { return design_.rows(); }
  Index d() const { return design_.cols(); }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.design_.rows() == b.design_.rows() && a.design_.cols() == b.design_.cols() &&
           a.design_ == b.design_ && a.response_ == b.response_;
  }

 private:
  Matrix design_;
  Vector response_;
};

/// Simulation-only truth: coefficients, support, outlier set and the
/// distributional parameters used to draw the clean sample.
struct GroundTruth {
  Vector beta_star;
  std::vector<Index> support;
  std::vector<Index> outliers;  // sorted ascending
  double sigma = 0.0;
  Matrix covariance;
  double subgaussian_constant = 1.0;

  Index s() const { return static_cast<Index>(support.size()); }
  Index o() const { return static_cast<Index>(outliers.size()); }

  bool is_outlier(Index i) const {
    for (Index k : outliers) {
      if (k == i) return true;
    }
    return false;
  }
};

/// Error scales r_d, r_delta, r_o and r_o' (natural logarithm throughout).
struct RateTerms {
  double r_d = 0.0;
  double r_delta = 0.0;
  double r_o = 0.0;
  double r_o_prime = 0.0;
};

inline RateTerms rate_terms(Index n, Index d, Index s, Index o, double delta) {
  if (n < 1) throw std::invalid_argument("rate_terms: n must be >= 1");
  if (s < 1) throw std::invalid_argument("rate_terms: s must be >= 1");
  if (!(delta > 0.0 && delta <= 0.5)) {
    throw std::invalid_argument("rate_terms: delta must lie in (0, 1/2]");
  }
  if (d < 3 * s) throw std::invalid_argument("rate_terms: requires d/s >= 3");
  if (o < 0 || o >= n) throw std::invalid_argument("rate_terms: requires 0 <= o < n");

  const double nn = static_cast<double>(n);
  RateTerms r;
  r.r_d = std::sqrt(std::log(static_cast<double>(d) / static_cast<double>(s)) / nn);
  r.r_delta = std::sqrt(std::log(1.0 / delta) / nn);
  if (o > 0) {
    const double frac = static_cast<double>(o) / nn;
    const double lg = std::log(nn / static_cast<double>(o));
    r.r_o = frac * std::sqrt(lg);
    r.r_o_prime = frac * lg;
  }
  return r;
}

/// Named multipliers appearing in the parameter formulas.
struct TuningConstants {
  double c_o = 50.0;
  double c_s = 24.0;
  double c_eps = 1.0;
  double c_cut = 1.0;
  double c_r1 = 5.0;
  double c_r2 = 150.0;
  double c_max = 1.0;  // c_max (known covariance) or c_max' (unknown covariance)
};

struct TuningParams {
  double lambda_o = 0.0;
  double lambda_s = 0.0;
  double eps = 0.0;
  double tau_cut = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  TuningConstants constants;
  double re_constant = 1.0;

  /// Throws if a field is outside its admissible range. eps = 0 is accepted:
  /// it is the clean limit, where the capped simplex collapses to uniform weights.
  void validate() const {
    if (!(lambda_o > 0.0)) throw std::invalid_argument("TuningParams: lambda_o must be > 0");
    if (!(lambda_s >= 0.0)) throw std::invalid_argument("TuningParams: lambda_s must be >= 0");
    if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("TuningParams: eps must lie in [0, 1)");
    if (!(tau_cut >= 0.0)) throw std::invalid_argument("TuningParams: tau_cut must be >= 0");
    if (!(r1 > 0.0) || !(r2 > 0.0)) throw std::invalid_argument("TuningParams: radii must be > 0");
    if (!(re_constant > 0.0 && re_constant <= 1.0)) {
      throw std::invalid_argument("TuningParams: re_constant must lie in (0, 1]");
    }
  }
};

/// Huber loss: t^2/2 on |t| <= 1, |t| - 1/2 beyond.
inline double huber_value(double t) {
  const double a = std::abs(t);
  return a <= 1.0 ? 0.5 * t * t : a - 0.5;
}

/// Derivative of the Huber loss, clipped to [-1, 1].
inline double huber_score(double t) {
  if (t > 1.0) return 1.0;
  if (t < -1.0) return -1.0;
  return t;
}

inline double soft_threshold(double v, double thresh) {
  if (v > thresh) return v - thresh;
  if (v < -thresh) return v + thresh;
  return 0.0;
}

}  // namespace robreg
