#pragma once

// Tuning parameters: the theory-driven settings for known and unknown
// covariance, and a practical heuristic for desk-scale experiments.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "robreg/baselines.hpp"
#include "robreg/core.hpp"
#include "robreg/weight_solver.hpp"

namespace robreg {

enum class TuningMode { theory_known_sigma, theory_unknown_sigma, practical };

struct TheoryInputs {
  Index n = 0;
  Index d = 0;
  Index s = 1;
  Index o = 0;
  double delta = 0.1;
  double sigma = 1.0;
  double L = 1.0;          // subGaussian constant
  double sigma_max = 1.0;  // sqrt of the largest eigenvalue of the covariance
  double re_constant = 1.0;
  TuningConstants constants{};
};

/// Side conditions under which the error guarantees are stated. They are
/// reported, not enforced.
struct ValidityReport {
  double side_max = 0.0;  // max{r_d r1^2, r2, s r_d}
  bool side_conditions = false;
  bool contamination_in_range = false;
  bool lambda_o_condition = false;
  bool sample_size = true;  // n >= s^2 log(d/s); unknown covariance only

  bool all() const { return side_conditions && contamination_in_range && lambda_o_condition && sample_size; }
};

struct TheoryTuning {
  TuningParams params;
  RateTerms rates;
  ValidityReport validity;
};

namespace detail {

inline void check_theory_inputs(const TheoryInputs& in) {
  if (!(in.sigma > 0.0)) throw std::invalid_argument("theory tuning: sigma must be > 0");
  if (!(in.L >= 1.0)) throw std::invalid_argument("theory tuning: L must be >= 1");
  if (!(in.sigma_max > 0.0)) throw std::invalid_argument("theory tuning: sigma_max must be > 0");
  if (!(in.re_constant > 0.0 && in.re_constant <= 1.0)) {
    throw std::invalid_argument("theory tuning: re_constant must lie in (0, 1]");
  }
  const auto& c = in.constants;
  if (!(c.c_eps >= 1.0 && c.c_eps < 2.0)) throw std::invalid_argument("theory tuning: c_eps must lie in [1, 2)");
  if (!(c.c_r1 > 0.0 && c.c_r2 > 0.0 && c.c_s > 0.0 && c.c_o > 0.0 && c.c_cut >= 0.0 && c.c_max > 0.0)) {
    throw std::invalid_argument("theory tuning: constants must be positive");
  }
}

inline void fill_common(TheoryTuning& t, const TheoryInputs& in, double r2_bracket) {
  const auto& c = in.constants;
  const double nn = static_cast<double>(in.n);
  const double lam_o_sqrt_n = 24.0 * in.L * in.L * in.sigma;
  auto& p = t.params;
  p.constants = c;
  p.re_constant = in.re_constant;
  p.lambda_o = lam_o_sqrt_n / std::sqrt(nn);
  p.r2 = c.c_r2 * std::pow(c.c_max, 3) * in.L * (in.sigma_max / (in.re_constant * in.re_constant)) * lam_o_sqrt_n *
         r2_bracket;
  p.r1 = c.c_r1 * std::sqrt(static_cast<double>(in.s)) * p.r2;
  p.eps = c.c_eps * static_cast<double>(in.o) / nn;

  auto& v = t.validity;
  v.side_max = std::max({t.rates.r_d * p.r1 * p.r1, p.r2, static_cast<double>(in.s) * t.rates.r_d});
  v.side_conditions = v.side_max <= 1.0;
  v.lambda_o_condition = lam_o_sqrt_n >= c.c_o * in.L * in.sigma_max * p.r2 * std::sqrt(1.0 + std::log(in.L));
}

}  // namespace detail

/// Parameters for the known-covariance estimator with lambda_o sqrt(n) = 24 L^2 sigma.
inline TheoryTuning theory_params_known(const TheoryInputs& in) {
  detail::check_theory_inputs(in);
  TheoryTuning t;
  t.rates = rate_terms(in.n, in.d, in.s, in.o, in.delta);
  const auto& r = t.rates;
  const auto& c = in.constants;
  const double nn = static_cast<double>(in.n);
  const double sq_s = std::sqrt(static_cast<double>(in.s));
  const double frac = static_cast<double>(in.o) / nn;

  detail::fill_common(t, in, sq_s * r.r_d + r.r_delta + r.r_o + std::sqrt(frac) * std::sqrt(static_cast<double>(in.s) * r.r_d));
  auto& p = t.params;
  const double lam_o_sqrt_n = p.lambda_o * std::sqrt(nn);
  const double lsm = in.L * in.sigma_max;
  p.lambda_s = c.c_s * c.c_max * c.c_max * lsm * lam_o_sqrt_n *
               (r.r_d + (r.r_delta + r.r_o) / sq_s + std::sqrt(frac) * std::sqrt(r.r_d));
  p.tau_cut = c.c_cut * lsm * lsm * (r.r_d * p.r1 * p.r1 + (r.r_delta + r.r_o_prime) * p.r2 * p.r2);
  // o = 0 is the clean limit and is treated as in range.
  t.validity.contamination_in_range = frac <= 1.0 / (5.0 * std::exp(1.0));
  return t;
}

/// Parameters for the unknown-covariance estimator.
inline TheoryTuning theory_params_unknown(const TheoryInputs& in) {
  detail::check_theory_inputs(in);
  TheoryTuning t;
  t.rates = rate_terms(in.n, in.d, in.s, in.o, in.delta);
  const auto& r = t.rates;
  const auto& c = in.constants;
  const double nn = static_cast<double>(in.n);
  const double sq_s = std::sqrt(static_cast<double>(in.s));
  const double sq_frac = std::sqrt(static_cast<double>(in.o) / nn);

  detail::fill_common(t, in, sq_s * r.r_d + r.r_delta + sq_frac);
  auto& p = t.params;
  const double lam_o_sqrt_n = p.lambda_o * std::sqrt(nn);
  const double lsm = in.L * in.sigma_max;
  p.lambda_s = c.c_s * c.c_max * c.c_max * lsm * lam_o_sqrt_n * (r.r_d + (r.r_delta + sq_frac) / sq_s);
  p.tau_cut = c.c_cut * lsm * lsm * (r.r_d * p.r1 * p.r1 + p.r2 * p.r2);
  t.validity.contamination_in_range = static_cast<double>(in.o) / nn <= 0.5;
  const double s = static_cast<double>(in.s);
  t.validity.sample_size = nn >= s * s * std::log(static_cast<double>(in.d) / s);
  return t;
}

struct PilotOptions {
  Index outlier_budget = 0;  // guess of o
  Index sparsity_guess = 1;  // guess of s
  double delta = 0.1;
  double huber_knob = 2.0;    // lambda_o sqrt(n) = huber_knob * sigma_hat
  double lambda_knob = 2.0;   // lambda_s = lambda_knob * sigma_hat * sqrt(log d / n)
  double sigma_max = 1.0;     // used when no covariance is supplied
  bool known_covariance = true;
  double L = 1.0;
  double c_r1 = 5.0;
  double c_cut = 1.0;
  int rounds = 3;
  ProxGradientOptions fit{};
};

struct PracticalTuning {
  TuningParams params;
  double sigma_hat = 0.0;
};

/// 1.4826 * median |v - median(v)|.
inline double mad_scale(const Vector& v) {
  if (v.size() == 0) return 0.0;
  auto median = [](std::vector<double> a) {
    const auto mid = a.size() / 2;
    std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid), a.end());
    double m = a[mid];
    if (a.size() % 2 == 0) {
      m = 0.5 * (m + *std::max_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
  };
  std::vector<double> a(v.data(), v.data() + v.size());
  const double med = median(a);
  for (auto& x : a) x = std::abs(x - med);
  return 1.4826 * median(std::move(a));
}

namespace detail {

// Residuals of an unpenalized Huber refit on the support of `beta`. Shrinkage
// bias in the penalized residuals inflates the scale estimate at small n.
// Falls back to the penalized residuals when the support is too large to refit.
inline Vector debiased_residuals(const Dataset& data, const TruncatedWeights& w, const Vector& beta, double lambda_o,
                                 const ProxGradientOptions& opts) {
  std::vector<Index> support;
  for (Index j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) support.push_back(j);
  }
  const Vector penalized = data.response() - data.design() * beta;
  if (support.empty() || 2 * support.size() >= w.retained.size()) return penalized;
  const Matrix Xs = data.design()(Eigen::all, support);
  const auto refit = fit_penalized_huber(Dataset(Xs, data.response()), w, lambda_o, 0.0, opts);
  return data.response() - Xs * refit.beta_hat;
}

}  // namespace detail

/// Noise scale estimated by iterated penalized Huber fits on the retained
/// samples. Each round refits the selected support without penalty and takes
/// the MAD of the retained residuals, inflated for the fitted dimension.
inline double pilot_sigma(const Dataset& data, const TruncatedWeights& w, const PilotOptions& pilot) {
  Vector y_kept(static_cast<Index>(w.retained.size()));
  for (std::size_t k = 0; k < w.retained.size(); ++k) y_kept[static_cast<Index>(k)] = data.response()[w.retained[k]];
  double sigma = mad_scale(y_kept);
  if (!(sigma > 0.0)) sigma = 1.0;
  const double nn = static_cast<double>(data.n());
  const double universal = std::sqrt(std::log(static_cast<double>(data.d())) / nn);
  for (int r = 0; r < pilot.rounds; ++r) {
    const double lambda_o = pilot.huber_knob * sigma / std::sqrt(nn);
    const double lambda_s = pilot.lambda_knob * sigma * universal;
    const auto fit = fit_penalized_huber(data, w, lambda_o, lambda_s, pilot.fit);
    const Vector resid = detail::debiased_residuals(data, w, fit.beta_hat, lambda_o, pilot.fit);
    for (std::size_t k = 0; k < w.retained.size(); ++k) y_kept[static_cast<Index>(k)] = resid[w.retained[k]];
    const double kept = static_cast<double>(w.retained.size());
    const double df = static_cast<double>((fit.beta_hat.array() != 0.0).count());
    const double next = mad_scale(y_kept) * std::sqrt(kept / std::max(kept - df, 1.0));
    if (!(next > 0.0)) break;
    sigma = next;
  }
  return sigma;
}

/// Heuristic parameters. The radii, eps and tau_cut do not depend on the
/// noise scale, so the weights can be computed before sigma_hat; lambda_o and
/// lambda_s come from a pilot fit on the samples kept by `w` (all samples by
/// default).
inline PracticalTuning practical_params(const Dataset& data, const PilotOptions& pilot,
                                        const std::optional<Matrix>& covariance = std::nullopt,
                                        const std::optional<TruncatedWeights>& w = std::nullopt) {
  const Index n = data.n(), d = data.d();
  const Index s = std::max<Index>(1, pilot.sparsity_guess);
  const Index o = pilot.outlier_budget;
  if (o < 0 || 2 * o >= n) throw std::invalid_argument("practical_params: outlier budget must be < n/2");

  double sigma_max = pilot.sigma_max;
  if (covariance) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(*covariance, Eigen::EigenvaluesOnly);
    sigma_max = std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
  }

  const RateTerms r = rate_terms(n, d, s, o, pilot.delta);
  const double nn = static_cast<double>(n);
  const double frac = static_cast<double>(o) / nn;
  const double sq_s = std::sqrt(static_cast<double>(s));

  PracticalTuning out;
  auto& p = out.params;
  p.eps = frac;
  if (pilot.known_covariance) {
    p.r2 = sq_s * r.r_d + r.r_delta + r.r_o + std::sqrt(frac) * std::sqrt(static_cast<double>(s) * r.r_d);
  } else {
    p.r2 = sq_s * r.r_d + r.r_delta + std::sqrt(frac);
  }
  p.r1 = pilot.c_r1 * sq_s * p.r2;
  const double lsm = pilot.L * sigma_max;
  p.tau_cut = pilot.known_covariance
                  ? pilot.c_cut * lsm * lsm * (r.r_d * p.r1 * p.r1 + (r.r_delta + r.r_o_prime) * p.r2 * p.r2)
                  : pilot.c_cut * lsm * lsm * (r.r_d * p.r1 * p.r1 + p.r2 * p.r2);
  p.constants.c_r1 = pilot.c_r1;
  p.constants.c_cut = pilot.c_cut;
  p.constants.c_eps = 1.0;

  out.sigma_hat = pilot_sigma(data, w ? *w : TruncatedWeights::uniform(n), pilot);
  p.lambda_o = pilot.huber_knob * out.sigma_hat / std::sqrt(nn);
  p.lambda_s = pilot.lambda_knob * out.sigma_hat * std::sqrt(std::log(static_cast<double>(d)) / nn);
  return out;
}

}  // namespace robreg
