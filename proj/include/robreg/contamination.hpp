#pragma once

// Synthetic instances: Gaussian covariates with a chosen covariance, symmetric
// (possibly heavy-tailed) noise, and adversarial corruption of a subset of
// samples.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>

#include "robreg/core.hpp"
#include "robreg/random.hpp"

namespace robreg {

namespace covariance {
struct Identity {};
struct Diagonal {
  std::vector<double> values;
};
struct Toeplitz {
  double rho = 0.0;
};
}  // namespace covariance
using CovarianceSpec = std::variant<covariance::Identity, covariance::Diagonal, covariance::Toeplitz>;

namespace noise {
struct Gaussian {};
struct StudentT {
  double df = 3.0;
};
struct ScaledRademacher {};
}  // namespace noise
using NoiseSpec = std::variant<noise::Gaussian, noise::StudentT, noise::ScaledRademacher>;

namespace coefficients {
struct Fixed {
  std::vector<double> values;
};
struct RandomSupport {
  double magnitude = 1.0;
};
}  // namespace coefficients
using BetaSpec = std::variant<coefficients::Fixed, coefficients::RandomSupport>;

struct GeneratorSpec {
  Index n = 100;
  Index d = 30;
  Index s = 3;
  double sigma = 1.0;
  CovarianceSpec covariance = covariance::Identity{};
  NoiseSpec noise = noise::Gaussian{};
  BetaSpec beta = coefficients::RandomSupport{1.0};
  std::uint64_t seed = 0;
};

namespace attack {
/// y_i += sqrt(n) * scale on the outlier set.
struct ResponseShift {
  double scale = 10.0;
};
/// Rows replaced by scale * beta*/||beta*|| with responses matching -beta*.
struct LeveragePoints {
  double scale = 50.0;
};
/// Rows pushed by +-scale along an inactive coordinate, responses consistent
/// with a spurious coefficient of size ||beta*||_inf there.
struct OracleAwareTilt {
  double scale = 5.0;
};
}  // namespace attack
using AttackStrategy = std::variant<attack::ResponseShift, attack::LeveragePoints, attack::OracleAwareTilt>;

struct AttackSpec {
  Index o = 0;
  AttackStrategy strategy = attack::ResponseShift{};
  // Adaptive attacks pick the highest-leverage samples; otherwise the outlier
  // set is a uniformly random subset chosen without looking at the data.
  bool adaptive = false;
};

namespace detail {

inline constexpr std::uint64_t kDesignStream = 1;
inline constexpr std::uint64_t kNoiseStream = 2;
inline constexpr std::uint64_t kBetaStream = 3;
inline constexpr std::uint64_t kAttackStream = 4;

inline Matrix covariance_matrix(const CovarianceSpec& spec, Index d) {
  return std::visit(
      [d](const auto& c) -> Matrix {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, covariance::Identity>) {
          return Matrix::Identity(d, d);
        } else if constexpr (std::is_same_v<T, covariance::Diagonal>) {
          if (static_cast<Index>(c.values.size()) != d) {
            throw std::invalid_argument("covariance: diagonal needs d values");
          }
          Matrix m = Matrix::Zero(d, d);
          for (Index j = 0; j < d; ++j) m(j, j) = c.values[static_cast<std::size_t>(j)];
          return m;
        } else {
          Matrix m(d, d);
          for (Index i = 0; i < d; ++i) {
            for (Index j = 0; j < d; ++j) m(i, j) = std::pow(c.rho, static_cast<double>(std::abs(i - j)));
          }
          return m;
        }
      },
      spec);
}

// Lower factor L with L L^T = Sigma.
inline Matrix covariance_factor(const Matrix& sigma) {
  if (sigma.isDiagonal()) {
    if (sigma.diagonal().minCoeff() < 0.0) throw std::invalid_argument("covariance: not positive semidefinite");
    return sigma.diagonal().cwiseSqrt().asDiagonal();
  }
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("covariance: not positive definite");
  return llt.matrixL();
}

}  // namespace detail

/// Draws a clean sample y = X beta* + xi. Deterministic in `spec.seed`.
inline std::pair<Dataset, GroundTruth> generate_clean(const GeneratorSpec& spec) {
  const Index n = spec.n, d = spec.d, s = spec.s;
  if (n < 1 || d < 1) throw std::invalid_argument("generate_clean: n and d must be positive");
  if (s < 1 || d < 3 * s) throw std::invalid_argument("generate_clean: requires s >= 1 and d/s >= 3");
  if (!(spec.sigma >= 0.0)) throw std::invalid_argument("generate_clean: sigma must be >= 0");
  if (const auto* t = std::get_if<noise::StudentT>(&spec.noise); t && !(t->df > 2.0)) {
    throw std::invalid_argument("generate_clean: student-t noise needs df > 2 for finite variance");
  }

  GroundTruth truth;
  truth.sigma = spec.sigma;
  truth.covariance = detail::covariance_matrix(spec.covariance, d);
  const Matrix factor = detail::covariance_factor(truth.covariance);

  truth.beta_star = Vector::Zero(d);
  if (const auto* fixed = std::get_if<coefficients::Fixed>(&spec.beta)) {
    if (static_cast<Index>(fixed->values.size()) != d) throw std::invalid_argument("generate_clean: beta needs d values");
    for (Index j = 0; j < d; ++j) {
      truth.beta_star[j] = fixed->values[static_cast<std::size_t>(j)];
      if (truth.beta_star[j] != 0.0) truth.support.push_back(j);
    }
    if (static_cast<Index>(truth.support.size()) != s) {
      throw std::invalid_argument("generate_clean: fixed beta has " + std::to_string(truth.support.size()) +
                                  " nonzeros, expected s = " + std::to_string(s));
    }
  } else {
    const double mag = std::get<coefficients::RandomSupport>(spec.beta).magnitude;
    CounterRng rng(spec.seed, detail::kBetaStream);
    std::vector<Index> idx(static_cast<std::size_t>(d));
    std::iota(idx.begin(), idx.end(), Index{0});
    for (Index k = 0; k < s; ++k) {
      const auto pick = static_cast<std::size_t>(k) + rng.below(static_cast<std::uint64_t>(d - k));
      std::swap(idx[static_cast<std::size_t>(k)], idx[pick]);
    }
    truth.support.assign(idx.begin(), idx.begin() + s);
    std::sort(truth.support.begin(), truth.support.end());
    for (Index j : truth.support) truth.beta_star[j] = mag * rng.rademacher();
  }

  Matrix z(n, d);
  CounterRng design_rng(spec.seed, detail::kDesignStream);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) z(i, j) = design_rng.normal();
  }
  Matrix X = z * factor.transpose();

  Vector xi(n);
  CounterRng noise_rng(spec.seed, detail::kNoiseStream);
  std::visit(
      [&](const auto& nz) {
        using T = std::decay_t<decltype(nz)>;
        for (Index i = 0; i < n; ++i) {
          if constexpr (std::is_same_v<T, noise::Gaussian>) {
            xi[i] = spec.sigma * noise_rng.normal();
          } else if constexpr (std::is_same_v<T, noise::StudentT>) {
            // Var t_df = df / (df - 2); rescale to variance sigma^2.
            xi[i] = spec.sigma * std::sqrt((nz.df - 2.0) / nz.df) * noise_rng.student_t(nz.df);
          } else {
            xi[i] = spec.sigma * noise_rng.rademacher();
          }
        }
      },
      spec.noise);

  Vector y = X * truth.beta_star + xi;
  return {Dataset(std::move(X), std::move(y)), std::move(truth)};
}

/// Corrupts `attack.o` samples. Rows outside the chosen set are left untouched.
inline std::pair<Dataset, GroundTruth> contaminate(const Dataset& data, const GroundTruth& truth,
                                                    const AttackSpec& attack, std::uint64_t seed) {
  const Index n = data.n(), d = data.d(), o = attack.o;
  if (o < 0 || 2 * o >= n) throw std::invalid_argument("contaminate: requires 0 <= o < n/2");
  if (truth.beta_star.size() != d) throw std::invalid_argument("contaminate: ground truth dimension mismatch");

  GroundTruth out_truth = truth;
  out_truth.outliers.clear();
  if (o == 0) return {data, std::move(out_truth)};

  CounterRng rng(seed, detail::kAttackStream);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (attack.adaptive) {
    const Vector lev = data.design().rowwise().squaredNorm();
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return lev[a] > lev[b]; });
  } else {
    for (Index k = 0; k < o; ++k) {
      const auto pick = static_cast<std::size_t>(k) + rng.below(static_cast<std::uint64_t>(n - k));
      std::swap(idx[static_cast<std::size_t>(k)], idx[pick]);
    }
  }
  std::vector<Index> chosen(idx.begin(), idx.begin() + o);
  std::sort(chosen.begin(), chosen.end());

  Matrix X = data.design();
  Vector y = data.response();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double beta_norm = truth.beta_star.norm();

  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, attack::ResponseShift>) {
          for (Index i : chosen) y[i] += sqrt_n * a.scale;
        } else if constexpr (std::is_same_v<T, attack::LeveragePoints>) {
          Vector u = Vector::Zero(d);
          if (beta_norm > 0.0) {
            u = truth.beta_star / beta_norm;
          } else {
            u[0] = 1.0;
          }
          for (Index i : chosen) {
            X.row(i) = a.scale * u.transpose();
            y[i] = -a.scale * beta_norm;
          }
        } else {
          Index off = 0;
          while (off < d && truth.beta_star[off] != 0.0) ++off;
          if (off == d) off = 0;
          const double kappa = truth.beta_star.cwiseAbs().maxCoeff();
          for (Index i : chosen) {
            const double sign = rng.rademacher();
            X(i, off) += a.scale * sign;
            y[i] += a.scale * sign * kappa;
          }
        }
      },
      attack.strategy);

  out_truth.outliers = std::move(chosen);
  return {Dataset(std::move(X), std::move(y)), std::move(out_truth)};
}

}  // namespace robreg
