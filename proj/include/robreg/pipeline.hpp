#pragma once

// End-to-end estimation (weights -> truncation -> weighted penalized Huber
// regression) and the experiment sweep runner.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "robreg/baselines.hpp"
#include "robreg/contamination.hpp"
#include "robreg/core.hpp"
#include "robreg/huber_regression.hpp"
#include "robreg/tuning.hpp"
#include "robreg/weight_solver.hpp"

namespace robreg {

struct EstimateOptions {
  WeightSolverOptions weights{};
  ProxGradientOptions fit{};
  // When the weight certificate exceeds tau_cut, fit with uniform weights
  // instead of returning no estimate.
  bool fallback_uniform = false;
};

struct Estimate {
  std::optional<Vector> beta_hat;
  SaddleReport saddle;
  TruncatedWeights truncated;
  std::optional<HuberFitResult> fit;
  TuningParams params;
  double sigma_hat = 0.0;  // practical mode only
  bool used_fallback = false;

  bool ok() const { return beta_hat.has_value(); }
};

/// Runs the three stages with fixed parameters. `covariance` present selects
/// the known-covariance weight objective.
inline Estimate estimate(const Dataset& data, const std::optional<Matrix>& covariance, const TuningParams& params,
                         const EstimateOptions& opts = {}) {
  params.validate();
  Estimate est;
  est.params = params;
  est.saddle = solve_weights(data.design(), covariance, params, opts.weights);
  if (est.saddle.failed) {
    if (!opts.fallback_uniform) return est;
    est.used_fallback = true;
    est.truncated = TruncatedWeights::uniform(data.n());
  } else {
    est.truncated = truncate_weights(est.saddle.weights);
  }
  est.fit = fit_penalized_huber(data, est.truncated, params.lambda_o, params.lambda_s, opts.fit);
  est.beta_hat = est.fit->beta_hat;
  return est;
}

/// Practical mode: weights first (they do not depend on the noise scale),
/// then the noise scale from a pilot fit on the retained samples, then the
/// final fit. `tau_cut_override` replaces the heuristic threshold.
inline Estimate estimate_practical(const Dataset& data, const std::optional<Matrix>& covariance,
                                   const PilotOptions& pilot, const EstimateOptions& opts = {},
                                   std::optional<double> tau_cut_override = std::nullopt) {
  PilotOptions p = pilot;
  p.known_covariance = covariance.has_value();
  // Only the noise-free fields of this first pass are used.
  PilotOptions no_rounds = p;
  no_rounds.rounds = 0;
  PracticalTuning first = practical_params(data, no_rounds, covariance);
  if (tau_cut_override) first.params.tau_cut = *tau_cut_override;

  Estimate est;
  est.saddle = solve_weights(data.design(), covariance, first.params, opts.weights);
  if (est.saddle.failed) {
    if (!opts.fallback_uniform) {
      est.params = first.params;
      return est;
    }
    est.used_fallback = true;
    est.truncated = TruncatedWeights::uniform(data.n());
  } else {
    est.truncated = truncate_weights(est.saddle.weights);
  }
  PracticalTuning tuned = practical_params(data, p, covariance, est.truncated);
  if (tau_cut_override) tuned.params.tau_cut = *tau_cut_override;
  est.params = tuned.params;
  est.sigma_hat = tuned.sigma_hat;
  est.fit = fit_penalized_huber(data, est.truncated, tuned.params.lambda_o, tuned.params.lambda_s, opts.fit);
  est.beta_hat = est.fit->beta_hat;
  return est;
}

enum class EstimatorId { pipeline, lasso, huber };

inline const char* estimator_name(EstimatorId id) {
  switch (id) {
    case EstimatorId::pipeline:
      return "pipeline";
    case EstimatorId::lasso:
      return "lasso";
    case EstimatorId::huber:
      return "huber";
  }
  return "?";
}

inline EstimatorId parse_estimator(const std::string& s) {
  if (s == "pipeline") return EstimatorId::pipeline;
  if (s == "lasso") return EstimatorId::lasso;
  if (s == "huber") return EstimatorId::huber;
  throw std::invalid_argument("unknown estimator '" + s + "'");
}

struct SweepGrid {
  GeneratorSpec generator{};  // n and s replaced per cell
  AttackSpec attack{};        // o and the strategy scale replaced per cell
  std::vector<Index> n_values;
  std::vector<Index> o_values{0};
  std::vector<Index> s_values;           // empty: generator.s
  std::vector<double> attack_scales;     // empty: the strategy's own scale
  int repetitions = 1;
  std::vector<EstimatorId> estimators;
  TuningMode mode = TuningMode::practical;
  bool known_covariance = true;
  double delta = 0.1;
  PilotOptions pilot{};  // outlier budget and sparsity guess set per cell
  TheoryInputs theory{};  // L, sigma_max, re_constant and constants; the rest set per cell
  std::optional<double> tau_cut_override;
  EstimateOptions estimate{};
  unsigned threads = 0;  // 0: hardware concurrency
};

struct SweepRecord {
  Index n = 0, d = 0, s = 0, o = 0;
  double delta = 0.0;
  double attack_scale = 0.0;
  int rep = 0;
  std::uint64_t seed = 0;
  EstimatorId estimator = EstimatorId::pipeline;
  double l2_error = 0.0;  // +inf when no estimate was produced
  double l1_error = 0.0;
  double certificate = 0.0;
  bool failed = false;
  Index retained = 0;
  double wall_seconds = 0.0;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRecord> records;
};

namespace detail {

inline double strategy_scale(const AttackStrategy& st) {
  return std::visit([](const auto& a) { return a.scale; }, st);
}

inline void set_strategy_scale(AttackStrategy& st, double scale) {
  std::visit([scale](auto& a) { a.scale = scale; }, st);
}

struct SweepCell {
  Index n, s, o;
  double scale;
};

}  // namespace detail

/// Seed used for repetition `rep`; shared by every cell so that cells differ
/// only in their grid coordinates.
inline std::uint64_t sweep_seed(std::uint64_t base, int rep) {
  return combine_seed(base, static_cast<std::uint64_t>(rep));
}

/// Runs every estimator on every (cell, repetition). Cells run in parallel;
/// records come back in grid order regardless of scheduling. A cell that
/// throws is recorded with its message and the sweep continues.
inline SweepResult run_sweep(const SweepGrid& grid) {
  if (grid.estimators.empty()) throw std::invalid_argument("run_sweep: empty estimator list");
  if (grid.n_values.empty()) throw std::invalid_argument("run_sweep: empty n grid");
  if (grid.repetitions < 1) throw std::invalid_argument("run_sweep: repetitions must be >= 1");

  const std::vector<Index> s_values = grid.s_values.empty() ? std::vector<Index>{grid.generator.s} : grid.s_values;
  const std::vector<Index> o_values = grid.o_values.empty() ? std::vector<Index>{0} : grid.o_values;
  const std::vector<double> scales = grid.attack_scales.empty()
                                         ? std::vector<double>{detail::strategy_scale(grid.attack.strategy)}
                                         : grid.attack_scales;
  std::vector<detail::SweepCell> cells;
  for (Index n : grid.n_values) {
    for (Index s : s_values) {
      for (Index o : o_values) {
        for (double sc : scales) cells.push_back({n, s, o, sc});
      }
    }
  }

  const std::size_t n_est = grid.estimators.size();
  const std::size_t n_tasks = cells.size() * static_cast<std::size_t>(grid.repetitions);
  std::vector<SweepRecord> records(n_tasks * n_est);

  auto run_task = [&](std::size_t task) {
    const auto& cell = cells[task / static_cast<std::size_t>(grid.repetitions)];
    const int rep = static_cast<int>(task % static_cast<std::size_t>(grid.repetitions));
    const std::uint64_t seed = sweep_seed(grid.generator.seed, rep);

    for (std::size_t e = 0; e < n_est; ++e) {
      auto& rec = records[task * n_est + e];
      rec.n = cell.n;
      rec.d = grid.generator.d;
      rec.s = cell.s;
      rec.o = cell.o;
      rec.delta = grid.delta;
      rec.attack_scale = cell.scale;
      rec.rep = rep;
      rec.seed = seed;
      rec.estimator = grid.estimators[e];
    }

    try {
      GeneratorSpec gen = grid.generator;
      gen.n = cell.n;
      gen.s = cell.s;
      gen.seed = seed;
      auto [clean, truth0] = generate_clean(gen);
      AttackSpec atk = grid.attack;
      atk.o = cell.o;
      detail::set_strategy_scale(atk.strategy, cell.scale);
      auto [data, truth] = contaminate(clean, truth0, atk, seed);
      const std::optional<Matrix> cov = grid.known_covariance ? std::optional<Matrix>(truth.covariance) : std::nullopt;

      PilotOptions pilot = grid.pilot;
      pilot.outlier_budget = cell.o;
      pilot.sparsity_guess = cell.s;
      pilot.delta = grid.delta;
      pilot.known_covariance = grid.known_covariance;

      // Baseline tuning from a pilot on all samples.
      std::optional<PracticalTuning> baseline_tuning;
      auto baseline = [&]() -> const PracticalTuning& {
        if (!baseline_tuning) baseline_tuning = practical_params(data, pilot, cov);
        return *baseline_tuning;
      };
      std::optional<TheoryTuning> theory;
      if (grid.mode != TuningMode::practical) {
        TheoryInputs in = grid.theory;
        in.n = cell.n;
        in.d = grid.generator.d;
        in.s = cell.s;
        in.o = cell.o;
        in.delta = grid.delta;
        in.sigma = grid.generator.sigma;
        theory = grid.mode == TuningMode::theory_known_sigma ? theory_params_known(in) : theory_params_unknown(in);
        if (grid.tau_cut_override) theory->params.tau_cut = *grid.tau_cut_override;
      }

      for (std::size_t e = 0; e < n_est; ++e) {
        auto& rec = records[task * n_est + e];
        const auto t0 = std::chrono::steady_clock::now();
        std::optional<Vector> beta;
        try {
          switch (rec.estimator) {
            case EstimatorId::pipeline: {
              const Estimate est = theory ? estimate(data, cov, theory->params, grid.estimate)
                                          : estimate_practical(data, cov, pilot, grid.estimate, grid.tau_cut_override);
              rec.certificate = est.saddle.certificate_value;
              rec.failed = est.saddle.failed;
              rec.retained = static_cast<Index>(est.truncated.retained.size());
              beta = est.beta_hat;
              break;
            }
            case EstimatorId::lasso: {
              const double lam = 2.0 * baseline().sigma_hat *
                                 std::sqrt(std::log(static_cast<double>(data.d())) / static_cast<double>(data.n()));
              beta = fit_lasso(data, lam, grid.estimate.fit).beta_hat;
              rec.retained = data.n();
              break;
            }
            case EstimatorId::huber: {
              const TuningParams& p = theory ? theory->params : baseline().params;
              beta = fit_huber_unweighted(data, p.lambda_o, p.lambda_s, grid.estimate.fit).beta_hat;
              rec.retained = data.n();
              break;
            }
          }
        } catch (const std::exception& ex) {
          rec.error = ex.what();
          rec.failed = true;
        }
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (beta) {
          rec.l2_error = (*beta - truth.beta_star).norm();
          rec.l1_error = (*beta - truth.beta_star).lpNorm<1>();
        } else {
          rec.l2_error = std::numeric_limits<double>::infinity();
          rec.l1_error = std::numeric_limits<double>::infinity();
        }
      }
    } catch (const std::exception& ex) {
      for (std::size_t e = 0; e < n_est; ++e) {
        auto& rec = records[task * n_est + e];
        rec.error = ex.what();
        rec.failed = true;
        rec.l2_error = std::numeric_limits<double>::infinity();
        rec.l1_error = std::numeric_limits<double>::infinity();
      }
    }
  };

  unsigned threads = grid.threads ? grid.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_tasks));
  if (threads <= 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < n_tasks; t = next++) run_task(t);
      });
    }
    for (auto& th : pool) th.join();
  }
  return SweepResult{std::move(records)};
}

}  // namespace robreg
