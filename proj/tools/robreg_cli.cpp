// robreg: generate synthetic instances, fit the robust estimator or a
// baseline, and run experiment sweeps.
//
// Exit codes: 0 success, 1 usage or input errors, 2 the weight certificate
// exceeded tau_cut and no estimate was produced.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "robreg/robreg.hpp"

namespace {

using namespace robreg;

constexpr int kExitFailPath = 2;

struct InstanceFlags {
  Index n = 200;
  Index d = 30;
  Index s = 3;
  Index o = 0;
  double sigma = 1.0;
  std::string noise = "gaussian";
  double df = 3.0;
  std::string covariance = "identity";
  double rho = 0.5;
  double beta_magnitude = 1.0;
  std::string attack = "response-shift";
  std::optional<double> attack_scale;
  bool adaptive = false;
  std::uint64_t seed = 42;
};

struct FitFlags {
  std::string mode = "practical";
  std::optional<double> tau_cut_override;
  std::string fallback = "off";
  double delta = 0.1;
  std::optional<Index> outlier_budget;
  std::string known_covariance = "on";
  int max_weight_iterations = 2000;
};

void add_instance_flags(CLI::App* app, InstanceFlags& f, std::vector<CLI::Option*>* generator_opts) {
  auto track = [&](CLI::Option* o) {
    if (generator_opts) generator_opts->push_back(o);
    return o;
  };
  track(app->add_option("--n", f.n, "sample size")->check(CLI::PositiveNumber));
  track(app->add_option("--d", f.d, "dimension")->check(CLI::PositiveNumber));
  app->add_option("--s", f.s, "sparsity")->check(CLI::PositiveNumber);
  app->add_option("--o", f.o, "number of outliers")->check(CLI::NonNegativeNumber);
  app->add_option("--sigma", f.sigma, "noise scale")->check(CLI::NonNegativeNumber);
  track(app->add_option("--noise", f.noise, "gaussian | student-t | rademacher")
            ->check(CLI::IsMember({"gaussian", "student-t", "rademacher"})));
  track(app->add_option("--df", f.df, "student-t degrees of freedom"));
  app->add_option("--covariance", f.covariance, "identity | toeplitz")
      ->check(CLI::IsMember({"identity", "toeplitz"}));
  app->add_option("--rho", f.rho, "toeplitz correlation");
  track(app->add_option("--beta-magnitude", f.beta_magnitude, "magnitude of the nonzero coefficients"));
  track(app->add_option("--attack", f.attack, "response-shift | leverage | tilt")
            ->check(CLI::IsMember({"response-shift", "leverage", "tilt"})));
  track(app->add_option("--attack-scale", f.attack_scale, "attack strength"));
  track(app->add_flag("--adaptive", f.adaptive, "corrupt the highest-leverage samples"));
  track(app->add_option("--seed", f.seed, "random seed"));
}

void add_fit_flags(CLI::App* app, FitFlags& f) {
  app->add_option("--mode", f.mode, "theory-known | theory-unknown | practical")
      ->check(CLI::IsMember({"theory-known", "theory-unknown", "practical"}));
  app->add_option("--tau-cut-override", f.tau_cut_override, "replace the certificate threshold");
  app->add_option("--fallback-uniform", f.fallback, "fit with uniform weights when the certificate fails")
      ->check(CLI::IsMember({"on", "off"}));
  app->add_option("--delta", f.delta, "confidence parameter in (0, 0.5]");
  app->add_option("--outlier-budget", f.outlier_budget, "guess of o for practical mode (default --o)");
  app->add_option("--known-covariance", f.known_covariance, "practical mode: use the covariance (on|off)")
      ->check(CLI::IsMember({"on", "off"}));
  app->add_option("--max-weight-iterations", f.max_weight_iterations, "weight solver iteration budget")
      ->check(CLI::PositiveNumber);
}

GeneratorSpec generator_spec(const InstanceFlags& f) {
  GeneratorSpec g;
  g.n = f.n;
  g.d = f.d;
  g.s = f.s;
  g.sigma = f.sigma;
  g.seed = f.seed;
  if (f.covariance == "toeplitz") g.covariance = covariance::Toeplitz{f.rho};
  if (f.noise == "student-t") g.noise = noise::StudentT{f.df};
  if (f.noise == "rademacher") g.noise = noise::ScaledRademacher{};
  g.beta = coefficients::RandomSupport{f.beta_magnitude};
  return g;
}

AttackSpec attack_spec(const InstanceFlags& f) {
  AttackSpec a;
  a.o = f.o;
  a.adaptive = f.adaptive;
  if (f.attack == "leverage") {
    a.strategy = attack::LeveragePoints{f.attack_scale.value_or(attack::LeveragePoints{}.scale)};
  } else if (f.attack == "tilt") {
    a.strategy = attack::OracleAwareTilt{f.attack_scale.value_or(attack::OracleAwareTilt{}.scale)};
  } else {
    a.strategy = attack::ResponseShift{f.attack_scale.value_or(attack::ResponseShift{}.scale)};
  }
  return a;
}

Matrix assumed_covariance(const InstanceFlags& f, Index d) {
  if (f.covariance == "toeplitz") return detail::covariance_matrix(covariance::Toeplitz{f.rho}, d);
  return Matrix::Identity(d, d);
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
  return file;
}

struct Instance {
  Dataset data;
  std::optional<GroundTruth> truth;
};

Instance load_or_generate(const std::string& input, const InstanceFlags& f) {
  if (!input.empty()) return {read_dataset_file(input), std::nullopt};
  auto [clean, truth0] = generate_clean(generator_spec(f));
  auto [data, truth] = contaminate(clean, truth0, attack_spec(f), f.seed);
  return {std::move(data), std::move(truth)};
}

int run_generate(const InstanceFlags& f, const std::string& out) {
  if (out.empty()) throw std::runtime_error("generate: --out is required");
  const Instance inst = load_or_generate("", f);
  write_dataset_file(out, inst.data);
  std::ofstream t(out + ".truth", std::ios::binary);
  if (!t) throw std::runtime_error("cannot open '" + out + ".truth' for writing");
  t << truth_record(*inst.truth) << '\n';
  return 0;
}

int run_estimate(const InstanceFlags& f, const FitFlags& ff, const std::string& input, const std::string& out) {
  const Instance inst = load_or_generate(input, f);
  const Dataset& data = inst.data;
  const Matrix cov = inst.truth ? inst.truth->covariance : assumed_covariance(f, data.d());

  EstimateOptions opts;
  opts.fallback_uniform = ff.fallback == "on";
  opts.weights.max_iterations = ff.max_weight_iterations;

  Estimate est;
  if (ff.mode == "practical") {
    PilotOptions pilot;
    pilot.outlier_budget = ff.outlier_budget.value_or(f.o);
    pilot.sparsity_guess = f.s;
    pilot.delta = ff.delta;
    const bool known = ff.known_covariance == "on";
    est = estimate_practical(data, known ? std::optional<Matrix>(cov) : std::nullopt, pilot, opts,
                             ff.tau_cut_override);
  } else {
    TheoryInputs in;
    in.n = data.n();
    in.d = data.d();
    in.s = f.s;
    in.o = f.o;
    in.delta = ff.delta;
    in.sigma = f.sigma;
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
    in.sigma_max = std::sqrt(es.eigenvalues().maxCoeff());
    const bool known = ff.mode == "theory-known";
    TheoryTuning t = known ? theory_params_known(in) : theory_params_unknown(in);
    if (!t.validity.all()) std::cerr << "warning: theory side conditions do not hold for these inputs\n";
    if (ff.tau_cut_override) t.params.tau_cut = *ff.tau_cut_override;
    est = estimate(data, known ? std::optional<Matrix>(cov) : std::nullopt, t.params, opts);
  }

  Record rec = estimate_record(est);
  if (inst.truth && est.beta_hat) {
    rec.add("l2_error", (*est.beta_hat - inst.truth->beta_star).norm());
    rec.add("l1_error", (*est.beta_hat - inst.truth->beta_star).lpNorm<1>());
  }
  std::ofstream file;
  open_out(out, file) << rec << '\n';
  if (!est.ok()) {
    std::cerr << "weight certificate " << format_double(est.saddle.certificate_value) << " exceeds tau_cut "
              << format_double(est.params.tau_cut) << "; no estimate\n";
    return kExitFailPath;
  }
  return 0;
}

int run_baseline(const InstanceFlags& f, const FitFlags& ff, const std::string& input, const std::string& out,
                 const std::vector<std::string>& which) {
  const Instance inst = load_or_generate(input, f);
  const Dataset& data = inst.data;
  PilotOptions pilot;
  pilot.outlier_budget = ff.outlier_budget.value_or(f.o);
  pilot.sparsity_guess = f.s;
  pilot.delta = ff.delta;
  const PracticalTuning tuned = practical_params(data, pilot);
  const double nn = static_cast<double>(data.n());
  std::ofstream file;
  std::ostream& os = open_out(out, file);
  for (const auto& name : which) {
    FitResult fit = name == "lasso"
                        ? fit_lasso(data, 2.0 * tuned.sigma_hat * std::sqrt(std::log(static_cast<double>(data.d())) / nn))
                        : fit_huber_unweighted(data, tuned.params.lambda_o, tuned.params.lambda_s);
    Record rec;
    rec.add("estimator", name)
        .add("sigma_hat", tuned.sigma_hat)
        .add("iterations", fit.iterations)
        .add("kkt_residual", fit.kkt_residual)
        .add("converged", fit.converged)
        .add("beta_hat", fit.beta_hat);
    if (inst.truth) {
      rec.add("l2_error", (fit.beta_hat - inst.truth->beta_star).norm());
      rec.add("l1_error", (fit.beta_hat - inst.truth->beta_star).lpNorm<1>());
    }
    os << rec << '\n';
  }
  return 0;
}

struct SweepFlags {
  std::vector<Index> n_values{200, 400};
  std::vector<Index> o_values{0};
  std::vector<Index> s_values;
  std::vector<double> scales;
  int reps = 3;
  std::vector<std::string> estimators{"pipeline", "lasso"};
  unsigned threads = 0;
  bool timing = false;
};

int run_sweep_cmd(const InstanceFlags& f, const FitFlags& ff, const SweepFlags& sf, const std::string& out) {
  SweepGrid grid;
  grid.generator = generator_spec(f);
  grid.attack = attack_spec(f);
  grid.n_values = sf.n_values;
  grid.o_values = sf.o_values;
  grid.s_values = sf.s_values;
  grid.attack_scales = sf.scales;
  grid.repetitions = sf.reps;
  for (const auto& e : sf.estimators) grid.estimators.push_back(parse_estimator(e));
  grid.mode = ff.mode == "practical"      ? TuningMode::practical
              : ff.mode == "theory-known" ? TuningMode::theory_known_sigma
                                          : TuningMode::theory_unknown_sigma;
  grid.known_covariance = ff.mode == "practical" ? ff.known_covariance == "on" : ff.mode == "theory-known";
  grid.delta = ff.delta;
  grid.tau_cut_override = ff.tau_cut_override;
  grid.estimate.fallback_uniform = ff.fallback == "on";
  grid.estimate.weights.max_iterations = ff.max_weight_iterations;
  grid.threads = sf.threads;
  const SweepResult res = run_sweep(grid);
  std::ofstream file;
  write_results(open_out(out, file), res, sf.timing);
  return 0;
}

// Keys without a section header belong to the subcommand being run.
class SubcommandConfig : public CLI::ConfigTOML {
 public:
  explicit SubcommandConfig(const CLI::App* app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigTOML::from_config(input);
    const auto subs = app_->get_subcommands();
    if (subs.empty()) return items;
    for (auto& item : items) {
      if (item.parents.empty() && item.name != "++" && item.name != "--") item.parents.push_back(subs.front()->get_name());
    }
    return items;
  }

 private:
  const CLI::App* app_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Outlier-robust sparse linear regression"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read flags from a TOML/INI file; command-line flags take precedence");
  app.config_formatter(std::make_shared<SubcommandConfig>(&app));
  app.allow_config_extras(CLI::config_extras_mode::error);

  InstanceFlags inst;
  FitFlags fit;
  SweepFlags sweep;
  std::string input, out;
  std::vector<std::string> which{"lasso"};

  auto* gen = app.add_subcommand("generate", "write a synthetic dataset and its .truth file");
  add_instance_flags(gen, inst, nullptr);
  gen->add_option("--out", out, "dataset path")->required();

  auto* est = app.add_subcommand("estimate", "run the robust estimator");
  std::vector<CLI::Option*> est_gen_opts;
  add_instance_flags(est, inst, &est_gen_opts);
  add_fit_flags(est, fit);
  auto* est_in = est->add_option("--input", input, "dataset file (instead of generating one)")->check(CLI::ExistingFile);
  for (auto* o : est_gen_opts) est_in->excludes(o);
  est->add_option("--out", out, "estimate record path (default stdout)");

  auto* base = app.add_subcommand("baseline", "fit the Lasso or unweighted Huber baseline");
  std::vector<CLI::Option*> base_gen_opts;
  add_instance_flags(base, inst, &base_gen_opts);
  add_fit_flags(base, fit);
  auto* base_in = base->add_option("--input", input, "dataset file")->check(CLI::ExistingFile);
  for (auto* o : base_gen_opts) base_in->excludes(o);
  base->add_option("--estimators,--estimator", which, "lasso,huber")
      ->delimiter(',')
      ->check(CLI::IsMember({"lasso", "huber"}));
  base->add_option("--out", out, "record path (default stdout)");

  auto* sw = app.add_subcommand("sweep", "run an experiment grid");
  add_instance_flags(sw, inst, nullptr);
  add_fit_flags(sw, fit);
  sw->get_option("--n")->description("unused; see --n-values");
  sw->add_option("--n-values", sweep.n_values, "sample sizes")->delimiter(',');
  sw->add_option("--o-values", sweep.o_values, "outlier counts")->delimiter(',');
  sw->add_option("--s-values", sweep.s_values, "sparsity levels")->delimiter(',');
  sw->add_option("--attack-scales", sweep.scales, "attack strengths")->delimiter(',');
  sw->add_option("--reps", sweep.reps, "repetitions per cell")->check(CLI::PositiveNumber);
  sw->add_option("--estimators", sweep.estimators, "pipeline,lasso,huber")->delimiter(',');
  sw->add_option("--threads", sweep.threads, "worker threads (0: all cores)");
  sw->add_flag("--timing", sweep.timing, "include wall time in the records");
  sw->add_option("--out", out, "results path (default stdout)");

  for (auto* sub : {gen, est, base, sw}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_generate(inst, out);
    if (est->parsed()) return run_estimate(inst, fit, input, out);
    if (base->parsed()) return run_baseline(inst, fit, input, out, which);
    if (sw->parsed()) return run_sweep_cmd(inst, fit, sweep, out);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 1;
}
