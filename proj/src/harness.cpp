#include "lrtcone/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>

#include "json.hpp"

#include "lrtcone/cones.hpp"
#include "lrtcone/error.hpp"
#include "lrtcone/linalg.hpp"
#include "lrtcone/parallel.hpp"
#include "lrtcone/rng.hpp"

namespace lrtcone {

namespace {

bool is_efa(Scenario s) { return s == Scenario::Efa1a || s == Scenario::Efa1b; }
bool is_ifa(Scenario s) { return s == Scenario::Ifa2a || s == Scenario::Ifa2b; }

Family null_family(Scenario s) {
  if (is_efa(s)) {
    return Family::EfaOneFactor;
  }
  return is_ifa(s) ? Family::IfaOneFactor : Family::RandomIntercept;
}

Eigen::MatrixXd re_covariance(const RandomEffectsParams &re, int n_items) {
  return re.var_within * Eigen::MatrixXd::Identity(n_items, n_items) +
         re.var_between * Eigen::MatrixXd::Ones(n_items, n_items);
}

SaturatedMultinomialParams ifa_cells(const IfaParams &ifa) {
  const Eigen::VectorXd all = ifa_pattern_probs(ifa, default_rule(ifa.n_factors()));
  return {all.tail(all.size() - 1), ifa.n_items()};
}

template <typename T>
const T &truth_as(const ModelParams &truth, const char *what) {
  const auto *p = std::get_if<T>(&truth);
  if (p == nullptr) {
    throw LrtError(ErrorCode::InvalidArgument,
                   std::string("truth does not match scenario: ") + what);
  }
  return *p;
}

double rejection_rate(const std::vector<double> &values, double alpha,
                      const CdfFunction &reference) {
  if (values.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  std::size_t rejected = 0;
  for (const double v : values) {
    if (1.0 - reference(v) < alpha) {
      ++rejected;
    }
  }
  return static_cast<double>(rejected) / static_cast<double>(values.size());
}

} // namespace

std::string to_string(Scenario scenario) {
  switch (scenario) {
  case Scenario::Efa1a:
    return "efa_1a";
  case Scenario::Efa1b:
    return "efa_1b";
  case Scenario::Ifa2a:
    return "ifa_2a";
  case Scenario::Ifa2b:
    return "ifa_2b";
  case Scenario::Re3:
    return "re_3";
  }
  return "unknown";
}

std::optional<Scenario> parse_scenario(const std::string &name) {
  for (const Scenario s : all_scenarios()) {
    if (to_string(s) == name) {
      return s;
    }
  }
  return std::nullopt;
}

const std::vector<Scenario> &all_scenarios() {
  static const std::vector<Scenario> list = {Scenario::Efa1a, Scenario::Efa1b,
                                             Scenario::Ifa2a, Scenario::Ifa2b,
                                             Scenario::Re3};
  return list;
}

EfaParams builtin_efa_truth() {
  EfaParams p;
  p.loadings_1.resize(6);
  p.loadings_1 << 1.17, 1.87, 1.42, 1.71, 1.23, 1.78;
  p.uniquenesses.resize(6);
  p.uniquenesses << 1.38, 0.85, 1.46, 0.78, 1.24, 0.60;
  return p;
}

IfaParams builtin_ifa_truth() {
  IfaParams p;
  p.easiness.resize(6);
  p.easiness << -0.23, -0.12, 0.07, 0.31, -0.29, 0.19;
  p.discrimination_1.resize(6);
  p.discrimination_1 << 0.83, 1.22, 0.96, 0.91, 1.02, 1.25;
  return p;
}

RandomEffectsParams builtin_re_truth() { return {0.0, 0.0, 1.0}; }

ModelParams builtin_truth(Scenario scenario) {
  if (is_efa(scenario)) {
    return builtin_efa_truth();
  }
  if (is_ifa(scenario)) {
    return builtin_ifa_truth();
  }
  return builtin_re_truth();
}

int builtin_items(Scenario scenario) {
  return scenario == Scenario::Re3 ? 20 : 6;
}

std::map<std::string, ParamVector> builtin_truths() {
  std::map<std::string, ParamVector> out;
  for (const Scenario s : all_scenarios()) {
    out[to_string(s)] = std::visit(
        [](const auto &p) { return to_param_vector(p); }, builtin_truth(s));
  }
  return out;
}

double wilks_df(Scenario scenario, int n_items) {
  const int j = n_items;
  switch (scenario) {
  case Scenario::Efa1a:
  case Scenario::Ifa2a:
    // a2[2..J]
    return j - 1;
  case Scenario::Efa1b:
    return j * (j + 1) / 2 - 2 * j;
  case Scenario::Ifa2b:
    return static_cast<double>((1 << j) - 1 - 2 * j);
  case Scenario::Re3:
    return 1;
  }
  return 0;
}

void ExperimentSpec::validate() const {
  auto fail = [](const std::string &what) {
    throw LrtError(ErrorCode::ConfigError, what);
  };
  if (n_items < 1) {
    fail("n_items must be positive");
  }
  if (n_obs < 2) {
    fail("n_obs must be at least 2");
  }
  if (n_reps < 1) {
    fail("n_reps must be positive");
  }
  if (refs.bootstrap_b < 0) {
    fail("bootstrap B must be nonnegative");
  }
  if (refs.cone && n_draws < 1) {
    fail("n_draws must be positive");
  }
  if (optim.n_starts < 1) {
    fail("n_starts must be positive");
  }
  if (is_efa(scenario)) {
    const auto &p = truth_as<EfaParams>(truth, "EFA");
    p.validate();
    if (p.n_items() != n_items || p.n_factors() != 1) {
      fail("EFA truth must be a one-factor model with n_items items");
    }
  } else if (is_ifa(scenario)) {
    const auto &p = truth_as<IfaParams>(truth, "IFA");
    p.validate();
    if (p.n_items() != n_items || p.n_factors() != 1) {
      fail("IFA truth must be a one-factor model with n_items items");
    }
    if (n_items > 12) {
      fail("IFA scenarios are limited to 12 items");
    }
  } else {
    const auto &p = truth_as<RandomEffectsParams>(truth, "random effects");
    p.validate();
    if (p.var_between != 0.0) {
      fail("random effects truth must have zero between-group variance");
    }
  }
}

ExperimentSpec default_spec(Scenario scenario, bool full_scale) {
  ExperimentSpec spec;
  spec.scenario = scenario;
  spec.truth = builtin_truth(scenario);
  spec.n_items = builtin_items(scenario);
  if (scenario == Scenario::Re3) {
    spec.n_obs = 200;
  } else {
    spec.n_obs = full_scale ? 5000 : 2000;
  }
  spec.n_reps = full_scale ? 5000 : 500;
  spec.workers = default_workers();
  return spec;
}

std::vector<double> ExperimentReport::valid_lrt_values() const {
  std::vector<double> out;
  out.reserve(lrt_values.size());
  for (const double v : lrt_values) {
    if (!std::isnan(v)) {
      out.push_back(v);
    }
  }
  return out;
}

LrtComputation compute_lrt(Scenario scenario, const Dataset &data,
                           const OptimConfig &optim, std::uint64_t seed) {
  OptimConfig null_config = optim;
  null_config.seed = child_seed(seed, "fit-null", 0);
  OptimConfig alt_config = optim;
  alt_config.seed = child_seed(seed, "fit-alt", 0);

  LrtComputation out;
  switch (scenario) {
  case Scenario::Efa1a:
    out.fit_null = fit_factor_model(data, 1, null_config);
    out.fit_alt = fit_factor_model(data, 2, alt_config, &out.fit_null);
    break;
  case Scenario::Efa1b:
    out.fit_null = fit_factor_model(data, 1, null_config);
    out.fit_alt = fit_saturated_gaussian(data);
    break;
  case Scenario::Ifa2a: {
    const PatternCounts counts = pattern_counts(data);
    out.fit_null = fit_ifa(counts, 1, null_config);
    out.fit_alt = fit_ifa(counts, 2, alt_config, &out.fit_null);
    break;
  }
  case Scenario::Ifa2b: {
    const PatternCounts counts = pattern_counts(data);
    out.fit_null = fit_ifa(counts, 1, null_config);
    out.fit_alt = fit_saturated_multinomial(counts);
    break;
  }
  case Scenario::Re3:
    out.fit_null = fit_random_effects(data, true);
    out.fit_alt = fit_random_effects(data, false);
    break;
  }
  out.lrt = lrt_statistic(out.fit_alt, out.fit_null);
  return out;
}

ModelParams null_params_from_fit(Scenario scenario, const FitResult &fit_null) {
  if (fit_null.family != null_family(scenario)) {
    throw LrtError(ErrorCode::InvalidArgument,
                   "fit is not the null model of " + to_string(scenario));
  }
  if (is_efa(scenario)) {
    return efa_params(fit_null);
  }
  if (is_ifa(scenario)) {
    return ifa_params(fit_null);
  }
  return re_params(fit_null);
}

LrtComputation observed_fit(const ExperimentSpec &spec) {
  const std::uint64_t seed = child_seed(spec.master_seed, "observed", 0);
  const Dataset observed =
      simulate({null_family(spec.scenario), spec.n_items}, spec.truth,
               spec.n_obs, child_seed(seed, "data", 0));
  return compute_lrt(spec.scenario, observed, spec.optim, seed);
}

ReplicationOutcome run_replication(const ExperimentSpec &spec, std::size_t r) {
  ReplicationOutcome out;
  out.seed = child_seed(spec.master_seed, "rep", r);
  try {
    const Dataset data =
        simulate({null_family(spec.scenario), spec.n_items}, spec.truth,
                 spec.n_obs, child_seed(out.seed, "data", 0));
    const LrtComputation lrt = compute_lrt(spec.scenario, data, spec.optim,
                                           out.seed);
    out.lrt = lrt.lrt.value;
    out.floored = lrt.lrt.floored;
    out.null_converged = lrt.fit_null.converged;
    out.alt_converged = lrt.fit_alt.converged;
  } catch (const LrtError &e) {
    out.failed = true;
    out.lrt = std::numeric_limits<double>::quiet_NaN();
    out.error = std::string(to_string(e.code())) + ": " + e.what();
  }
  return out;
}

InfoMatrix saturated_info(Scenario scenario, const ModelParams &truth,
                          int n_items) {
  if (is_efa(scenario)) {
    const auto &p = truth_as<EfaParams>(truth, "EFA");
    return info_saturated_gaussian({half_vec(efa_covariance(p))});
  }
  if (is_ifa(scenario)) {
    return info_saturated_multinomial(
        ifa_cells(truth_as<IfaParams>(truth, "IFA")));
  }
  const auto &re = truth_as<RandomEffectsParams>(truth, "random effects");
  return info_re_saturated({half_vec(re_covariance(re, n_items))});
}

EmpiricalCDF cone_reference(Scenario scenario, const ModelParams &truth,
                            int n_items, const SamplerConfig &config) {
  const InfoMatrix info = saturated_info(scenario, truth, n_items);
  if (is_efa(scenario)) {
    const auto &p = truth_as<EfaParams>(truth, "EFA");
    const TangentCone null = cone_efa_null(p.loadings_1);
    if (scenario == Scenario::Efa1b) {
      return sample_theorem1(null, info, config);
    }
    return sample_theorem2(null, cone_efa_alt(p.loadings_1), info, config);
  }
  if (is_ifa(scenario)) {
    const auto &p = truth_as<IfaParams>(truth, "IFA");
    const QuadratureRule &quad = default_rule(1);
    const TangentCone null =
        cone_ifa_null(p.easiness, p.discrimination_1, quad);
    if (scenario == Scenario::Ifa2b) {
      return sample_theorem1(null, info, config);
    }
    return sample_theorem2(
        null, cone_ifa_alt(p.easiness, p.discrimination_1, quad), info,
        config);
  }
  return sample_theorem2(cone_re_null(n_items), cone_re_alt(n_items), info,
                         config);
}

EmpiricalCDF run_bootstrap_reference(const BootstrapSpec &spec) {
  if (spec.b < 1) {
    throw LrtError(ErrorCode::InvalidArgument,
                   "bootstrap needs at least one resample");
  }
  const auto b = static_cast<std::size_t>(spec.b);
  std::vector<double> values(b);
  std::vector<char> failed(b, 0);
  parallel_for(b, spec.workers, [&](std::size_t i) {
    const std::uint64_t seed = child_seed(spec.seed, "boot", i);
    try {
      const Dataset data =
          simulate({null_family(spec.scenario), spec.n_items},
                   spec.fitted_null, spec.n_obs, child_seed(seed, "data", 0));
      values[i] = compute_lrt(spec.scenario, data, spec.optim, seed).lrt.value;
    } catch (const LrtError &) {
      failed[i] = 1;
    }
  });
  std::vector<double> kept;
  kept.reserve(b);
  for (std::size_t i = 0; i < b; ++i) {
    if (!failed[i]) {
      kept.push_back(values[i]);
    }
  }
  if (static_cast<double>(b - kept.size()) >
      kMaxFailureFraction * static_cast<double>(b)) {
    throw LrtError(ErrorCode::ExperimentFailed,
                   "more than 10% of bootstrap resamples failed");
  }
  return EmpiricalCDF(std::move(kept));
}

double typeI_error(const ExperimentReport &report, double alpha,
                   const CdfFunction &reference) {
  return rejection_rate(report.valid_lrt_values(), alpha, reference);
}

namespace {

// Information of the alternative model at the truth: the two-factor model for
// efa_1a and ifa_2a, where it is singular, and the saturated model otherwise.
InfoMatrix diagnostic_info(const ExperimentSpec &spec) {
  if (spec.scenario == Scenario::Efa1a) {
    EfaParams p = truth_as<EfaParams>(spec.truth, "EFA");
    p.loadings_2 = Eigen::VectorXd::Zero(p.n_items());
    return info_submodel_numeric(p);
  }
  if (spec.scenario == Scenario::Ifa2a) {
    IfaParams p = truth_as<IfaParams>(spec.truth, "IFA");
    p.discrimination_2 = Eigen::VectorXd::Zero(p.n_items());
    return info_submodel_numeric(p);
  }
  return saturated_info(spec.scenario, spec.truth, spec.n_items);
}

} // namespace

ExperimentReport run_experiment(const ExperimentSpec &spec) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();

  ExperimentReport report;
  report.scenario = spec.scenario;
  report.replications.resize(spec.n_reps);
  parallel_for(spec.n_reps, spec.workers, [&](std::size_t r) {
    report.replications[r] = run_replication(spec, r);
  });

  report.lrt_values.reserve(spec.n_reps);
  for (const auto &rep : report.replications) {
    report.lrt_values.push_back(rep.lrt);
    report.n_failed += rep.failed ? 1 : 0;
    report.n_floored += rep.floored ? 1 : 0;
  }
  const std::vector<double> valid = report.valid_lrt_values();
  const double n_valid = static_cast<double>(valid.size());
  if (!valid.empty()) {
    std::size_t at_zero = 0;
    for (const double v : valid) {
      at_zero += v <= 1e-8 ? 1 : 0;
    }
    report.fraction_at_zero = static_cast<double>(at_zero) / n_valid;
    report.fraction_floored = static_cast<double>(report.n_floored) / n_valid;
  }

  if (static_cast<double>(report.n_failed) >
      kMaxFailureFraction * static_cast<double>(spec.n_reps)) {
    report.ok = false;
    report.message = std::to_string(report.n_failed) + " of " +
                     std::to_string(spec.n_reps) + " replications failed";
  }

  const EmpiricalCDF lrt_cdf(valid);
  report.wilks_df = wilks_df(spec.scenario, spec.n_items);
  const double df = report.wilks_df;
  const CdfFunction wilks = [df](double x) { return chi2_cdf(df, x); };
  if (!valid.empty()) {
    report.ks_vs_wilks = ks_distance(lrt_cdf, wilks);
    report.rejection_rate_at_05_wilks = rejection_rate(valid, 0.05, wilks);
  }

  if (spec.scenario == Scenario::Re3 && !valid.empty()) {
    report.ks_vs_mixture = ks_distance(lrt_cdf, CdfFunction(mixture_chi2_cdf));
  }

  if (spec.refs.cone) {
    SamplerConfig sampler;
    sampler.n_draws = spec.n_draws;
    sampler.seed = child_seed(spec.master_seed, "cone", 0);
    sampler.workers = spec.workers;
    sampler.cone = spec.cone;
    report.cone_reference =
        cone_reference(spec.scenario, spec.truth, spec.n_items, sampler);
    if (!valid.empty()) {
      const EmpiricalCDF &ref = *report.cone_reference;
      report.ks_vs_cone = ks_distance(lrt_cdf, ref);
      report.rejection_rate_at_05_cone =
          rejection_rate(valid, 0.05, [&ref](double x) { return ref.cdf(x); });
    }
  }

  if (spec.refs.bootstrap_b > 0) {
    // One observed dataset from the truth; the bootstrap resamples from its
    // null fit, as it would be run in practice.
    const LrtComputation fit = observed_fit(spec);
    BootstrapSpec boot;
    boot.scenario = spec.scenario;
    boot.fitted_null = null_params_from_fit(spec.scenario, fit.fit_null);
    boot.n_items = spec.n_items;
    boot.n_obs = spec.n_obs;
    boot.b = spec.refs.bootstrap_b;
    boot.seed = child_seed(spec.master_seed, "bootstrap", 0);
    boot.optim = spec.optim;
    boot.workers = spec.workers;
    report.bootstrap_reference = run_bootstrap_reference(boot);
    if (!valid.empty()) {
      report.ks_vs_bootstrap =
          ks_distance(lrt_cdf, *report.bootstrap_reference);
    }
  }

  if (spec.fisher_diagnostic) {
    report.fisher = diagnostic_info(spec);
  }

  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

// ---------------------------------------------------------------------------

const std::vector<std::string> &fisher_check_names() {
  static const std::vector<std::string> names = {
      "efa_2factor_null", "ifa_2factor_null", "efa_1factor", "ifa_1factor",
      "efa_saturated",    "ifa_saturated",    "re_saturated"};
  return names;
}

InfoMatrix fisher_check(const std::string &name) {
  const EfaParams efa = builtin_efa_truth();
  const IfaParams ifa = builtin_ifa_truth();
  if (name == "efa_2factor_null") {
    EfaParams p = efa;
    p.loadings_2 = Eigen::VectorXd::Zero(efa.n_items());
    return info_submodel_numeric(p);
  }
  if (name == "ifa_2factor_null") {
    IfaParams p = ifa;
    p.discrimination_2 = Eigen::VectorXd::Zero(ifa.n_items());
    return info_submodel_numeric(p);
  }
  if (name == "efa_1factor") {
    return info_submodel_numeric(efa);
  }
  if (name == "ifa_1factor") {
    return info_submodel_numeric(ifa);
  }
  if (name == "efa_saturated") {
    return saturated_info(Scenario::Efa1b, efa, efa.n_items());
  }
  if (name == "ifa_saturated") {
    return saturated_info(Scenario::Ifa2b, ifa, ifa.n_items());
  }
  if (name == "re_saturated") {
    return saturated_info(Scenario::Re3, builtin_re_truth(),
                          builtin_items(Scenario::Re3));
  }
  throw LrtError(ErrorCode::ConfigError, "unknown fisher-check scenario: " + name);
}

void write_eigen_spectrum_csv(const InfoMatrix &info, const std::string &path) {
  std::ofstream out(path);
  if (!out) {
    throw LrtError(ErrorCode::InvalidArgument, "cannot write " + path);
  }
  const double top = info.max_eigenvalue();
  out << "index,eigenvalue,relative\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < info.eigenvalues.size(); ++i) {
    out << i << ',' << info.eigenvalues[i] << ','
        << (top > 0.0 ? info.eigenvalues[i] / top : 0.0) << '\n';
  }
}

namespace {

nlohmann::json optional_json(const std::optional<double> &v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

// JSON has no NaN; failed replications are written as null.
nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

void write_reference_csv(const std::string &path,
                         const std::vector<double> &grid,
                         const CdfFunction &cdf) {
  std::ofstream out(path);
  if (!out) {
    throw LrtError(ErrorCode::InvalidArgument, "cannot write " + path);
  }
  out << "value,cdf\n" << std::setprecision(17);
  for (const double x : grid) {
    out << x << ',' << cdf(x) << '\n';
  }
}

} // namespace

void write_experiment_artifacts(
    const ExperimentReport &report, const ExperimentSpec &spec,
    const std::map<std::string, std::string> &config_echo,
    const std::string &out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  nlohmann::json j;
  j["scenario"] = to_string(report.scenario);
  j["ok"] = report.ok;
  j["message"] = report.message;
  j["n_reps"] = spec.n_reps;
  j["n_obs"] = spec.n_obs;
  j["n_items"] = spec.n_items;
  j["n_failed"] = report.n_failed;
  j["n_floored"] = report.n_floored;
  j["fraction_floored"] = report.fraction_floored;
  j["fraction_at_zero"] = report.fraction_at_zero;
  j["wilks_df"] = report.wilks_df;
  j["ks_vs_wilks"] = report.ks_vs_wilks;
  j["ks_vs_cone"] = optional_json(report.ks_vs_cone);
  j["ks_vs_mixture"] = optional_json(report.ks_vs_mixture);
  j["ks_vs_bootstrap"] = optional_json(report.ks_vs_bootstrap);
  j["rejection_rate_at_05"] = {
      {"wilks", report.rejection_rate_at_05_wilks},
      {"cone", optional_json(report.rejection_rate_at_05_cone)}};
  j["runtime_seconds"] = report.runtime_seconds;
  j["seeds"] = {{"master", spec.master_seed},
                {"cone_reference", child_seed(spec.master_seed, "cone", 0)},
                {"bootstrap", child_seed(spec.master_seed, "bootstrap", 0)}};
  nlohmann::json reps = nlohmann::json::array();
  for (const auto &rep : report.replications) {
    nlohmann::json r;
    r["lrt"] = number_or_null(rep.lrt);
    r["seed"] = rep.seed;
    r["failed"] = rep.failed;
    r["floored"] = rep.floored;
    r["null_converged"] = rep.null_converged;
    r["alt_converged"] = rep.alt_converged;
    if (!rep.error.empty()) {
      r["error"] = rep.error;
    }
    reps.push_back(std::move(r));
  }
  j["replications"] = std::move(reps);
  j["config"] = config_echo;

  std::ofstream json_out(dir / "report.json");
  if (!json_out) {
    throw LrtError(ErrorCode::InvalidArgument, "cannot write report.json");
  }
  json_out << j.dump(2) << '\n';

  const EmpiricalCDF lrt_cdf = report.lrt_cdf();
  lrt_cdf.write_csv((dir / "lrt_cdf.csv").string());

  // Analytic references are tabulated on a grid spanning the LRT sample.
  double top = lrt_cdf.empty() ? 1.0 : lrt_cdf.sorted_values().back();
  top = std::max(top, 1.0) * 1.25;
  std::vector<double> grid(501);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = top * static_cast<double>(i) / 500.0;
  }
  if (spec.refs.wilks) {
    const double df = report.wilks_df;
    write_reference_csv((dir / "reference_wilks_cdf.csv").string(), grid,
                        [df](double x) { return chi2_cdf(df, x); });
  }
  if (spec.scenario == Scenario::Re3) {
    write_reference_csv((dir / "reference_mixture_cdf.csv").string(), grid,
                        mixture_chi2_cdf);
  }
  if (report.cone_reference) {
    report.cone_reference->write_csv((dir / "reference_cone_cdf.csv").string());
  }
  if (report.bootstrap_reference) {
    report.bootstrap_reference->write_csv(
        (dir / "reference_bootstrap_cdf.csv").string());
  }
  if (report.fisher) {
    write_eigen_spectrum_csv(*report.fisher,
                             (dir / "eigen_spectrum.csv").string());
  }
}

} // namespace lrtcone
