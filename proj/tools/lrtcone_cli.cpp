// Batch front end: experiments, reference distributions, Fisher diagnostics
// and the parametric bootstrap.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "lrtcone/config.hpp"
#include "lrtcone/error.hpp"
#include "lrtcone/harness.hpp"
#include "lrtcone/rng.hpp"

namespace fs = std::filesystem;
using namespace lrtcone;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitFailure = 2;

// Flags are collected as strings and type-checked with the config file values.
struct FlagValues {
  std::string config_path;
  std::map<std::string, std::string> values;
  bool full_scale = false;
  bool fisher = false;
  bool no_cone = false;
};

void add_common_flags(CLI::App *cmd, FlagValues &flags) {
  auto opt = [&](const std::string &name, const std::string &key,
                 const std::string &help) {
    cmd->add_option_function<std::string>(
        name, [&flags, key](const std::string &v) { flags.values[key] = v; },
        help);
  };
  cmd->add_option("--config", flags.config_path, "config file (INI sections)");
  opt("--scenario", "experiment.scenario", "scenario name");
  opt("--reps", "experiment.n_reps", "replications");
  opt("--obs", "experiment.n_obs", "observations per dataset");
  opt("--items", "experiment.n_items", "group size for re_3");
  opt("--seed", "experiment.seed", "master seed");
  opt("--workers", "experiment.workers",
      "worker threads (default: LRTCONE_WORKERS, else hardware threads)");
  opt("--out", "experiment.out_dir", "output directory (default: out)");
  opt("--draws", "refdist.n_draws", "Monte Carlo draws for the cone reference");
  opt("--bootstrap", "refdist.bootstrap", "parametric bootstrap size B");
  opt("--starts", "optim.n_starts", "optimizer starts");
  opt("--max-iter", "optim.max_iter", "optimizer iterations per start");
  opt("--grad-tol", "optim.grad_tol", "optimizer gradient tolerance");
  opt("--cone-starts", "cone.n_starts", "random starts per cone projection");
  cmd->add_flag("--full-scale", flags.full_scale, "R = 5000 and N = 5000");
  cmd->add_flag("--fisher", flags.fisher, "write eigen_spectrum.csv");
  cmd->add_flag("--no-cone", flags.no_cone, "skip the tangent-cone reference");
}

CliConfig resolve_config(const FlagValues &flags) {
  CliConfig config;
  if (!flags.config_path.empty()) {
    config = parse_config_file(flags.config_path);
  }
  CliConfig overrides;
  for (const auto &[k, v] : flags.values) {
    overrides.set(k, v);
  }
  if (flags.full_scale) {
    overrides.set("experiment.full_scale", "true");
  }
  if (flags.fisher) {
    overrides.set("experiment.fisher_diagnostic", "true");
  }
  if (flags.no_cone) {
    overrides.set("refdist.cone", "false");
  }
  config.merge(overrides);
  validate_config(config);
  return config;
}

std::string out_dir(const CliConfig &config) {
  return config.has("experiment.out_dir") ? config.get("experiment.out_dir")
                                          : std::string("out");
}

void write_json(const fs::path &path, const nlohmann::json &j) {
  std::ofstream out(path);
  if (!out) {
    throw LrtError(ErrorCode::InvalidArgument, "cannot write " + path.string());
  }
  out << j.dump(2) << '\n';
}

void write_echo(const fs::path &dir, const CliConfig &echo) {
  std::ofstream out(dir / "config_echo.ini");
  echo.write_ini(out);
}

int cmd_experiment(const CliConfig &config) {
  const ExperimentSpec spec = spec_from_config(config);
  const CliConfig echo = echo_config(spec);
  const std::string dir = out_dir(config);
  const ExperimentReport report = run_experiment(spec);
  write_experiment_artifacts(report, spec, echo.values(), dir);
  write_echo(dir, echo);

  std::cout << "scenario " << to_string(spec.scenario) << ": "
            << report.lrt_values.size() - report.n_failed << " of "
            << spec.n_reps << " replications, ks_vs_wilks "
            << report.ks_vs_wilks << ", rejection@0.05 (wilks) "
            << report.rejection_rate_at_05_wilks;
  if (report.ks_vs_cone) {
    std::cout << ", ks_vs_cone " << *report.ks_vs_cone
              << ", rejection@0.05 (cone) "
              << *report.rejection_rate_at_05_cone;
  }
  std::cout << "\nartifacts in " << dir << '\n';
  if (!report.ok) {
    std::cerr << "experiment failed: " << report.message << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_reference(const CliConfig &config) {
  const ExperimentSpec spec = spec_from_config(config);
  const fs::path dir = out_dir(config);
  fs::create_directories(dir);
  SamplerConfig sampler;
  sampler.n_draws = spec.n_draws;
  sampler.seed = child_seed(spec.master_seed, "cone", 0);
  sampler.workers = spec.workers;
  sampler.cone = spec.cone;
  const EmpiricalCDF ref =
      cone_reference(spec.scenario, spec.truth, spec.n_items, sampler);
  ref.write_csv((dir / "reference_cone_cdf.csv").string());
  const double df = wilks_df(spec.scenario, spec.n_items);
  const double ks =
      ks_distance(ref, [df](double x) { return chi2_cdf(df, x); });

  nlohmann::json j;
  j["scenario"] = to_string(spec.scenario);
  j["n_draws"] = ref.size();
  j["seed"] = sampler.seed;
  j["wilks_df"] = df;
  j["mean"] = ref.mean();
  j["quantile_95"] = ref.quantile(0.95);
  // Chi-square tail beyond the cone 95% point.
  j["wilks_tail_at_quantile_95"] = 1.0 - chi2_cdf(df, ref.quantile(0.95));
  j["ks_vs_wilks"] = ks;
  j["config"] = echo_config(spec).values();
  write_json(dir / "report.json", j);
  std::cout << "cone reference for " << to_string(spec.scenario) << ": mean "
            << ref.mean() << ", 95% quantile " << ref.quantile(0.95)
            << ", KS vs chi2(" << df << ") " << ks << '\n';
  return kExitOk;
}

int cmd_fisher(const CliConfig &config) {
  if (!config.has("experiment.scenario")) {
    throw LrtError(ErrorCode::ConfigError,
                   "missing required key scenario (experiment.scenario)");
  }
  const std::string name = config.get("experiment.scenario");
  const auto &names = fisher_check_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw LrtError(ErrorCode::ConfigError,
                   "experiment.scenario: unknown fisher-check scenario '" +
                       name + "'");
  }
  const InfoMatrix info = fisher_check(name);
  const fs::path dir = out_dir(config);
  fs::create_directories(dir);
  write_eigen_spectrum_csv(info, (dir / "eigen_spectrum.csv").string());

  nlohmann::json j;
  j["scenario"] = name;
  j["size"] = info.size();
  j["rank_estimate"] = info.rank_estimate;
  j["min_eigenvalue"] = info.min_eigenvalue();
  j["max_eigenvalue"] = info.max_eigenvalue();
  j["condition_ratio"] = info.min_eigenvalue() / info.max_eigenvalue();
  j["invertible"] = info.invertible();
  j["layout"] = info.layout;
  write_json(dir / "report.json", j);
  std::cout << name << ": " << info.size() << " parameters, rank "
            << info.rank_estimate << ", lambda_min/lambda_max "
            << info.min_eigenvalue() / info.max_eigenvalue() << '\n';
  return kExitOk;
}

int cmd_bootstrap(const CliConfig &config) {
  ExperimentSpec spec = spec_from_config(config);
  const fs::path dir = out_dir(config);
  fs::create_directories(dir);
  const std::uint64_t seed = child_seed(spec.master_seed, "observed", 0);
  const LrtComputation fit = observed_fit(spec);

  BootstrapSpec boot;
  boot.scenario = spec.scenario;
  boot.fitted_null = null_params_from_fit(spec.scenario, fit.fit_null);
  boot.n_items = spec.n_items;
  boot.n_obs = spec.n_obs;
  boot.b = spec.refs.bootstrap_b > 0 ? spec.refs.bootstrap_b : 200;
  boot.seed = child_seed(spec.master_seed, "bootstrap", 0);
  boot.optim = spec.optim;
  boot.workers = spec.workers;
  const EmpiricalCDF ref = run_bootstrap_reference(boot);
  ref.write_csv((dir / "reference_bootstrap_cdf.csv").string());

  const double lambda = fit.lrt.value;
  const double p_value = 1.0 - ref.cdf_left(lambda);
  spec.refs.bootstrap_b = boot.b;
  nlohmann::json j;
  j["scenario"] = to_string(spec.scenario);
  j["observed_lrt"] = lambda;
  j["bootstrap_p_value"] = p_value;
  j["b"] = boot.b;
  j["n_resamples_used"] = ref.size();
  j["seeds"] = {{"observed", seed}, {"bootstrap", boot.seed}};
  j["config"] = echo_config(spec).values();
  write_json(dir / "report.json", j);
  std::cout << "observed LRT " << lambda << ", bootstrap p-value " << p_value
            << " (B = " << boot.b << ")\n";
  return kExitOk;
}

std::string help_footer() {
  std::string s =
      "Scenarios (experiment, reference, bootstrap):\n"
      "  efa_1a  one- vs two-factor EFA, J = 6, Wilks df 5\n"
      "  efa_1b  one-factor EFA vs saturated covariance, df 9\n"
      "  ifa_2a  one- vs two-factor IFA (M2PL), J = 6, df 5\n"
      "  ifa_2b  one-factor IFA vs saturated multinomial, df 51\n"
      "  re_3    random intercept variance zero, N = 200, J = 20, df 1\n"
      "Scenarios (fisher-check):\n ";
  for (const auto &n : fisher_check_names()) {
    s += " " + n;
  }
  s += "\n\nConfig keys ([section] key = value) and defaults:\n";
  for (const auto &k : config_schema()) {
    s += "  " + k.key + std::string(k.key.size() < 30 ? 30 - k.key.size() : 1, ' ') +
         k.help + "\n";
  }
  s += "\nExit codes: 0 ok, 1 configuration error, 2 experiment failure.\n"
       "LRTCONE_WORKERS sets the default worker count.\n";
  return s;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Likelihood ratio tests with tangent-cone reference "
               "distributions for nested latent-variable models"};
  app.footer(help_footer());
  app.require_subcommand(1);

  FlagValues flags;
  CLI::App *experiment =
      app.add_subcommand("experiment", "simulate, fit and compare references");
  CLI::App *reference =
      app.add_subcommand("reference", "sample the tangent-cone reference");
  CLI::App *fisher = app.add_subcommand(
      "fisher-check", "eigenvalue spectrum of an information matrix");
  CLI::App *bootstrap = app.add_subcommand(
      "bootstrap", "parametric bootstrap p-value for one dataset");
  for (CLI::App *cmd : {experiment, reference, fisher, bootstrap}) {
    add_common_flags(cmd, flags);
    cmd->footer(help_footer());
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const CliConfig config = resolve_config(flags);
    if (experiment->parsed()) {
      return cmd_experiment(config);
    }
    if (reference->parsed()) {
      return cmd_reference(config);
    }
    if (fisher->parsed()) {
      return cmd_fisher(config);
    }
    return cmd_bootstrap(config);
  } catch (const LrtError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? kExitConfig : kExitFailure;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
