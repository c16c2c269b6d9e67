#ifndef LRTCONE_HARNESS_HPP_
#define LRTCONE_HARNESS_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lrtcone/estimation.hpp"
#include "lrtcone/fisher.hpp"
#include "lrtcone/reference_dist.hpp"

namespace lrtcone {

enum class Scenario { Efa1a, Efa1b, Ifa2a, Ifa2b, Re3 };

std::string to_string(Scenario scenario);
/// Accepts "efa_1a", "efa_1b", "ifa_2a", "ifa_2b", "re_3".
std::optional<Scenario> parse_scenario(const std::string &name);
const std::vector<Scenario> &all_scenarios();

/// True parameters: Table-1 loadings/uniquenesses for EFA, Table-2 item
/// parameters for IFA, beta0 = 0 and unit within variance for random effects.
EfaParams builtin_efa_truth();
IfaParams builtin_ifa_truth();
RandomEffectsParams builtin_re_truth();
ModelParams builtin_truth(Scenario scenario);
/// J for each scenario: 6 for the factor models, 20 for random effects.
int builtin_items(Scenario scenario);
/// The built-in truths flattened, keyed by scenario name.
std::map<std::string, ParamVector> builtin_truths();

/// Degrees of freedom of the Wilks chi-square for the scenario.
double wilks_df(Scenario scenario, int n_items);

struct ReferenceSet {
  bool wilks = true;
  bool cone = true;
  // Parametric bootstrap size; 0 disables it.
  int bootstrap_b = 0;
};

struct ExperimentSpec {
  Scenario scenario = Scenario::Re3;
  ModelParams truth;
  int n_items = 0;
  Eigen::Index n_obs = 0;
  std::size_t n_reps = 500;
  OptimConfig optim;
  ReferenceSet refs;
  std::size_t n_draws = 10000;
  ConeMinConfig cone;
  std::uint64_t master_seed = 0;
  std::size_t workers = 1;
  bool fisher_diagnostic = false;

  void validate() const;
};

/*
 * Desk-scale defaults: R = 500, N = 2000 for factor models and N = 200, J =
 * 20 for random effects. full_scale switches to R = 5000 and N = 5000.
 */
ExperimentSpec default_spec(Scenario scenario, bool full_scale = false);

struct ReplicationOutcome {
  double lrt = 0.0;
  bool failed = false;
  bool floored = false;
  bool null_converged = true;
  bool alt_converged = true;
  std::uint64_t seed = 0;
  std::string error;
};

struct ExperimentReport {
  Scenario scenario = Scenario::Re3;
  // One entry per replication, NaN where the replication failed.
  std::vector<double> lrt_values;
  std::vector<ReplicationOutcome> replications;
  std::size_t n_failed = 0;
  std::size_t n_floored = 0;
  double fraction_floored = 0.0;
  double fraction_at_zero = 0.0;
  double wilks_df = 0.0;
  double ks_vs_wilks = 0.0;
  double rejection_rate_at_05_wilks = 0.0;
  std::optional<double> ks_vs_cone;
  std::optional<double> rejection_rate_at_05_cone;
  // Random effects only: distance to the closed-form mixture.
  std::optional<double> ks_vs_mixture;
  std::optional<double> ks_vs_bootstrap;
  std::optional<EmpiricalCDF> cone_reference;
  std::optional<EmpiricalCDF> bootstrap_reference;
  std::optional<InfoMatrix> fisher;
  double runtime_seconds = 0.0;
  bool ok = true;
  std::string message;

  std::vector<double> valid_lrt_values() const;
  EmpiricalCDF lrt_cdf() const { return EmpiricalCDF(valid_lrt_values()); }
};

constexpr double kMaxFailureFraction = 0.10;

/*
 * Replication r simulates from the stream keyed by (master_seed, "rep", r),
 * fits the null and alternative models and records the LRT. Replications are
 * independent jobs, so results do not depend on the worker count.
 */
ExperimentReport run_experiment(const ExperimentSpec &spec);

/// One replication of the experiment; exposed for testing.
ReplicationOutcome run_replication(const ExperimentSpec &spec, std::size_t r);

/// Null and alternative fits plus the LRT for one dataset.
struct LrtComputation {
  FitResult fit_null;
  FitResult fit_alt;
  LrtStatistic lrt;
};

LrtComputation compute_lrt(Scenario scenario, const Dataset &data,
                           const OptimConfig &optim, std::uint64_t seed);

/*
 * Fits on one dataset drawn from the truth with the stream keyed by
 * (master_seed, "observed", 0); the starting point of a bootstrap.
 */
LrtComputation observed_fit(const ExperimentSpec &spec);

/// Null-model parameters from a null fit of the scenario.
ModelParams null_params_from_fit(Scenario scenario, const FitResult &fit_null);

/// Cone reference at the truth: a single projection when the alternative is
/// saturated, otherwise the difference of the null and alternative projections.
EmpiricalCDF cone_reference(Scenario scenario, const ModelParams &truth,
                            int n_items, const SamplerConfig &config);

/// Information matrix of the scenario's saturated model at the truth.
InfoMatrix saturated_info(Scenario scenario, const ModelParams &truth,
                          int n_items);

struct BootstrapSpec {
  Scenario scenario = Scenario::Re3;
  ModelParams fitted_null;
  int n_items = 0;
  Eigen::Index n_obs = 0;
  int b = 200;
  std::uint64_t seed = 0;
  OptimConfig optim;
  std::size_t workers = 1;
};

/// B datasets from the fitted null, each refitted under both hypotheses.
EmpiricalCDF run_bootstrap_reference(const BootstrapSpec &spec);

/// Fraction of replications whose reference p-value 1 - F(lambda) < alpha.
double typeI_error(const ExperimentReport &report, double alpha,
                   const CdfFunction &reference);

/*
 * Named information matrices for the singularity diagnostic:
 * efa_2factor_null, ifa_2factor_null, efa_1factor, ifa_1factor,
 * efa_saturated, ifa_saturated, re_saturated.
 */
InfoMatrix fisher_check(const std::string &name);
const std::vector<std::string> &fisher_check_names();

void write_eigen_spectrum_csv(const InfoMatrix &info, const std::string &path);

/*
 * Writes report.json, lrt_cdf.csv and one reference_<name>_cdf.csv per
 * computed reference (wilks, cone, bootstrap, and mixture for random
 * effects), plus eigen_spectrum.csv when the Fisher diagnostic was requested.
 */
void write_experiment_artifacts(
    const ExperimentReport &report, const ExperimentSpec &spec,
    const std::map<std::string, std::string> &config_echo,
    const std::string &out_dir);

} // namespace lrtcone

#endif /* LRTCONE_HARNESS_HPP_ */
