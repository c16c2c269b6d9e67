#ifndef LRTCONE_MODEL_ZOO_HPP_
#define LRTCONE_MODEL_ZOO_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "lrtcone/quadrature.hpp"

namespace lrtcone {

enum class Family {
  EfaOneFactor,
  EfaTwoFactor,
  SaturatedGaussian,
  IfaOneFactor,
  IfaTwoFactor,
  SaturatedMultinomial,
  RandomIntercept,
};

std::string to_string(Family family);

struct ModelSpec {
  Family family = Family::EfaOneFactor;
  int n_items = 0;
};

/*
 * Flat parameter vector with one name per coordinate, e.g. "delta[3]",
 * "a1[2]", "a2[4]", "d[1]", "beta0", "sigma1_sq", "pi[5]".
 */
struct ParamVector {
  Eigen::VectorXd values;
  std::vector<std::string> names;

  Eigen::Index size() const { return values.size(); }
  double at(const std::string &name) const;
};

// Two-factor models carry a second loading vector whose first coordinate is
// pinned at zero.
struct EfaParams {
  Eigen::VectorXd loadings_1;
  std::optional<Eigen::VectorXd> loadings_2;
  Eigen::VectorXd uniquenesses;

  int n_items() const { return static_cast<int>(loadings_1.size()); }
  int n_factors() const { return loadings_2 ? 2 : 1; }
  void validate() const;
};

struct IfaParams {
  Eigen::VectorXd easiness;
  Eigen::VectorXd discrimination_1;
  std::optional<Eigen::VectorXd> discrimination_2;

  int n_items() const { return static_cast<int>(easiness.size()); }
  int n_factors() const { return discrimination_2 ? 2 : 1; }
  void validate() const;
};

struct RandomEffectsParams {
  double beta0 = 0.0;
  double var_between = 0.0;
  double var_within = 1.0;

  void validate() const;
};

struct SaturatedGaussianParams {
  Eigen::VectorXd cov_upper;

  Eigen::MatrixXd covariance() const;
  int n_items() const;
};

/// Probabilities of the nonzero patterns; probs[x - 1] belongs to pattern x.
struct SaturatedMultinomialParams {
  Eigen::VectorXd probs;
  int n_items = 0;

  double zero_pattern_prob() const { return 1.0 - probs.sum(); }
  void validate() const;
};

using ModelParams = std::variant<EfaParams, IfaParams, RandomEffectsParams>;

enum class DataKind { Continuous, Binary, Grouped };

/*
 * N-by-J observations. For grouped (random effects) data each row is a group
 * and each column a member.
 */
struct Dataset {
  Eigen::MatrixXd rows;
  DataKind kind = DataKind::Continuous;

  Eigen::Index n_obs() const { return rows.rows(); }
  Eigen::Index n_items() const { return rows.cols(); }
};

/*
 * Response pattern counts over {0,1}^J. Pattern x encodes item j (0-based) in
 * bit j, so counts[0] is the all-zero pattern.
 */
struct PatternCounts {
  int n_items = 0;
  Eigen::VectorXd counts;

  double total() const { return counts.sum(); }
  Eigen::Index n_patterns() const { return counts.size(); }
};

inline bool pattern_bit(std::uint32_t pattern, int item) {
  return ((pattern >> item) & 1U) != 0U;
}

std::uint32_t pattern_index(const Eigen::Ref<const Eigen::VectorXd> &row);

PatternCounts pattern_counts(const Dataset &data);

/// Numerically stable 1 / (1 + exp(-x)).
inline double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Gaussian factor models
// ---------------------------------------------------------------------------

Eigen::MatrixXd efa_covariance(const EfaParams &params);

/// (1/N) X^T X, the zero-mean sufficient statistic.
Eigen::MatrixXd second_moment(const Dataset &data);

double gaussian_loglik(const Eigen::MatrixXd &cov, const Dataset &data);

/// Same value as gaussian_loglik, computed from S = (1/N) X^T X.
double gaussian_loglik(const Eigen::MatrixXd &cov,
                       const Eigen::MatrixXd &second_moment, double n_obs);

/*
 * Layout (delta[1..J], a1[1..J], a2[2..J]); the a2 block is absent for one
 * factor.
 */
ParamVector to_param_vector(const EfaParams &params);
EfaParams efa_from_param_vector(const Eigen::VectorXd &values, int n_items,
                                int n_factors);

/// Gradient of the log-likelihood in the to_param_vector layout.
Eigen::VectorXd efa_gradient(const EfaParams &params,
                             const Eigen::MatrixXd &second_moment,
                             double n_obs);

// ---------------------------------------------------------------------------
// Item factor models
// ---------------------------------------------------------------------------

/// Layout (d[1..J], a1[1..J], a2[2..J]).
ParamVector to_param_vector(const IfaParams &params);
IfaParams ifa_from_param_vector(const Eigen::VectorXd &values, int n_items,
                                int n_factors);

double ifa_pattern_prob(const IfaParams &params, std::uint32_t pattern,
                        const QuadratureRule &quad);

/// All 2^J pattern probabilities, indexed by pattern.
Eigen::VectorXd ifa_pattern_probs(const IfaParams &params,
                                  const QuadratureRule &quad);

/*
 * Pattern probabilities together with their derivatives with respect to the
 * to_param_vector coordinates (rows: patterns, columns: parameters).
 */
struct IfaPatternJacobian {
  Eigen::VectorXd probs;
  Eigen::MatrixXd jacobian;
};

IfaPatternJacobian ifa_pattern_jacobian(const IfaParams &params,
                                        const QuadratureRule &quad);

double ifa_loglik(const IfaParams &params, const Dataset &data,
                  const QuadratureRule &quad);
double ifa_loglik(const IfaParams &params, const PatternCounts &counts,
                  const QuadratureRule &quad);

struct LoglikWithGradient {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
};

LoglikWithGradient ifa_loglik_gradient(const IfaParams &params,
                                       const PatternCounts &counts,
                                       const QuadratureRule &quad);

// ---------------------------------------------------------------------------
// Random intercept model and saturated multinomial
// ---------------------------------------------------------------------------

ParamVector to_param_vector(const RandomEffectsParams &params);

double re_loglik(const RandomEffectsParams &params, const Dataset &data);

/// Gradient with respect to (beta0, var_between, var_within).
Eigen::Vector3d re_gradient(const RandomEffectsParams &params,
                            const Dataset &data);

/// Sum_x n_x log p_x; -infinity when a pattern with zero probability occurs.
double saturated_multinomial_loglik(const SaturatedMultinomialParams &params,
                                    const PatternCounts &counts);

ParamVector to_param_vector(const SaturatedGaussianParams &params);
ParamVector to_param_vector(const SaturatedMultinomialParams &params);

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/*
 * Draws n observations (groups, for the random intercept model) from the
 * model. spec.n_items gives the group size for random effects; for the other
 * families it must agree with the parameters.
 */
Dataset simulate(const ModelSpec &spec, const ModelParams &params,
                 Eigen::Index n, std::uint64_t seed);

} // namespace lrtcone

#endif /* LRTCONE_MODEL_ZOO_HPP_ */
