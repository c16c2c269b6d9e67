#ifndef LRTCONE_ESTIMATION_HPP_
#define LRTCONE_ESTIMATION_HPP_

#include <cstdint>

#include "lrtcone/model_zoo.hpp"

namespace lrtcone {

struct OptimConfig {
  int n_starts = 10;
  int max_iter = 500;
  // Applied to the gradient of the per-observation log-likelihood.
  double grad_tol = 1e-6;
  std::uint64_t seed = 0;
};

struct FitResult {
  Family family = Family::EfaOneFactor;
  ParamVector params;
  double loglik = 0.0;
  int n_starts = 1;
  int best_start_index = 0;
  int failed_starts = 0;
  bool converged = true;
  double gradient_norm = 0.0;
  int iterations = 0;
};

FitResult fit_saturated_gaussian(const Dataset &data);

FitResult fit_saturated_multinomial(const PatternCounts &counts);

/*
 * Multi-start maximum likelihood for the one- or two-factor EFA (continuous
 * data) or IFA (binary data) model. Uniquenesses are optimized on the log
 * scale and a[1,2] is held at zero. For two factors the first start is the
 * one-factor fit with a small random second loading vector; `null_fit` is
 * used for that when given, otherwise the one-factor model is fitted first.
 */
FitResult fit_factor_model(const Dataset &data, int n_factors,
                           const OptimConfig &config,
                           const FitResult *null_fit = nullptr);

/// Same, for binary data already reduced to pattern counts.
FitResult fit_ifa(const PatternCounts &counts, int n_factors,
                  const OptimConfig &config, const FitResult *null_fit = nullptr);

/*
 * Closed-form MLE of the balanced random intercept model. With
 * constrain_null the between-group variance is fixed at zero; otherwise it is
 * estimated subject to being nonnegative.
 */
FitResult fit_random_effects(const Dataset &data, bool constrain_null);

struct LrtStatistic {
  double value = 0.0;
  // Raw statistic was slightly negative (optimizer noise) and set to zero.
  bool floored = false;
};

constexpr double kNegativeLrtTolerance = 1e-6;

/// 2 (alt - null) log-likelihood; throws NegativeLRT below -1e-6.
LrtStatistic lrt_statistic(const FitResult &fit_alt, const FitResult &fit_null);

EfaParams efa_params(const FitResult &fit);
IfaParams ifa_params(const FitResult &fit);
RandomEffectsParams re_params(const FitResult &fit);

} // namespace lrtcone

#endif /* LRTCONE_ESTIMATION_HPP_ */
