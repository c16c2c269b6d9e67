#include "lrtcone/estimation.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "lrtcone/error.hpp"
#include "lrtcone/linalg.hpp"
#include "lrtcone/optim.hpp"
#include "lrtcone/rng.hpp"

namespace lrtcone {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Optimization coordinates for EFA: (t[1..J], a1[1..J], a2[2..J]) with
// delta = exp(t).
class EfaObjective {
public:
  EfaObjective(const Eigen::MatrixXd &second_moment, int n_factors)
      : s_(second_moment), n_(static_cast<int>(second_moment.rows())),
        factors_(n_factors) {}

  double operator()(const Eigen::VectorXd &u, Eigen::VectorXd &grad) const {
    grad.resize(u.size());
    if (!u.allFinite() || u.head(n_).maxCoeff() > 30.0 ||
        u.head(n_).minCoeff() < -30.0) {
      return kInf;
    }
    const Eigen::VectorXd delta = u.head(n_).array().exp();
    const auto a1 = u.segment(n_, n_);
    Eigen::VectorXd a2 = Eigen::VectorXd::Zero(n_);
    if (factors_ == 2) {
      a2.tail(n_ - 1) = u.tail(n_ - 1);
    }
    Eigen::MatrixXd cov = a1 * a1.transpose();
    if (factors_ == 2) {
      cov.noalias() += a2 * a2.transpose();
    }
    cov.diagonal() += delta;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
      return kInf;
    }
    const double log_det =
        2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const Eigen::MatrixXd inv =
        llt.solve(Eigen::MatrixXd::Identity(n_, n_));
    const Eigen::MatrixXd inv_s = inv * s_;
    const double value =
        0.5 * (n_ * kLog2Pi + log_det + inv_s.trace());
    // d(-l/N) = 1/2 tr(G dSigma), G = W - W S W.
    const Eigen::MatrixXd g = inv - inv_s * inv;
    grad.head(n_) = 0.5 * g.diagonal().cwiseProduct(delta);
    grad.segment(n_, n_) = g * a1;
    if (factors_ == 2) {
      grad.tail(n_ - 1) = (g * a2).tail(n_ - 1);
    }
    return value;
  }

private:
  const Eigen::MatrixXd &s_;
  int n_;
  int factors_;
};

class IfaObjective {
public:
  IfaObjective(const PatternCounts &counts, int n_factors)
      : counts_(counts), n_(counts.n_items), factors_(n_factors),
        quad_(default_rule(n_factors)), total_(counts.total()) {}

  double operator()(const Eigen::VectorXd &u, Eigen::VectorXd &grad) const {
    grad.resize(u.size());
    if (!u.allFinite() || u.cwiseAbs().maxCoeff() > 50.0) {
      return kInf;
    }
    const IfaParams params = ifa_from_param_vector(u, n_, factors_);
    const LoglikWithGradient lg = ifa_loglik_gradient(params, counts_, quad_);
    grad = -lg.gradient / total_;
    return -lg.loglik / total_;
  }

private:
  const PatternCounts &counts_;
  int n_;
  int factors_;
  const QuadratureRule &quad_;
  double total_;
};

template <typename Objective, typename StartFn, typename Finish>
FitResult multi_start(const Objective &objective, const OptimConfig &config,
                      StartFn &&make_start, Finish &&finish, double n_obs) {
  BfgsOptions options;
  options.max_iter = config.max_iter;
  options.grad_tol = config.grad_tol;

  FitResult best;
  best.loglik = -kInf;
  best.n_starts = config.n_starts;
  bool found = false;
  BfgsResult best_run;
  for (int s = 0; s < config.n_starts; ++s) {
    Rng rng = child_rng(config.seed, "start", static_cast<std::uint64_t>(s));
    const BfgsResult run = minimize_bfgs(objective, make_start(s, rng), options);
    if (!std::isfinite(run.value)) {
      ++best.failed_starts;
      continue;
    }
    const double loglik = -run.value * n_obs;
    if (!found || loglik > best.loglik) {
      found = true;
      best.loglik = loglik;
      best.best_start_index = s;
      best_run = run;
    }
  }
  if (!found) {
    throw LrtError(ErrorCode::AllStartsFailed,
                   "every start produced a non-finite likelihood");
  }
  best.converged = best_run.converged;
  best.gradient_norm = best_run.gradient.lpNorm<Eigen::Infinity>();
  best.iterations = best_run.iterations;
  best.params = finish(best_run.x);
  return best;
}

Eigen::VectorXd normal_vector(Eigen::Index n, double sd, Rng &rng) {
  return sd * standard_normal_vector(n, rng);
}

FitResult fit_efa(const Dataset &data, int n_factors, const OptimConfig &config,
                  const FitResult *null_fit) {
  const int n = static_cast<int>(data.n_items());
  const double n_obs = static_cast<double>(data.n_obs());
  const Eigen::MatrixXd s = second_moment(data);
  const EfaObjective objective(s, n_factors);
  const Eigen::Index dim = n_factors == 1 ? 2 * n : 3 * n - 1;

  FitResult one_factor;
  if (n_factors == 2 && null_fit == nullptr) {
    one_factor = fit_efa(data, 1, config, nullptr);
    null_fit = &one_factor;
  }

  auto make_start = [&](int start, Rng &rng) {
    Eigen::VectorXd u(dim);
    if (start == 0) {
      if (n_factors == 1) {
        // Half of each variance to the common factor.
        u.head(n) = (0.5 * s.diagonal()).array().log();
        u.segment(n, n) = (0.5 * s.diagonal()).array().sqrt();
      } else {
        const EfaParams p = efa_params(*null_fit);
        u.head(n) = p.uniquenesses.array().log();
        u.segment(n, n) = p.loadings_1;
        u.tail(n - 1) = normal_vector(n - 1, 0.1, rng);
      }
      return u;
    }
    u.head(n) = normal_vector(n, 0.5, rng);
    u.tail(dim - n) = normal_vector(dim - n, 1.0, rng);
    return u;
  };
  auto finish = [&](const Eigen::VectorXd &u) {
    Eigen::VectorXd natural = u;
    natural.head(n) = u.head(n).array().exp();
    return to_param_vector(efa_from_param_vector(natural, n, n_factors));
  };

  FitResult fit = multi_start(objective, config, make_start, finish, n_obs);
  fit.family = n_factors == 1 ? Family::EfaOneFactor : Family::EfaTwoFactor;
  return fit;
}

} // namespace

FitResult fit_saturated_gaussian(const Dataset &data) {
  const Eigen::Index n = data.n_items();
  if (data.n_obs() <= n) {
    throw LrtError(ErrorCode::RankDeficient,
                   "saturated covariance needs more observations than items");
  }
  const Eigen::MatrixXd s = second_moment(data);
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    throw LrtError(ErrorCode::RankDeficient,
                   "sample covariance is not positive definite");
  }
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  FitResult fit;
  fit.family = Family::SaturatedGaussian;
  fit.params = to_param_vector(SaturatedGaussianParams{half_vec(s)});
  fit.loglik = -0.5 * static_cast<double>(data.n_obs()) *
               (static_cast<double>(n) * (kLog2Pi + 1.0) + log_det);
  return fit;
}

FitResult fit_saturated_multinomial(const PatternCounts &counts) {
  const double total = counts.total();
  if (!(total > 0.0)) {
    throw LrtError(ErrorCode::InvalidArgument, "no observations");
  }
  SaturatedMultinomialParams params;
  params.n_items = counts.n_items;
  params.probs = counts.counts.tail(counts.n_patterns() - 1) / total;
  FitResult fit;
  fit.family = Family::SaturatedMultinomial;
  fit.params = to_param_vector(params);
  fit.loglik = 0.0;
  for (Eigen::Index x = 0; x < counts.n_patterns(); ++x) {
    const double c = counts.counts[x];
    if (c > 0.0) {
      fit.loglik += c * std::log(c / total);
    }
  }
  return fit;
}

FitResult fit_ifa(const PatternCounts &counts, int n_factors,
                  const OptimConfig &config, const FitResult *null_fit) {
  if (n_factors != 1 && n_factors != 2) {
    throw LrtError(ErrorCode::InvalidArgument, "n_factors must be 1 or 2");
  }
  const int n = counts.n_items;
  const double n_obs = counts.total();
  const IfaObjective objective(counts, n_factors);
  const Eigen::Index dim = n_factors == 1 ? 2 * n : 3 * n - 1;

  FitResult one_factor;
  if (n_factors == 2 && null_fit == nullptr) {
    one_factor = fit_ifa(counts, 1, config, nullptr);
    null_fit = &one_factor;
  }

  auto make_start = [&](int start, Rng &rng) {
    Eigen::VectorXd u(dim);
    if (start == 0) {
      if (n_factors == 1) {
        for (int j = 0; j < n; ++j) {
          double endorsed = 0.0;
          for (Eigen::Index x = 0; x < counts.n_patterns(); ++x) {
            if (pattern_bit(static_cast<std::uint32_t>(x), j)) {
              endorsed += counts.counts[x];
            }
          }
          const double p = (endorsed + 0.5) / (n_obs + 1.0);
          u[j] = std::log(p / (1.0 - p));
        }
        u.tail(n).setOnes();
      } else {
        const IfaParams p = ifa_params(*null_fit);
        u.head(n) = p.easiness;
        u.segment(n, n) = p.discrimination_1;
        u.tail(n - 1) = normal_vector(n - 1, 0.1, rng);
      }
      return u;
    }
    return normal_vector(dim, 1.0, rng);
  };
  auto finish = [&](const Eigen::VectorXd &u) {
    return to_param_vector(ifa_from_param_vector(u, n, n_factors));
  };

  FitResult fit = multi_start(objective, config, make_start, finish, n_obs);
  fit.family = n_factors == 1 ? Family::IfaOneFactor : Family::IfaTwoFactor;
  return fit;
}

FitResult fit_factor_model(const Dataset &data, int n_factors,
                           const OptimConfig &config,
                           const FitResult *null_fit) {
  if (n_factors != 1 && n_factors != 2) {
    throw LrtError(ErrorCode::InvalidArgument, "n_factors must be 1 or 2");
  }
  switch (data.kind) {
  case DataKind::Continuous:
    return fit_efa(data, n_factors, config, null_fit);
  case DataKind::Binary:
    return fit_ifa(pattern_counts(data), n_factors, config, null_fit);
  case DataKind::Grouped:
    break;
  }
  throw LrtError(ErrorCode::InvalidArgument,
                 "factor models need continuous or binary data");
}

FitResult fit_random_effects(const Dataset &data, bool constrain_null) {
  const double groups = static_cast<double>(data.n_obs());
  const double members = static_cast<double>(data.n_items());
  const double grand_mean = data.rows.mean();
  const Eigen::VectorXd group_means = data.rows.rowwise().mean();
  const double between_ss =
      members * (group_means.array() - grand_mean).square().sum();
  const double within_ss =
      (data.rows.colwise() - group_means).squaredNorm();

  RandomEffectsParams params;
  params.beta0 = grand_mean;
  const double pooled = (between_ss + within_ss) / (groups * members);
  if (constrain_null) {
    params.var_between = 0.0;
    params.var_within = pooled;
  } else {
    const double within = within_ss / (groups * (members - 1.0));
    const double between = (between_ss / groups - within) / members;
    if (between > 0.0) {
      params.var_between = between;
      params.var_within = within;
    } else {
      params.var_between = 0.0;
      params.var_within = pooled;
    }
  }

  FitResult fit;
  fit.family = Family::RandomIntercept;
  fit.params = to_param_vector(params);
  fit.loglik = re_loglik(params, data);
  return fit;
}

LrtStatistic lrt_statistic(const FitResult &fit_alt,
                           const FitResult &fit_null) {
  const double raw = 2.0 * (fit_alt.loglik - fit_null.loglik);
  if (!std::isfinite(raw) || raw <= -kNegativeLrtTolerance) {
    throw LrtError(ErrorCode::NegativeLRT,
                   "alternative fit is below the null fit (" +
                       std::to_string(raw) + ")");
  }
  if (raw < 0.0) {
    return {0.0, true};
  }
  return {raw, false};
}

EfaParams efa_params(const FitResult &fit) {
  const Eigen::Index size = fit.params.size();
  // 2J for one factor, 3J - 1 for two.
  if (fit.family == Family::EfaOneFactor) {
    return efa_from_param_vector(fit.params.values,
                                 static_cast<int>(size / 2), 1);
  }
  if (fit.family == Family::EfaTwoFactor) {
    return efa_from_param_vector(fit.params.values,
                                 static_cast<int>((size + 1) / 3), 2);
  }
  throw LrtError(ErrorCode::InvalidArgument, "fit is not an EFA model");
}

IfaParams ifa_params(const FitResult &fit) {
  const Eigen::Index size = fit.params.size();
  if (fit.family == Family::IfaOneFactor) {
    return ifa_from_param_vector(fit.params.values,
                                 static_cast<int>(size / 2), 1);
  }
  if (fit.family == Family::IfaTwoFactor) {
    return ifa_from_param_vector(fit.params.values,
                                 static_cast<int>((size + 1) / 3), 2);
  }
  throw LrtError(ErrorCode::InvalidArgument, "fit is not an IFA model");
}

RandomEffectsParams re_params(const FitResult &fit) {
  if (fit.family != Family::RandomIntercept) {
    throw LrtError(ErrorCode::InvalidArgument, "fit is not a random intercept");
  }
  return {fit.params.values[0], fit.params.values[1], fit.params.values[2]};
}

} // namespace lrtcone
