#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lrtcone/error.hpp"
#include "lrtcone/linalg.hpp"
#include "lrtcone/model_zoo.hpp"
#include "oracles.hpp"

using namespace lrtcone;

namespace {

const double kLog2Pi = std::log(2.0 * oracle::kPi);

EfaParams efa_truth() {
  EfaParams p;
  p.loadings_1.resize(6);
  p.loadings_1 << 1.17, 1.87, 1.42, 1.71, 1.23, 1.78;
  p.uniquenesses.resize(6);
  p.uniquenesses << 1.38, 0.85, 1.46, 0.78, 1.24, 0.60;
  return p;
}

IfaParams ifa_truth() {
  IfaParams p;
  p.easiness.resize(6);
  p.easiness << -0.23, -0.12, 0.07, 0.31, -0.29, 0.19;
  p.discrimination_1.resize(6);
  p.discrimination_1 << 0.83, 1.22, 0.96, 0.91, 1.02, 1.25;
  return p;
}

Eigen::VectorXd uniform_vector(Eigen::Index n, double lo, double hi,
                               std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = u(rng);
  }
  return v;
}

EfaParams random_efa(int n, bool two_factor, std::mt19937_64 &rng) {
  EfaParams p;
  p.loadings_1 = uniform_vector(n, -1.5, 1.5, rng);
  if (two_factor) {
    Eigen::VectorXd a2 = uniform_vector(n, -1.0, 1.0, rng);
    a2[0] = 0.0;
    p.loadings_2 = a2;
  }
  p.uniquenesses = uniform_vector(n, 0.4, 1.6, rng);
  return p;
}

IfaParams random_ifa(int n, bool two_factor, std::mt19937_64 &rng) {
  IfaParams p;
  p.easiness = uniform_vector(n, -1.0, 1.0, rng);
  p.discrimination_1 = uniform_vector(n, -1.5, 1.5, rng);
  if (two_factor) {
    Eigen::VectorXd a2 = uniform_vector(n, -1.0, 1.0, rng);
    a2[0] = 0.0;
    p.discrimination_2 = a2;
  }
  return p;
}

Dataset continuous(const Eigen::MatrixXd &rows) {
  return {rows, DataKind::Continuous};
}

void expect_relative(const Eigen::VectorXd &a, const Eigen::VectorXd &b,
                     double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double scale = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
    EXPECT_LT(std::abs(a[i] - b[i]) / scale, tol) << "coordinate " << i;
  }
}

} // namespace

TEST(EfaCovariance, RankOnePlusIdentity) {
  EfaParams p;
  p.loadings_1 = Eigen::VectorXd::Zero(4);
  p.loadings_1[0] = 1.0;
  p.uniquenesses = Eigen::VectorXd::Ones(4);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Identity(4, 4);
  expected(0, 0) = 2.0;
  EXPECT_TRUE(efa_covariance(p).isApprox(expected));
}

TEST(EfaCovariance, TruthCorner) {
  EXPECT_NEAR(efa_covariance(efa_truth())(0, 0), 2.7489, 1e-12);
}

TEST(EfaCovariance, MatchesElementwiseLoopAndIsExactlySymmetric) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const EfaParams p = random_efa(5, true, rng);
    const Eigen::MatrixXd sigma = efa_covariance(p);
    EXPECT_TRUE(is_exactly_symmetric(sigma));
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        const double brute = p.loadings_1[i] * p.loadings_1[j] +
                             (*p.loadings_2)[i] * (*p.loadings_2)[j] +
                             (i == j ? p.uniquenesses[i] : 0.0);
        EXPECT_NEAR(sigma(i, j), brute, 1e-14);
      }
    }
  }
}

TEST(EfaParams, RejectsNonpositiveUniqueness) {
  EfaParams p = efa_truth();
  p.uniquenesses[2] = 0.0;
  EXPECT_THROW(p.validate(), LrtError);
}

TEST(GaussianLoglik, HandCases) {
  const int j = 4;
  Dataset zero = continuous(Eigen::MatrixXd::Zero(1, j));
  EXPECT_NEAR(gaussian_loglik(Eigen::MatrixXd::Identity(j, j), zero),
              -0.5 * j * kLog2Pi, 1e-12);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(j, j);
  cov(0, 0) = 2.0;
  Dataset e1 = continuous(Eigen::MatrixXd::Zero(1, j));
  e1.rows(0, 0) = 1.0;
  EXPECT_NEAR(gaussian_loglik(cov, e1),
              -0.5 * j * kLog2Pi - 0.5 * std::log(2.0) - 0.25, 1e-12);
}

TEST(GaussianLoglik, MatchesDenseInverse) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd cov = oracle::random_spd(5, rng);
    Eigen::MatrixXd rows(10, 5);
    for (Eigen::Index i = 0; i < rows.size(); ++i) {
      rows.data()[i] = normal(rng);
    }
    const double dense =
        oracle::dense_mvn_loglik(cov, Eigen::VectorXd::Zero(5), rows);
    const double fast = gaussian_loglik(cov, continuous(rows));
    EXPECT_NEAR(fast, dense, 1e-10 * std::abs(dense));
    const Eigen::MatrixXd s = rows.transpose() * rows / 10.0;
    EXPECT_NEAR(gaussian_loglik(cov, s, 10.0), dense, 1e-10 * std::abs(dense));
  }
}

TEST(GaussianLoglik, NonSpdThrows) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(3, 3);
  cov(2, 2) = -1.0;
  try {
    gaussian_loglik(cov, continuous(Eigen::MatrixXd::Zero(2, 3)));
    FAIL();
  } catch (const LrtError &e) {
    EXPECT_EQ(e.code(), ErrorCode::NonSPD);
  }
}

TEST(EfaGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const bool two = trial % 2 == 1;
    const int n = 5;
    const EfaParams p = random_efa(n, two, rng);
    Eigen::MatrixXd rows(40, n);
    for (Eigen::Index i = 0; i < rows.size(); ++i) {
      rows.data()[i] = 1.3 * normal(rng);
    }
    const Eigen::MatrixXd s = rows.transpose() * rows / 40.0;
    const Eigen::VectorXd x = to_param_vector(p).values;
    auto f = [&](const Eigen::VectorXd &v) {
      return gaussian_loglik(
          efa_covariance(efa_from_param_vector(v, n, two ? 2 : 1)), s, 40.0);
    };
    expect_relative(efa_gradient(p, s, 40.0), oracle::fd_gradient(f, x), 1e-4);
  }
}

TEST(IfaPatternProb, ConstantIntegrandClosedForm) {
  IfaParams p;
  p.easiness.resize(4);
  p.easiness << 0.3, -0.7, 1.1, 0.0;
  p.discrimination_1 = Eigen::VectorXd::Zero(4);
  const QuadratureRule &quad = default_rule(1);
  for (std::uint32_t x = 0; x < 16; ++x) {
    double expected = 1.0;
    for (int j = 0; j < 4; ++j) {
      expected *= (pattern_bit(x, j) ? std::exp(p.easiness[j]) : 1.0) /
                  (1.0 + std::exp(p.easiness[j]));
    }
    EXPECT_NEAR(ifa_pattern_prob(p, x, quad), expected, 1e-14);
  }
  p.easiness.setZero();
  EXPECT_NEAR(ifa_pattern_prob(p, 5, quad), 1.0 / 16.0, 1e-15);
}

TEST(IfaPatternProb, AllOnesPatternMatchesTrapezoid) {
  const IfaParams p = ifa_truth();
  const double trap = oracle::ifa_pattern_trapezoid(
      p.easiness, p.discrimination_1, 63U, 10000);
  EXPECT_NEAR(ifa_pattern_prob(p, 63, default_rule(1)), trap, 1e-8);
}

TEST(IfaPatternProb, SumsToOne) {
  std::mt19937_64 rng(9);
  for (int n = 1; n <= 8; ++n) {
    const IfaParams p = random_ifa(n, false, rng);
    EXPECT_NEAR(ifa_pattern_probs(p, default_rule(1)).sum(), 1.0, 1e-8) << n;
  }
  for (int n = 2; n <= 6; n += 2) {
    const IfaParams p = random_ifa(n, true, rng);
    EXPECT_NEAR(ifa_pattern_probs(p, default_rule(2)).sum(), 1.0, 1e-8) << n;
  }
}

TEST(IfaPatternProb, VectorizedMatchesDirectLoop) {
  std::mt19937_64 rng(10);
  const IfaParams p = random_ifa(5, true, rng);
  const QuadratureRule &quad = default_rule(2);
  const Eigen::VectorXd all = ifa_pattern_probs(p, quad);
  for (std::uint32_t x = 0; x < 32; ++x) {
    EXPECT_NEAR(all[x], ifa_pattern_prob(p, x, quad), 1e-14);
  }
}

TEST(PatternIndex, LittleEndian) {
  Eigen::VectorXd row(4);
  row << 1, 0, 1, 1;
  EXPECT_EQ(pattern_index(row), 1U + 4U + 8U);
  EXPECT_TRUE(pattern_bit(13, 0));
  EXPECT_FALSE(pattern_bit(13, 1));
}

TEST(IfaLoglik, AggregationEqualsRowLoop) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const bool two = trial % 2 == 0;
    const IfaParams p = random_ifa(5, two, rng);
    const Dataset data = simulate({Family::IfaOneFactor, 5}, p, 300,
                                  static_cast<std::uint64_t>(trial));
    const QuadratureRule &quad = default_rule(two ? 2 : 1);
    double naive = 0.0;
    for (Eigen::Index i = 0; i < data.n_obs(); ++i) {
      naive += std::log(
          ifa_pattern_prob(p, pattern_index(data.rows.row(i).transpose()), quad));
    }
    EXPECT_NEAR(ifa_loglik(p, data, quad), naive, 1e-10 * std::abs(naive));
  }
}

TEST(IfaLoglik, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const bool two = trial % 2 == 1;
    const int n = 4;
    const IfaParams p = random_ifa(n, two, rng);
    const Dataset data = simulate({Family::IfaOneFactor, n}, p, 200,
                                  static_cast<std::uint64_t>(100 + trial));
    const PatternCounts counts = pattern_counts(data);
    const QuadratureRule &quad = default_rule(two ? 2 : 1);
    auto f = [&](const Eigen::VectorXd &v) {
      return ifa_loglik(ifa_from_param_vector(v, n, two ? 2 : 1), counts, quad);
    };
    const Eigen::VectorXd x = to_param_vector(p).values;
    const LoglikWithGradient lg = ifa_loglik_gradient(p, counts, quad);
    EXPECT_NEAR(lg.loglik, f(x), 1e-10 * std::abs(lg.loglik));
    expect_relative(lg.gradient, oracle::fd_gradient(f, x), 1e-4);
  }
}

TEST(IfaJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(14);
  const IfaParams p = random_ifa(4, true, rng);
  const QuadratureRule &quad = default_rule(2);
  const IfaPatternJacobian pj = ifa_pattern_jacobian(p, quad);
  const Eigen::VectorXd x = to_param_vector(p).values;
  for (std::uint32_t pat = 0; pat < 16; ++pat) {
    auto f = [&](const Eigen::VectorXd &v) {
      return ifa_pattern_prob(ifa_from_param_vector(v, 4, 2), pat, quad);
    };
    const Eigen::VectorXd fd = oracle::fd_gradient(f, x);
    EXPECT_LT((pj.jacobian.row(pat).transpose() - fd).cwiseAbs().maxCoeff(),
              1e-8);
  }
}

TEST(Logistic, StableAtExtremes) {
  EXPECT_EQ(logistic(800.0), 1.0);
  EXPECT_EQ(logistic(-800.0), 0.0);
  EXPECT_TRUE(std::isfinite(logistic(-710.0)));
  EXPECT_NEAR(logistic(0.0), 0.5, 0.0);
}

TEST(ReLoglik, CollapsesToIidWhenBetweenVarianceIsZero) {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> normal(0.4, 1.3);
  Eigen::MatrixXd rows(7, 5);
  for (Eigen::Index i = 0; i < rows.size(); ++i) {
    rows.data()[i] = normal(rng);
  }
  const RandomEffectsParams p{0.4, 0.0, 1.7};
  double iid = 0.0;
  for (Eigen::Index i = 0; i < rows.size(); ++i) {
    const double r = rows.data()[i] - 0.4;
    iid += -0.5 * (kLog2Pi + std::log(1.7) + r * r / 1.7);
  }
  EXPECT_NEAR(re_loglik(p, {rows, DataKind::Grouped}), iid, 1e-10);
}

TEST(ReLoglik, TwoByTwoByHand) {
  const RandomEffectsParams p{0.0, 1.0, 1.0};
  const Dataset data{Eigen::MatrixXd::Zero(1, 2), DataKind::Grouped};
  EXPECT_NEAR(re_loglik(p, data), -std::log(2.0 * oracle::kPi) - 0.5 * std::log(3.0),
              1e-13);
}

TEST(ReLoglik, MatchesDenseMvn) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  std::normal_distribution<double> normal(0.0, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    const int j = 2 + trial % 7;
    const RandomEffectsParams p{normal(rng), u(rng), u(rng)};
    Eigen::MatrixXd rows(6, j);
    for (Eigen::Index i = 0; i < rows.size(); ++i) {
      rows.data()[i] = normal(rng);
    }
    const Eigen::MatrixXd cov =
        p.var_within * Eigen::MatrixXd::Identity(j, j) +
        p.var_between * Eigen::MatrixXd::Ones(j, j);
    const double dense = oracle::dense_mvn_loglik(
        cov, Eigen::VectorXd::Constant(j, p.beta0), rows);
    EXPECT_NEAR(re_loglik(p, {rows, DataKind::Grouped}), dense,
                1e-10 * std::abs(dense));
  }
}

TEST(ReLoglik, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomEffectsParams p{u(rng) - 1.0, u(rng), u(rng)};
    const Dataset data = simulate({Family::RandomIntercept, 6}, p, 30,
                                  static_cast<std::uint64_t>(trial));
    auto f = [&](const Eigen::VectorXd &v) {
      return re_loglik({v[0], v[1], v[2]}, data);
    };
    const Eigen::Vector3d x(p.beta0, p.var_between, p.var_within);
    expect_relative(re_gradient(p, data), oracle::fd_gradient(f, x), 1e-4);
  }
}

TEST(ReLoglik, DegenerateVarianceThrows) {
  const Dataset data{Eigen::MatrixXd::Zero(2, 3), DataKind::Grouped};
  try {
    re_loglik({0.0, 0.0, 0.0}, data);
    FAIL();
  } catch (const LrtError &e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateVariance);
  }
}

TEST(SaturatedMultinomial, UniformAndZeroCells) {
  const int j = 3;
  SaturatedMultinomialParams p{Eigen::VectorXd::Constant(7, 0.125), j};
  PatternCounts counts{j, Eigen::VectorXd::Constant(8, 5.0)};
  EXPECT_NEAR(saturated_multinomial_loglik(p, counts),
              40.0 * (-3.0 * std::log(2.0)), 1e-12);
  // A zero-probability cell with no observations contributes nothing.
  p.probs[2] = 0.0;
  p.probs[3] = 0.25;
  counts.counts[3] = 0.0;
  const double v = saturated_multinomial_loglik(p, counts);
  EXPECT_TRUE(std::isfinite(v));
  counts.counts[3] = 1.0;
  EXPECT_EQ(saturated_multinomial_loglik(p, counts),
            -std::numeric_limits<double>::infinity());
}

TEST(SaturatedMultinomial, RandomCaseMatchesNaiveSum) {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Eigen::VectorXd w(16);
  for (auto &x : w) {
    x = u(rng);
  }
  w /= w.sum();
  PatternCounts counts{4, Eigen::VectorXd(16)};
  double naive = 0.0;
  for (int x = 0; x < 16; ++x) {
    counts.counts[x] = std::floor(10.0 * u(rng));
    naive += counts.counts[x] * std::log(w[x]);
  }
  EXPECT_NEAR(saturated_multinomial_loglik({w.tail(15), 4}, counts), naive,
              1e-12 * std::abs(naive));
}

TEST(Simulate, EqualSeedsGiveIdenticalData) {
  const Dataset a = simulate({Family::EfaOneFactor, 6}, efa_truth(), 100, 42);
  const Dataset b = simulate({Family::EfaOneFactor, 6}, efa_truth(), 100, 42);
  const Dataset c = simulate({Family::EfaOneFactor, 6}, efa_truth(), 100, 43);
  EXPECT_TRUE((a.rows.array() == b.rows.array()).all());
  EXPECT_FALSE((a.rows.array() == c.rows.array()).all());
}

TEST(Simulate, EfaSampleCovarianceConverges) {
  EfaParams p = efa_truth();
  Eigen::VectorXd a2(6);
  a2 << 0.0, 0.4, -0.3, 0.2, 0.5, -0.1;
  p.loadings_2 = a2;
  const Dataset data = simulate({Family::EfaTwoFactor, 6}, p, 1000000, 1);
  const Eigen::MatrixXd s = second_moment(data);
  EXPECT_LT((s - efa_covariance(p)).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Simulate, IfaItemMeanWithNoDiscrimination) {
  IfaParams p;
  p.easiness.resize(3);
  p.easiness << -0.8, 0.0, 1.2;
  p.discrimination_1 = Eigen::VectorXd::Zero(3);
  const Eigen::Index n = 20000;
  const Dataset data = simulate({Family::IfaOneFactor, 3}, p, n, 2);
  for (int j = 0; j < 3; ++j) {
    const double q = logistic(p.easiness[j]);
    const double se = std::sqrt(q * (1.0 - q) / static_cast<double>(n));
    EXPECT_NEAR(data.rows.col(j).mean(), q, 3.0 * se) << j;
  }
}

TEST(Simulate, RandomEffectsCellVariance) {
  const RandomEffectsParams p{1.0, 0.5, 1.5};
  const Dataset data = simulate({Family::RandomIntercept, 10}, p, 20000, 3);
  const double mean = data.rows.mean();
  const double var =
      (data.rows.array() - mean).square().sum() / static_cast<double>(data.rows.size());
  EXPECT_NEAR(mean, 1.0, 0.03);
  EXPECT_NEAR(var, 2.0, 0.05);
}

TEST(Simulate, RejectsMismatchedItemCount) {
  EXPECT_THROW(simulate({Family::EfaOneFactor, 5}, efa_truth(), 10, 1), LrtError);
  EXPECT_THROW(simulate({Family::RandomIntercept, 0},
                        RandomEffectsParams{0.0, 0.0, 1.0}, 10, 1),
               LrtError);
}

TEST(ParamVector, NamesFollowLayout) {
  EfaParams p = efa_truth();
  p.loadings_2 = Eigen::VectorXd::Zero(6);
  const ParamVector v = to_param_vector(p);
  ASSERT_EQ(v.size(), 17);
  EXPECT_EQ(v.names[0], "delta[1]");
  EXPECT_EQ(v.names[6], "a1[1]");
  EXPECT_EQ(v.names[12], "a2[2]");
  EXPECT_DOUBLE_EQ(v.at("a1[2]"), 1.87);
  EXPECT_THROW(v.at("a2[1]"), LrtError);
}
