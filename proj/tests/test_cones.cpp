#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lrtcone/cones.hpp"
#include "lrtcone/error.hpp"
#include "lrtcone/fisher.hpp"
#include "lrtcone/linalg.hpp"
#include "oracles.hpp"

using namespace lrtcone;

namespace {

const Eigen::VectorXd &efa_loadings() {
  static const Eigen::VectorXd a =
      (Eigen::VectorXd(6) << 1.17, 1.87, 1.42, 1.71, 1.23, 1.78).finished();
  return a;
}
const Eigen::VectorXd &efa_uniquenesses() {
  static const Eigen::VectorXd d =
      (Eigen::VectorXd(6) << 1.38, 0.85, 1.46, 0.78, 1.24, 0.60).finished();
  return d;
}
const Eigen::VectorXd &ifa_easiness() {
  static const Eigen::VectorXd d =
      (Eigen::VectorXd(6) << -0.23, -0.12, 0.07, 0.31, -0.29, 0.19).finished();
  return d;
}
const Eigen::VectorXd &ifa_discrimination() {
  static const Eigen::VectorXd a =
      (Eigen::VectorXd(6) << 0.83, 1.22, 0.96, 0.91, 1.02, 1.25).finished();
  return a;
}

Eigen::MatrixXd efa_isqrt(Eigen::Index j) {
  const Eigen::VectorXd a = efa_loadings().head(j);
  const Eigen::MatrixXd sigma =
      a * a.transpose() +
      Eigen::MatrixXd(efa_uniquenesses().head(j).asDiagonal());
  return sqrt_psd(info_saturated_gaussian({half_vec(sigma)}));
}

Eigen::MatrixXd ifa_isqrt(Eigen::Index j) {
  IfaParams p;
  p.easiness = ifa_easiness().head(j);
  p.discrimination_1 = ifa_discrimination().head(j);
  const Eigen::VectorXd probs = ifa_pattern_probs(p, default_rule(1));
  const SaturatedMultinomialParams sat{probs.tail(probs.size() - 1),
                                       static_cast<int>(j)};
  return sqrt_psd(info_saturated_multinomial(sat));
}

// Mixed second derivative of f at x along coordinates r, s, with one
// Richardson step.
template <typename F>
double second_partial(F &&f, Eigen::VectorXd x, Eigen::Index r, Eigen::Index s,
                      double h) {
  auto raw = [&](double step) {
    auto at = [&](double dr, double ds) {
      Eigen::VectorXd y = x;
      y[r] += dr;
      y[s] += ds;
      return f(y);
    };
    if (r == s) {
      return (at(step, 0) - 2.0 * f(x) + at(-step, 0)) / (step * step);
    }
    return (at(step, step) - at(step, -step) - at(-step, step) +
            at(-step, -step)) /
           (4.0 * step * step);
  };
  return (4.0 * raw(h) - raw(2.0 * h)) / 3.0;
}

/*
 * Exact minimization over a cone with a two-dimensional nonlinear block:
 * b = r (cos t, sin t) and for fixed t the problem in s = r^2 >= 0 is a
 * one-sided least squares. A fine scan in t plus golden-section polish.
 */
double polar_oracle(const NonlinearImage &cone, const Eigen::MatrixXd &isqrt,
                    const Eigen::VectorXd &z) {
  const Eigen::MatrixXd image = isqrt * cone.linear_basis;
  const Eigen::MatrixXd q =
      Eigen::HouseholderQR<Eigen::MatrixXd>(image).householderQ() *
      Eigen::MatrixXd::Identity(image.rows(), image.cols());
  auto perp = [&](const Eigen::VectorXd &v) {
    return Eigen::VectorXd(v - q * (q.transpose() * v));
  };
  const Eigen::VectorXd u = perp(z);
  auto value = [&](double t) {
    const Eigen::Vector2d b(std::cos(t), std::sin(t));
    const Eigen::VectorXd w = perp(isqrt * cone.quadratic_part(b));
    const double uw = std::max(0.0, u.dot(w));
    return u.squaredNorm() - uw * uw / w.squaredNorm();
  };
  const int scan = 20000;
  int best_i = 0;
  double best = value(0.0);
  for (int i = 1; i < scan; ++i) {
    const double v = value(oracle::kPi * i / scan);
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  double lo = oracle::kPi * (best_i - 1) / scan;
  double hi = oracle::kPi * (best_i + 1) / scan;
  for (int it = 0; it < 100; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    (value(m1) < value(m2) ? hi : lo) = value(m1) < value(m2) ? m2 : m1;
  }
  return std::min(best, value(0.5 * (lo + hi)));
}

} // namespace

TEST(EfaCones, NullRankAndSmallJRejected) {
  EXPECT_THROW(cone_efa_null(Eigen::Vector2d(1.0, 0.5)), LrtError);
  const LinearSubspace three = cone_efa_null(efa_loadings().head(3));
  EXPECT_EQ(three.basis.rows(), 6);
  EXPECT_EQ(numeric_rank(three.basis), 6);
  const LinearSubspace six = cone_efa_null(efa_loadings());
  EXPECT_EQ(six.basis.rows(), 21);
  EXPECT_EQ(numeric_rank(six.basis), 12);
}

TEST(EfaCones, AltQuadraticPartIsOuterProduct) {
  const NonlinearImage cone = cone_efa_alt(efa_loadings());
  EXPECT_EQ(cone.nonlinear_dims(), 5);
  Eigen::VectorXd b(5);
  b << 0.3, -1.2, 0.7, 2.0, -0.4;
  Eigen::VectorXd b2(6);
  b2 << 0.0, b;
  const Eigen::VectorXd expected = half_vec(b2 * b2.transpose());
  EXPECT_LT((cone.quadratic_part(b) - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(EfaCones, ZeroNonlinearSliceIsTheNullCone) {
  const NonlinearImage alt = cone_efa_alt(efa_loadings());
  const LinearSubspace null = cone_efa_null(efa_loadings());
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Eigen::VectorXd c(12);
  for (auto &v : c) {
    v = normal(rng);
  }
  EXPECT_LT((alt.map(c, Eigen::VectorXd::Zero(5)) - null.basis * c)
                .cwiseAbs()
                .maxCoeff(),
            1e-14);
}

TEST(IfaCones, NullRankAndDegenerateDiscrimination) {
  const LinearSubspace null =
      cone_ifa_null(ifa_easiness(), ifa_discrimination(), default_rule(1));
  EXPECT_EQ(null.basis.rows(), 63);
  EXPECT_EQ(numeric_rank(null.basis), 12);
  try {
    cone_ifa_null(ifa_easiness(), Eigen::VectorXd::Zero(6), default_rule(1));
    FAIL();
  } catch (const LrtError &e) {
    EXPECT_EQ(e.code(), ErrorCode::RankDeficientBasis);
  }
}

TEST(IfaCones, ScoresSumToZeroOverAllPatterns) {
  IfaParams p;
  p.easiness = ifa_easiness();
  p.discrimination_1 = ifa_discrimination();
  const IfaPatternJacobian pj = ifa_pattern_jacobian(p, default_rule(1));
  ASSERT_EQ(pj.jacobian.rows(), 64);
  EXPECT_LT(pj.jacobian.colwise().sum().cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT(std::abs(pj.probs.sum() - 1.0), 1e-13);
}

TEST(IfaCones, CurvatureMatricesSymmetricAndSumToZero) {
  const auto h = ifa_curvature_matrices(ifa_easiness(),
                                        ifa_discrimination(), default_rule(1));
  ASSERT_EQ(h.size(), 64U);
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(6, 6);
  for (const auto &m : h) {
    EXPECT_EQ((m - m.transpose()).cwiseAbs().maxCoeff(), 0.0);
    total += m;
  }
  EXPECT_LT(total.cwiseAbs().maxCoeff(), 1e-13);
}

TEST(IfaCones, CurvatureMatchesSecondDerivativeOfPatternProbability) {
  const Eigen::Vector2d d(-0.4, 0.3);
  const Eigen::Vector2d a(0.9, 1.4);
  const auto h = ifa_curvature_matrices(d, a, default_rule(1));
  // The second derivative in a2 at a2 = 0 equals E_xi[Hessian of the
  // conditional pattern likelihood in the logits], since E[xi2^2] = 1.
  for (unsigned x = 0; x < 4; ++x) {
    auto lik = [x](const Eigen::VectorXd &eta) {
      double out = 1.0;
      for (Eigen::Index j = 0; j < eta.size(); ++j) {
        const double p = oracle::logistic(eta[j]);
        out *= ((x >> j) & 1U) ? p : 1.0 - p;
      }
      return out;
    };
    for (Eigen::Index r = 0; r < 2; ++r) {
      for (Eigen::Index s = 0; s < 2; ++s) {
        const double expected = oracle::trapezoid_normal(
            [&](double xi) {
              const Eigen::VectorXd eta = d + a * xi;
              return second_partial(lik, eta, r, s, 1e-3);
            },
            -9.0, 9.0, 20000);
        EXPECT_NEAR(h[x](r, s), expected, 1e-8) << x << " " << r << s;
      }
    }
  }
}

TEST(ReCones, BetweenDirectionOutsideNullSpan) {
  const LinearSubspace null = cone_re_null(5);
  const HalfSpaceCone alt = cone_re_alt(5);
  Eigen::MatrixXd joint(null.basis.rows(), 3);
  joint << null.basis, alt.ray;
  EXPECT_EQ(numeric_rank(null.basis), 2);
  EXPECT_EQ(numeric_rank(joint), 3);
  EXPECT_THROW(cone_re_null(0), LrtError);
}

TEST(ReCones, MixtureReductionRecognized) {
  const int j = 5;
  const Eigen::MatrixXd cov = 1.3 * Eigen::MatrixXd::Identity(j, j);
  const Eigen::MatrixXd isqrt = sqrt_psd(info_re_saturated({half_vec(cov)}));
  const auto reduction =
      mixture_chi2_reduction(cone_re_null(j), cone_re_alt(j), isqrt);
  ASSERT_TRUE(reduction.has_value());
  EXPECT_NEAR(reduction->direction.norm(), 1.0, 1e-14);

  // The reduction agrees with two explicit projections.
  std::mt19937_64 rng(6);
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd z = standard_normal_vector(isqrt.rows(), rng);
    const double diff = cone_minimize(cone_re_null(j), z, isqrt).value -
                        cone_minimize(cone_re_alt(j), z, isqrt).value;
    const double w = reduction->direction.dot(z);
    EXPECT_NEAR(diff, w >= 0.0 ? w * w : 0.0, 1e-10);
  }
}

TEST(ReCones, MixtureReductionRejectsOtherPairs) {
  const Eigen::VectorXd a = efa_loadings();
  const Eigen::MatrixXd isqrt = efa_isqrt(6);
  EXPECT_FALSE(
      mixture_chi2_reduction(cone_efa_null(a), cone_efa_alt(a), isqrt));
  HalfSpaceCone shifted = cone_re_alt(4);
  shifted.linear_basis.col(1) *= 2.0;
  const Eigen::MatrixXd re_isqrt = Eigen::MatrixXd::Identity(11, 11);
  EXPECT_FALSE(mixture_chi2_reduction(cone_re_null(4), shifted, re_isqrt));
}

TEST(ConeMinimize, TrivialCones) {
  const Eigen::Vector2d z(-1.0, 1.0);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_NEAR(cone_minimize(LinearSubspace{id}, z, id).value, 0.0, 1e-15);
  EXPECT_NEAR(cone_minimize(LinearSubspace{Eigen::MatrixXd(2, 0)}, z, id).value,
              2.0, 1e-15);
  const HalfSpaceCone ray{Eigen::MatrixXd(2, 0), Eigen::Vector2d(1.0, 0.0)};
  EXPECT_NEAR(cone_minimize(ray, z, id).value, 2.0, 1e-15);
  const HalfSpaceCone half{Eigen::Vector2d(0.0, 1.0), Eigen::Vector2d(1.0, 0.0)};
  EXPECT_NEAR(cone_minimize(half, z, id).value, 1.0, 1e-15);
  EXPECT_NEAR(cone_minimize(half, Eigen::Vector2d(1.0, 1.0), id).value, 0.0,
              1e-15);
  EXPECT_THROW(cone_minimize(half, Eigen::Vector3d::Zero(), id), LrtError);
}

TEST(ConeMinimize, LinearResidualIsOrthogonal) {
  const LinearSubspace cone = cone_efa_null(efa_loadings());
  const Eigen::MatrixXd isqrt = efa_isqrt(6);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd z = standard_normal_vector(21, rng);
    const ConeMinResult res = cone_minimize(cone, z, isqrt);
    const Eigen::VectorXd fitted = isqrt * cone.basis * res.minimizer_params;
    const Eigen::VectorXd resid = z - fitted;
    EXPECT_NEAR(res.value, resid.squaredNorm(), 1e-10);
    EXPECT_NEAR(z.squaredNorm(), res.value + fitted.squaredNorm(), 1e-9);
    EXPECT_LT((cone.basis.transpose() * isqrt * resid).cwiseAbs().maxCoeff(),
              1e-9);
  }
}

TEST(ConeMinimize, AlternativeNeverAboveNullAndMinimizerIsConsistent) {
  const Eigen::MatrixXd e_isqrt = efa_isqrt(6);
  const Eigen::MatrixXd i_isqrt = ifa_isqrt(6);
  const NonlinearImage efa_alt = cone_efa_alt(efa_loadings());
  const NonlinearImage ifa_alt = cone_ifa_alt(
      ifa_easiness(), ifa_discrimination(), default_rule(1));
  const LinearSubspace efa_null{efa_alt.linear_basis};
  const LinearSubspace ifa_null{ifa_alt.linear_basis};
  std::mt19937_64 rng(12);
  for (int i = 0; i < 30; ++i) {
    const Eigen::VectorXd ze = standard_normal_vector(21, rng);
    const ConeMinResult re = cone_minimize(efa_alt, ze, e_isqrt, {}, i);
    EXPECT_LE(re.value, cone_minimize(efa_null, ze, e_isqrt).value + 1e-12);
    const Eigen::VectorXd tau = efa_alt.map(re.minimizer_params.head(12),
                                            re.minimizer_params.tail(5));
    EXPECT_NEAR((ze - e_isqrt * tau).squaredNorm(), re.value, 1e-8);

    const Eigen::VectorXd zi = standard_normal_vector(63, rng);
    const ConeMinResult ri = cone_minimize(ifa_alt, zi, i_isqrt, {}, i);
    EXPECT_LE(ri.value, cone_minimize(ifa_null, zi, i_isqrt).value + 1e-12);
  }
}

TEST(ConeMinimize, ConeMembersProjectToZeroAtEveryScale) {
  const NonlinearImage cone = cone_efa_alt(efa_loadings());
  const Eigen::MatrixXd isqrt = efa_isqrt(6);
  std::mt19937_64 rng(21);
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd c = standard_normal_vector(12, rng);
    const Eigen::VectorXd b = standard_normal_vector(5, rng);
    for (double scale : {0.01, 1.0, 30.0}) {
      const Eigen::VectorXd tau = cone.map(scale * c, std::sqrt(scale) * b);
      EXPECT_TRUE(tau.isApprox(scale * cone.map(c, b), 1e-12));
      const Eigen::VectorXd z = isqrt * tau;
      EXPECT_LT(cone_minimize(cone, z, isqrt, {}, i).value,
                1e-8 * (1.0 + z.squaredNorm()))
          << scale;
    }
  }
}

TEST(ConeMinimize, MatchesPolarOracleEfaThreeItems) {
  const NonlinearImage cone = cone_efa_alt(efa_loadings().head(3));
  const Eigen::MatrixXd isqrt = efa_isqrt(3);
  std::mt19937_64 rng(30);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd z = standard_normal_vector(6, rng);
    const double lib = cone_minimize(cone, z, isqrt, {}, i).value;
    const double exact = polar_oracle(cone, isqrt, z);
    EXPECT_NEAR(lib, exact, 1e-3) << i;
    EXPECT_GE(lib, exact - 1e-9) << i;
  }
}

TEST(ConeMinimize, MatchesPolarOracleIfaThreeItems) {
  const NonlinearImage cone = cone_ifa_alt(
      ifa_easiness().head(3), ifa_discrimination().head(3),
      default_rule(1));
  const Eigen::MatrixXd isqrt = ifa_isqrt(3);
  std::mt19937_64 rng(31);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd z = standard_normal_vector(7, rng);
    const double lib = cone_minimize(cone, z, isqrt, {}, i).value;
    const double exact = polar_oracle(cone, isqrt, z);
    EXPECT_NEAR(lib, exact, 1e-3) << i;
    EXPECT_GE(lib, exact - 1e-9) << i;
  }
}
