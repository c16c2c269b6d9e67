// Brute-force reference computations shared by the unit tests. These are
// deliberately written without the library's fast paths.
#ifndef LRTCONE_TESTS_ORACLES_HPP_
#define LRTCONE_TESTS_ORACLES_HPP_

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

namespace oracle {

constexpr double kPi = 3.14159265358979323846;

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

/// Trapezoid rule for int_lo^hi f(x) phi(x) dx on n intervals.
inline double trapezoid_normal(const std::function<double(double)> &f,
                               double lo, double hi, long n) {
  const double h = (hi - lo) / static_cast<double>(n);
  double total = 0.5 * (f(lo) * normal_pdf(lo) + f(hi) * normal_pdf(hi));
  for (long i = 1; i < n; ++i) {
    const double x = lo + h * static_cast<double>(i);
    total += f(x) * normal_pdf(x);
  }
  return total * h;
}

/// Sum of log N(x_i; mean, cov) using an explicit inverse and determinant.
inline double dense_mvn_loglik(const Eigen::MatrixXd &cov,
                               const Eigen::VectorXd &mean,
                               const Eigen::MatrixXd &rows) {
  const Eigen::MatrixXd inv = cov.inverse();
  const double logdet = std::log(cov.determinant());
  const double dim = static_cast<double>(cov.rows());
  double total = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const Eigen::VectorXd r = rows.row(i).transpose() - mean;
    total += -0.5 * dim * std::log(2.0 * kPi) - 0.5 * logdet -
             0.5 * r.dot(inv * r);
  }
  return total;
}

/// Central differences with step h.
inline Eigen::VectorXd
fd_gradient(const std::function<double(const Eigen::VectorXd &)> &f,
            const Eigen::VectorXd &x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd up = x;
    Eigen::VectorXd down = x;
    up[i] += h;
    down[i] -= h;
    g[i] = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// P(pattern) for a one-factor 2PL model by trapezoid over [-8, 8].
inline double ifa_pattern_trapezoid(const Eigen::VectorXd &d,
                                    const Eigen::VectorXd &a,
                                    unsigned pattern, long n = 10000) {
  return trapezoid_normal(
      [&](double xi) {
        double lik = 1.0;
        for (Eigen::Index j = 0; j < d.size(); ++j) {
          const double p = logistic(d[j] + a[j] * xi);
          lik *= ((pattern >> j) & 1U) ? p : 1.0 - p;
        }
        return lik;
      },
      -8.0, 8.0, n);
}

/// Random symmetric positive definite matrix with eigenvalues >= floor.
template <typename Rng>
Eigen::MatrixXd random_spd(Eigen::Index n, Rng &rng, double floor = 0.5) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, j) = normal(rng);
    }
  }
  Eigen::MatrixXd m = a * a.transpose() / static_cast<double>(n);
  m.diagonal().array() += floor;
  return m;
}

} // namespace oracle

#endif /* LRTCONE_TESTS_ORACLES_HPP_ */
