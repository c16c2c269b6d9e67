#include "lrtcone/reference_dist.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include <boost/math/special_functions/gamma.hpp>

#include "lrtcone/error.hpp"
#include "lrtcone/parallel.hpp"
#include "lrtcone/rng.hpp"

namespace lrtcone {

EmpiricalCDF::EmpiricalCDF(std::vector<double> values)
    : sorted_(std::move(values)) {
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCDF::cdf(double x) const {
  if (sorted_.empty()) {
    return 0.0;
  }
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) /
         static_cast<double>(sorted_.size());
}

double EmpiricalCDF::cdf_left(double x) const {
  if (sorted_.empty()) {
    return 0.0;
  }
  const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) /
         static_cast<double>(sorted_.size());
}

double EmpiricalCDF::quantile(double p) const {
  if (sorted_.empty()) {
    throw LrtError(ErrorCode::InvalidArgument, "quantile of an empty sample");
  }
  const double n = static_cast<double>(sorted_.size());
  auto index = static_cast<std::size_t>(std::ceil(p * n));
  index = std::clamp<std::size_t>(index, 1, sorted_.size());
  return sorted_[index - 1];
}

double EmpiricalCDF::mean() const {
  if (sorted_.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return std::accumulate(sorted_.begin(), sorted_.end(), 0.0) /
         static_cast<double>(sorted_.size());
}

void EmpiricalCDF::write_csv(std::ostream &out) const {
  out << "value,cdf\n" << std::setprecision(17);
  const double n = static_cast<double>(sorted_.size());
  for (std::size_t i = 0; i < sorted_.size(); ++i) {
    out << sorted_[i] << ',' << static_cast<double>(i + 1) / n << '\n';
  }
}

void EmpiricalCDF::write_csv(const std::string &path) const {
  std::ofstream out(path);
  if (!out) {
    throw LrtError(ErrorCode::InvalidArgument, "cannot write " + path);
  }
  write_csv(out);
}

double chi2_cdf(double df, double x) {
  if (!(df > 0.0)) {
    throw LrtError(ErrorCode::InvalidArgument, "df must be positive");
  }
  if (x <= 0.0) {
    return 0.0;
  }
  if (std::isinf(x)) {
    return 1.0;
  }
  return boost::math::gamma_p(0.5 * df, 0.5 * x);
}

double mixture_chi2_cdf(double x) {
  if (x < 0.0) {
    return 0.0;
  }
  // Phi(sqrt(x))
  return 0.5 * std::erfc(-std::sqrt(x) / std::sqrt(2.0));
}

double ks_distance(const EmpiricalCDF &a, const CdfFunction &b) {
  const auto &v = a.sorted_values();
  const double n = static_cast<double>(v.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    // Compare both sides of each jump; ties collapse onto the last index.
    // The left side uses b's left limit so that atoms in b (the mixture's
    // mass at zero) are matched rather than counted as a gap.
    if (i + 1 < v.size() && v[i + 1] == v[i]) {
      continue;
    }
    const double above = static_cast<double>(i + 1) / n;
    const double below = a.cdf_left(v[i]);
    const double fb_left =
        b(std::nextafter(v[i], -std::numeric_limits<double>::infinity()));
    worst = std::max(
        {worst, std::abs(above - b(v[i])), std::abs(below - fb_left)});
  }
  return std::min(worst, 1.0);
}

double ks_distance(const EmpiricalCDF &a, const EmpiricalCDF &b) {
  double worst = 0.0;
  for (const auto *sample : {&a, &b}) {
    for (const double x : sample->sorted_values()) {
      worst = std::max({worst, std::abs(a.cdf(x) - b.cdf(x)),
                        std::abs(a.cdf_left(x) - b.cdf_left(x))});
    }
  }
  return worst;
}

namespace {

Eigen::MatrixXd checked_root(const InfoMatrix &info) {
  if (!info.invertible(kRankTolerance)) {
    throw LrtError(ErrorCode::SingularInfo,
                   "information matrix is singular at the true parameter");
  }
  return sqrt_psd(info);
}

} // namespace

EmpiricalCDF sample_theorem1(const TangentCone &cone_null,
                             const InfoMatrix &info,
                             const SamplerConfig &config) {
  const Eigen::MatrixXd isqrt = checked_root(info);
  const ConeProjector projector(cone_null, isqrt, config.cone);
  const Eigen::Index k = projector.ambient_dim();
  std::vector<double> draws(config.n_draws);
  parallel_for(config.n_draws, config.workers, [&](std::size_t i) {
    Rng rng = child_rng(config.seed, "refdist", i);
    const Eigen::VectorXd z = standard_normal_vector(k, rng);
    draws[i] = projector.value(z, rng);
  });
  return EmpiricalCDF(std::move(draws));
}

EmpiricalCDF sample_theorem2(const TangentCone &cone_null,
                             const TangentCone &cone_alt,
                             const InfoMatrix &info,
                             const SamplerConfig &config) {
  const Eigen::MatrixXd isqrt = checked_root(info);
  std::vector<double> draws(config.n_draws);
  const Eigen::Index k = isqrt.rows();

  if (config.allow_closed_form) {
    if (const auto reduction =
            mixture_chi2_reduction(cone_null, cone_alt, isqrt)) {
      parallel_for(config.n_draws, config.workers, [&](std::size_t i) {
        Rng rng = child_rng(config.seed, "refdist", i);
        const Eigen::VectorXd z = standard_normal_vector(k, rng);
        const double w = reduction->direction.dot(z);
        draws[i] = w >= 0.0 ? w * w : 0.0;
      });
      return EmpiricalCDF(std::move(draws));
    }
  }

  const ConeProjector null_projector(cone_null, isqrt, config.cone);
  const ConeProjector alt_projector(cone_alt, isqrt, config.cone);
  parallel_for(config.n_draws, config.workers, [&](std::size_t i) {
    Rng rng = child_rng(config.seed, "refdist", i);
    const Eigen::VectorXd z = standard_normal_vector(k, rng);
    const double diff =
        null_projector.value(z, rng) - alt_projector.value(z, rng);
    if (diff < -1e-6) {
      throw LrtError(ErrorCode::NegativeDraw,
                     "alternative projection exceeded the null projection");
    }
    draws[i] = std::max(diff, 0.0);
  });
  return EmpiricalCDF(std::move(draws));
}

} // namespace lrtcone
