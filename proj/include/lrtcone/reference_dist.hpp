#ifndef LRTCONE_REFERENCE_DIST_HPP_
#define LRTCONE_REFERENCE_DIST_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "lrtcone/cones.hpp"
#include "lrtcone/fisher.hpp"

namespace lrtcone {

/*
 * Step CDF of a finite sample. cdf(x) = #{values <= x} / n and
 * quantile(p) = smallest sample value v with cdf(v) >= p.
 */
class EmpiricalCDF {
public:
  EmpiricalCDF() = default;
  explicit EmpiricalCDF(std::vector<double> values);

  double cdf(double x) const;
  /// #{values < x} / n.
  double cdf_left(double x) const;
  double quantile(double p) const;
  double operator()(double x) const { return cdf(x); }

  const std::vector<double> &sorted_values() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }
  bool empty() const { return sorted_.empty(); }
  double mean() const;

  /// Two-column CSV with header "value,cdf", one row per sample point.
  void write_csv(std::ostream &out) const;
  void write_csv(const std::string &path) const;

private:
  std::vector<double> sorted_;
};

using CdfFunction = std::function<double(double)>;

double chi2_cdf(double df, double x);

/// Law of w^2 1{w >= 0}, w ~ N(0, 1).
double mixture_chi2_cdf(double x);

/// Sup distance between a's step function and a continuous CDF.
double ks_distance(const EmpiricalCDF &a, const CdfFunction &b);

/// Exact two-sample sup distance.
double ks_distance(const EmpiricalCDF &a, const EmpiricalCDF &b);

struct SamplerConfig {
  std::size_t n_draws = 10000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  ConeMinConfig cone;
  // Use the closed form when the cones reduce to the mixture of chi-squares.
  bool allow_closed_form = true;
};

/*
 * Draws of min_{tau in T0} ||Z - I^{1/2} tau||^2, Z ~ N(0, I_k). Requires an
 * invertible information matrix (SingularInfo otherwise). Draw i uses the
 * stream keyed by (seed, "refdist", i).
 */
EmpiricalCDF sample_theorem1(const TangentCone &cone_null,
                             const InfoMatrix &info,
                             const SamplerConfig &config);

/*
 * Draws of the difference of the null and alternative projection values,
 * both evaluated at the same Z. Throws NegativeDraw if a draw falls below
 * -1e-6; smaller negative rounding is clamped to zero.
 */
EmpiricalCDF sample_theorem2(const TangentCone &cone_null,
                             const TangentCone &cone_alt,
                             const InfoMatrix &info,
                             const SamplerConfig &config);

} // namespace lrtcone

#endif /* LRTCONE_REFERENCE_DIST_HPP_ */
