#ifndef LRTCONE_FISHER_HPP_
#define LRTCONE_FISHER_HPP_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lrtcone/model_zoo.hpp"
#include "lrtcone/quadrature.hpp"

namespace lrtcone {

constexpr double kRankTolerance = 1e-8;
constexpr double kSqrtClipTolerance = 1e-10;

/*
 * Per-observation expected Fisher information with its spectrum.
 * eigenvalues are sorted ascending; rank_estimate counts eigenvalues above
 * kRankTolerance * lambda_max.
 */
struct InfoMatrix {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd eigenvalues;
  Eigen::Index rank_estimate = 0;
  std::vector<std::string> layout;

  Eigen::Index size() const { return matrix.rows(); }
  double min_eigenvalue() const { return eigenvalues[0]; }
  double max_eigenvalue() const {
    return eigenvalues[eigenvalues.size() - 1];
  }
  /// lambda_min > tol * lambda_max.
  bool invertible(double tol = kRankTolerance) const;
};

InfoMatrix make_info(Eigen::MatrixXd matrix, std::vector<std::string> layout);

/// Over the half-vectorized covariance coordinates, J(J+1)/2 of them.
InfoMatrix info_saturated_gaussian(const SaturatedGaussianParams &theta_star);

/// Over the 2^J - 1 nonzero-pattern probabilities.
InfoMatrix
info_saturated_multinomial(const SaturatedMultinomialParams &theta_star);

/*
 * Multivariate normal with free mean: (rho(Sigma), beta0) coordinates. The
 * mean block is 1^T Sigma^-1 1 and the cross block is zero.
 */
InfoMatrix info_re_saturated(const SaturatedGaussianParams &theta_star);

/*
 * Exact information of a factor model in its own parameterization
 * (to_param_vector layout): Gaussian trace identity for EFA, pattern
 * enumeration for IFA using `quad` (defaults to the rule matching the number
 * of factors when empty).
 */
InfoMatrix info_submodel_numeric(const ModelParams &model,
                                 const QuadratureRule *quad = nullptr);

/// Symmetric PSD square root; eigenvalues below clip_tol * lambda_max -> 0.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd &matrix,
                         double clip_tol = kSqrtClipTolerance);
Eigen::MatrixXd sqrt_psd(const InfoMatrix &info,
                         double clip_tol = kSqrtClipTolerance);

} // namespace lrtcone

#endif /* LRTCONE_FISHER_HPP_ */
