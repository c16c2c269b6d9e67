#include "lrtcone/fisher.hpp"

#include <cmath>
#include <utility>

#include "lrtcone/error.hpp"
#include "lrtcone/linalg.hpp"

namespace lrtcone {

namespace {

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd &sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw LrtError(ErrorCode::NonSPD, "covariance is not positive definite");
  }
  return llt.solve(Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
}

/*
 * 1/2 tr(W E_a W E_b) over the half-vectorized coordinates, where E_(ij) is
 * e_i e_j^T + e_j e_i^T (or e_i e_i^T on the diagonal).
 */
Eigen::MatrixXd gaussian_covariance_info(const Eigen::MatrixXd &w) {
  const Eigen::Index dim = w.rows();
  const Eigen::Index k = half_vec_size(dim);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> coords;
  coords.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i; j < dim; ++j) {
      coords.emplace_back(i, j);
    }
  }
  // tr(W e_p e_q^T W e_r e_s^T) = W_sp W_qr
  auto unit_trace = [&](Eigen::Index p, Eigen::Index q, Eigen::Index r,
                        Eigen::Index s) { return w(s, p) * w(q, r); };

  Eigen::MatrixXd info(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const auto [i, j] = coords[static_cast<std::size_t>(a)];
    for (Eigen::Index b = a; b < k; ++b) {
      const auto [r, s] = coords[static_cast<std::size_t>(b)];
      double t = unit_trace(i, j, r, s);
      if (r != s) {
        t += unit_trace(i, j, s, r);
      }
      if (i != j) {
        t += unit_trace(j, i, r, s);
        if (r != s) {
          t += unit_trace(j, i, s, r);
        }
      }
      info(a, b) = 0.5 * t;
      info(b, a) = info(a, b);
    }
  }
  return info;
}

std::vector<std::string> covariance_layout(Eigen::Index dim) {
  SaturatedGaussianParams p{Eigen::VectorXd::Zero(half_vec_size(dim))};
  return to_param_vector(p).names;
}

} // namespace

bool InfoMatrix::invertible(double tol) const {
  return eigenvalues.size() > 0 && min_eigenvalue() > tol * max_eigenvalue();
}

InfoMatrix make_info(Eigen::MatrixXd matrix, std::vector<std::string> layout) {
  InfoMatrix info;
  info.matrix = std::move(matrix);
  info.layout = std::move(layout);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      info.matrix, Eigen::EigenvaluesOnly);
  info.eigenvalues = eig.eigenvalues();
  const double lambda_max =
      info.eigenvalues.size() > 0 ? info.eigenvalues.maxCoeff() : 0.0;
  info.rank_estimate =
      (info.eigenvalues.array() > kRankTolerance * lambda_max).count();
  return info;
}

InfoMatrix info_saturated_gaussian(const SaturatedGaussianParams &theta_star) {
  const Eigen::MatrixXd sigma = theta_star.covariance();
  return make_info(gaussian_covariance_info(spd_inverse(sigma)),
                   covariance_layout(sigma.rows()));
}

InfoMatrix
info_saturated_multinomial(const SaturatedMultinomialParams &theta_star) {
  theta_star.validate();
  const double zero_cell = theta_star.zero_pattern_prob();
  if (theta_star.probs.minCoeff() <= 1e-12 || zero_cell <= 1e-12) {
    throw LrtError(ErrorCode::DegenerateCell,
                   "cell probability too close to zero");
  }
  const Eigen::Index k = theta_star.probs.size();
  Eigen::MatrixXd info = Eigen::MatrixXd::Constant(k, k, 1.0 / zero_cell);
  info.diagonal() += theta_star.probs.cwiseInverse();
  return make_info(std::move(info), to_param_vector(theta_star).names);
}

InfoMatrix info_re_saturated(const SaturatedGaussianParams &theta_star) {
  const Eigen::MatrixXd sigma = theta_star.covariance();
  const Eigen::MatrixXd w = spd_inverse(sigma);
  const Eigen::Index k = half_vec_size(sigma.rows());
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(k + 1, k + 1);
  info.topLeftCorner(k, k) = gaussian_covariance_info(w);
  info(k, k) = w.sum();
  auto layout = covariance_layout(sigma.rows());
  layout.emplace_back("beta0");
  return make_info(std::move(info), std::move(layout));
}

InfoMatrix info_submodel_numeric(const ModelParams &model,
                                 const QuadratureRule *quad) {
  if (const auto *efa = std::get_if<EfaParams>(&model)) {
    efa->validate();
    const Eigen::Index n = efa->n_items();
    const Eigen::MatrixXd w = spd_inverse(efa_covariance(*efa));

    // dSigma/dtheta in the (delta, a1, a2[2..J]) order.
    std::vector<Eigen::MatrixXd> derivs;
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
      d(j, j) = 1.0;
      derivs.push_back(std::move(d));
    }
    auto loading_derivs = [&](const Eigen::VectorXd &a, Eigen::Index first) {
      for (Eigen::Index j = first; j < n; ++j) {
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
        d.row(j) += a.transpose();
        d.col(j) += a;
        derivs.push_back(std::move(d));
      }
    };
    loading_derivs(efa->loadings_1, 0);
    if (efa->loadings_2) {
      loading_derivs(*efa->loadings_2, 1);
    }

    const Eigen::Index k = static_cast<Eigen::Index>(derivs.size());
    std::vector<Eigen::MatrixXd> wd;
    wd.reserve(derivs.size());
    for (const auto &d : derivs) {
      wd.push_back(w * d);
    }
    Eigen::MatrixXd info(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = a; b < k; ++b) {
        const auto &wa = wd[static_cast<std::size_t>(a)];
        const auto &wb = wd[static_cast<std::size_t>(b)];
        info(a, b) = 0.5 * wa.cwiseProduct(wb.transpose()).sum();
        info(b, a) = info(a, b);
      }
    }
    return make_info(std::move(info), to_param_vector(*efa).names);
  }

  if (const auto *ifa = std::get_if<IfaParams>(&model)) {
    ifa->validate();
    const QuadratureRule &rule =
        quad != nullptr ? *quad : default_rule(ifa->n_factors());
    const IfaPatternJacobian pj = ifa_pattern_jacobian(*ifa, rule);
    const Eigen::MatrixXd scaled =
        pj.jacobian.array().colwise() / pj.probs.array().sqrt();
    Eigen::MatrixXd info = scaled.transpose() * scaled;
    return make_info(std::move(info), to_param_vector(*ifa).names);
  }

  throw LrtError(ErrorCode::InvalidArgument,
                 "submodel information is defined for factor models only");
}

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd &matrix, double clip_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix);
  Eigen::VectorXd values = eig.eigenvalues();
  const double lambda_max = values.cwiseAbs().maxCoeff();
  if (values.minCoeff() < -1e-8 * lambda_max) {
    throw LrtError(ErrorCode::NegativeEigen,
                   "matrix has a materially negative eigenvalue");
  }
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    values[i] = values[i] < clip_tol * lambda_max ? 0.0 : std::sqrt(values[i]);
  }
  const Eigen::MatrixXd &v = eig.eigenvectors();
  Eigen::MatrixXd root = v * values.asDiagonal() * v.transpose();
  // Exact symmetry for downstream solvers.
  return 0.5 * (root + root.transpose());
}

Eigen::MatrixXd sqrt_psd(const InfoMatrix &info, double clip_tol) {
  return sqrt_psd(info.matrix, clip_tol);
}

} // namespace lrtcone
