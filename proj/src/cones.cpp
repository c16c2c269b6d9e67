#include "lrtcone/cones.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "lrtcone/error.hpp"
#include "lrtcone/linalg.hpp"
#include "lrtcone/model_zoo.hpp"
#include "lrtcone/optim.hpp"

namespace lrtcone {

namespace {

void require_rank(const Eigen::MatrixXd &basis, Eigen::Index expected,
                  const std::string &what) {
  const Eigen::Index rank = numeric_rank(basis);
  if (rank < expected) {
    throw LrtError(ErrorCode::RankDeficientBasis,
                   what + ": basis rank " + std::to_string(rank) +
                       " below " + std::to_string(expected));
  }
}

IfaParams one_factor(const Eigen::VectorXd &d_star,
                     const Eigen::VectorXd &a_star) {
  IfaParams p;
  p.easiness = d_star;
  p.discrimination_1 = a_star;
  p.validate();
  if (p.n_items() > 12) {
    throw LrtError(ErrorCode::InvalidArgument,
                   "pattern-space cones are limited to J <= 12");
  }
  return p;
}

// Quadratic forms over b2[2..J]: drop the first row and column of a J x J
// form and vectorize.
Eigen::RowVectorXd reduced_form(const Eigen::MatrixXd &full) {
  const Eigen::Index p = full.rows() - 1;
  Eigen::MatrixXd sub = full.bottomRightCorner(p, p);
  return Eigen::Map<const Eigen::RowVectorXd>(sub.data(), p * p);
}

} // namespace

Eigen::MatrixXd NonlinearImage::quadratic_form(Eigen::Index coordinate) const {
  const Eigen::RowVectorXd row = quadratic_stack.row(coordinate);
  return Eigen::Map<const Eigen::MatrixXd>(row.data(), nonlinear_dim,
                                           nonlinear_dim);
}

Eigen::VectorXd NonlinearImage::quadratic_part(const Eigen::VectorXd &b) const {
  const Eigen::MatrixXd outer = b * b.transpose();
  return quadratic_stack *
         Eigen::Map<const Eigen::VectorXd>(outer.data(), outer.size());
}

Eigen::VectorXd NonlinearImage::map(const Eigen::VectorXd &linear_coef,
                                    const Eigen::VectorXd &b) const {
  return linear_basis * linear_coef + quadratic_part(b);
}

Eigen::Index ambient_dim(const TangentCone &cone) {
  return std::visit(
      [](const auto &c) -> Eigen::Index {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, LinearSubspace>) {
          return c.basis.rows();
        } else if constexpr (std::is_same_v<T, HalfSpaceCone>) {
          return c.ray.size();
        } else {
          return c.ambient_dim();
        }
      },
      cone);
}

Eigen::Index numeric_rank(const Eigen::MatrixXd &m, double rel_tol) {
  if (m.cols() == 0 || m.rows() == 0) {
    return 0;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(rel_tol);
  return qr.rank();
}

// ---------------------------------------------------------------------------

LinearSubspace cone_efa_null(const Eigen::VectorXd &a_star) {
  const Eigen::Index n = a_star.size();
  const Eigen::Index k = half_vec_size(n);
  if (2 * n > k) {
    throw LrtError(ErrorCode::RankDeficientBasis,
                   "one-factor tangent space needs J >= 3 (2J <= J(J+1)/2)");
  }
  Eigen::MatrixXd basis(k, 2 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    m.row(j) += a_star.transpose();
    m.col(j) += a_star;
    basis.col(j) = half_vec(m);
    basis.col(n + j) = half_vec(symmetric_unit(n, j, j) / 2.0);
  }
  require_rank(basis, 2 * n, "one-factor EFA cone");
  return {basis};
}

NonlinearImage cone_efa_alt(const Eigen::VectorXd &a_star) {
  const Eigen::Index n = a_star.size();
  NonlinearImage cone;
  cone.linear_basis = cone_efa_null(a_star).basis;
  cone.nonlinear_dim = n - 1;
  const Eigen::Index k = half_vec_size(n);
  cone.quadratic_stack = Eigen::MatrixXd::Zero(k, (n - 1) * (n - 1));
  // rho(b2 b2^T) coordinate (i, j) is b2_i b2_j.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
      q(i, j) += 0.5;
      q(j, i) += 0.5;
      cone.quadratic_stack.row(half_vec_index(n, i, j)) = reduced_form(q);
    }
  }
  return cone;
}

LinearSubspace cone_ifa_null(const Eigen::VectorXd &d_star,
                             const Eigen::VectorXd &a_star,
                             const QuadratureRule &quad) {
  const IfaParams p = one_factor(d_star, a_star);
  const IfaPatternJacobian pj = ifa_pattern_jacobian(p, quad);
  // The all-zero pattern is not a coordinate of the saturated model.
  LinearSubspace cone{pj.jacobian.bottomRows(pj.jacobian.rows() - 1)};
  require_rank(cone.basis, 2 * p.n_items(), "one-factor IFA cone");
  return cone;
}

std::vector<Eigen::MatrixXd> ifa_curvature_matrices(
    const Eigen::VectorXd &d_star, const Eigen::VectorXd &a_star,
    const QuadratureRule &quad) {
  const IfaParams p = one_factor(d_star, a_star);
  const int n = p.n_items();
  const Eigen::Index n_patterns = Eigen::Index{1} << n;
  std::vector<Eigen::MatrixXd> h(static_cast<std::size_t>(n_patterns),
                                 Eigen::MatrixXd::Zero(n, n));
  Eigen::VectorXd prob(n);
  Eigen::VectorXd resid(n);
  for (Eigen::Index q = 0; q < quad.size(); ++q) {
    const double xi = quad.nodes(0, q);
    for (int j = 0; j < n; ++j) {
      prob[j] = logistic(p.easiness[j] + p.discrimination_1[j] * xi);
    }
    const Eigen::VectorXd var = prob.array() * (1.0 - prob.array());
    for (Eigen::Index x = 0; x < n_patterns; ++x) {
      double lik = 1.0;
      for (int j = 0; j < n; ++j) {
        const bool on = pattern_bit(static_cast<std::uint32_t>(x), j);
        lik *= on ? prob[j] : 1.0 - prob[j];
        resid[j] = (on ? 1.0 : 0.0) - prob[j];
      }
      Eigen::MatrixXd term = resid * resid.transpose();
      term.diagonal() -= var;
      h[static_cast<std::size_t>(x)] += quad.weights[q] * lik * term;
    }
  }
  return h;
}

NonlinearImage cone_ifa_alt(const Eigen::VectorXd &d_star,
                            const Eigen::VectorXd &a_star,
                            const QuadratureRule &quad) {
  const Eigen::Index n = d_star.size();
  NonlinearImage cone;
  cone.linear_basis = cone_ifa_null(d_star, a_star, quad).basis;
  cone.nonlinear_dim = n - 1;
  const auto h = ifa_curvature_matrices(d_star, a_star, quad);
  const Eigen::Index k = cone.linear_basis.rows();
  cone.quadratic_stack.resize(k, (n - 1) * (n - 1));
  for (Eigen::Index x = 1; x <= k; ++x) {
    cone.quadratic_stack.row(x - 1) = reduced_form(h[static_cast<std::size_t>(x)]);
  }
  return cone;
}

namespace {

struct ReDirections {
  Eigen::VectorXd mean;      // c0
  Eigen::VectorXd between;   // c1
  Eigen::VectorXd within;    // c2
};

ReDirections re_directions(int n_items) {
  const Eigen::Index n = n_items;
  const Eigen::Index k = half_vec_size(n) + 1;
  ReDirections d;
  d.mean = Eigen::VectorXd::Zero(k);
  d.mean[k - 1] = 1.0;
  d.between = Eigen::VectorXd::Zero(k);
  d.between.head(k - 1) = half_vec(Eigen::MatrixXd::Ones(n, n));
  d.within = Eigen::VectorXd::Zero(k);
  d.within.head(k - 1) = half_vec(Eigen::MatrixXd::Identity(n, n));
  return d;
}

} // namespace

LinearSubspace cone_re_null(int n_items) {
  if (n_items < 1) {
    throw LrtError(ErrorCode::InvalidArgument, "group size must be positive");
  }
  const ReDirections d = re_directions(n_items);
  Eigen::MatrixXd basis(d.mean.size(), 2);
  basis << d.mean, d.within;
  return {basis};
}

HalfSpaceCone cone_re_alt(int n_items) {
  const ReDirections d = re_directions(n_items);
  return {cone_re_null(n_items).basis, d.between};
}

// ---------------------------------------------------------------------------

ConeProjector::LinearPart
ConeProjector::prepare_linear(const Eigen::MatrixXd &image) {
  LinearPart part;
  part.image = image;
  part.complement = orthogonal_complement(image);
  if (image.cols() > 0) {
    part.qr.compute(image);
  }
  return part;
}

ConeProjector::ConeProjector(const TangentCone &cone,
                             const Eigen::MatrixXd &isqrt,
                             const ConeMinConfig &config)
    : ambient_dim_(lrtcone::ambient_dim(cone)), config_(config),
      isqrt_(isqrt) {
  if (isqrt.rows() != ambient_dim_ || isqrt.cols() != ambient_dim_) {
    throw LrtError(ErrorCode::InvalidArgument,
                   "information root does not match the cone dimension");
  }
  if (const auto *lin = std::get_if<LinearSubspace>(&cone)) {
    kind_ = Kind::Linear;
    linear_ = prepare_linear(isqrt * lin->basis);
  } else if (const auto *half = std::get_if<HalfSpaceCone>(&cone)) {
    kind_ = Kind::HalfSpace;
    linear_ = prepare_linear(isqrt * half->linear_basis);
    Eigen::MatrixXd full(ambient_dim_, half->linear_basis.cols() + 1);
    full << half->linear_basis, half->ray;
    with_ray_ = prepare_linear(isqrt * full);
    ray_index_ = half->linear_basis.cols();
  } else {
    const auto &image = std::get<NonlinearImage>(cone);
    kind_ = Kind::Nonlinear;
    linear_ = prepare_linear(isqrt * image.linear_basis);
    p_ = image.nonlinear_dims();
    quadratic_image_ = isqrt * image.quadratic_stack;
    reduced_stack_ = linear_.complement.transpose() * quadratic_image_;
  }
}

double ConeProjector::nonlinear_minimize(const Eigen::VectorXd &u,
                                         double z_scale, Rng &rng,
                                         Eigen::VectorXd *best_b,
                                         int *starts_used) const {
  const Eigen::Index p = p_;
  auto objective = [&](const Eigen::VectorXd &b, Eigen::VectorXd &grad) {
    Eigen::MatrixXd outer = b * b.transpose();
    const Eigen::VectorXd resid =
        u - reduced_stack_ *
                Eigen::Map<const Eigen::VectorXd>(outer.data(), p * p);
    const Eigen::VectorXd m_vec = reduced_stack_.transpose() * resid;
    const Eigen::Map<const Eigen::MatrixXd> m(m_vec.data(), p, p);
    grad = -4.0 * (m * b);
    return resid.squaredNorm();
  };

  // Zero start: b = 0 is stationary, so its value is the linear-block value.
  double best = u.squaredNorm();
  if (best_b != nullptr) {
    *best_b = Eigen::VectorXd::Zero(p);
  }
  int used = 1;

  BfgsOptions options;
  options.max_iter = config_.max_iter;
  options.grad_tol = config_.grad_tol * (1.0 + best);
  std::normal_distribution<double> normal(0.0, z_scale);
  for (int s = 0; s < config_.n_starts; ++s) {
    Eigen::VectorXd b0(p);
    for (Eigen::Index i = 0; i < p; ++i) {
      b0[i] = normal(rng);
    }
    const BfgsResult run = minimize_bfgs(objective, std::move(b0), options);
    ++used;
    if (std::isfinite(run.value) && run.value < best) {
      best = run.value;
      if (best_b != nullptr) {
        *best_b = run.x;
      }
    }
  }
  if (starts_used != nullptr) {
    *starts_used = used;
  }
  return best;
}

double ConeProjector::value(const Eigen::VectorXd &z, Rng &rng) const {
  switch (kind_) {
  case Kind::Linear:
    return (linear_.complement.transpose() * z).squaredNorm();
  case Kind::HalfSpace: {
    if (with_ray_.qr.solve(z)[ray_index_] >= 0.0) {
      return (with_ray_.complement.transpose() * z).squaredNorm();
    }
    return (linear_.complement.transpose() * z).squaredNorm();
  }
  case Kind::Nonlinear: {
    const double z_scale =
        z.norm() / std::sqrt(static_cast<double>(ambient_dim_));
    return nonlinear_minimize(linear_.complement.transpose() * z, z_scale,
                              rng, nullptr, nullptr);
  }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

ConeMinResult ConeProjector::minimize(const Eigen::VectorXd &z,
                                      Rng &rng) const {
  if (z.size() != ambient_dim_) {
    throw LrtError(ErrorCode::InvalidArgument, "z has the wrong dimension");
  }
  ConeMinResult result;
  auto linear_coef = [](const LinearPart &part, const Eigen::VectorXd &y) {
    return part.image.cols() > 0 ? Eigen::VectorXd(part.qr.solve(y))
                                 : Eigen::VectorXd(0);
  };
  switch (kind_) {
  case Kind::Linear:
    result.value = (linear_.complement.transpose() * z).squaredNorm();
    result.minimizer_params = linear_coef(linear_, z);
    break;
  case Kind::HalfSpace: {
    Eigen::VectorXd coef = with_ray_.qr.solve(z);
    if (coef[ray_index_] >= 0.0) {
      result.value = (with_ray_.complement.transpose() * z).squaredNorm();
    } else {
      // One inequality: if it binds, the optimum lies on the linear part.
      result.value = (linear_.complement.transpose() * z).squaredNorm();
      coef.head(ray_index_) = linear_coef(linear_, z);
      coef[ray_index_] = 0.0;
    }
    result.minimizer_params = coef;
    break;
  }
  case Kind::Nonlinear: {
    const double z_scale =
        z.norm() / std::sqrt(static_cast<double>(ambient_dim_));
    Eigen::VectorXd b;
    result.value =
        nonlinear_minimize(linear_.complement.transpose() * z, z_scale, rng,
                           &b, &result.n_starts_used);
    const Eigen::MatrixXd outer = b * b.transpose();
    const Eigen::VectorXd y =
        z - quadratic_image_ *
                Eigen::Map<const Eigen::VectorXd>(outer.data(), outer.size());
    const Eigen::VectorXd c = linear_coef(linear_, y);
    result.minimizer_params.resize(c.size() + b.size());
    result.minimizer_params << c, b;
    break;
  }
  }
  return result;
}

ConeMinResult cone_minimize(const TangentCone &cone, const Eigen::VectorXd &z,
                            const Eigen::MatrixXd &isqrt,
                            const ConeMinConfig &config, std::uint64_t seed) {
  const ConeProjector projector(cone, isqrt, config);
  Rng rng(seed);
  return projector.minimize(z, rng);
}

std::optional<MixtureChi2Reduction>
mixture_chi2_reduction(const TangentCone &cone_null,
                       const TangentCone &cone_alt,
                       const Eigen::MatrixXd &isqrt) {
  const auto *null = std::get_if<LinearSubspace>(&cone_null);
  const auto *alt = std::get_if<HalfSpaceCone>(&cone_alt);
  if (null == nullptr || alt == nullptr) {
    return std::nullopt;
  }
  if (null->basis.rows() != alt->linear_basis.rows() ||
      null->basis.cols() != alt->linear_basis.cols() ||
      !null->basis.isApprox(alt->linear_basis, 1e-12)) {
    return std::nullopt;
  }
  const Eigen::MatrixXd complement = orthogonal_complement(isqrt * null->basis);
  const Eigen::VectorXd ray_perp =
      complement * (complement.transpose() * (isqrt * alt->ray));
  const double norm = ray_perp.norm();
  if (!(norm > 0.0)) {
    return std::nullopt;
  }
  return MixtureChi2Reduction{ray_perp / norm};
}

} // namespace lrtcone
