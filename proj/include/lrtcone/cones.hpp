#ifndef LRTCONE_CONES_HPP_
#define LRTCONE_CONES_HPP_

#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "lrtcone/quadrature.hpp"
#include "lrtcone/rng.hpp"

namespace lrtcone {

/// { basis * c : c in R^m }.
struct LinearSubspace {
  Eigen::MatrixXd basis;
};

/// { linear_basis * c + t * ray : c in R^m, t >= 0 }.
struct HalfSpaceCone {
  Eigen::MatrixXd linear_basis;
  Eigen::VectorXd ray;
};

/*
 * { linear_basis * c + q(b) : c in R^m, b in R^p } where coordinate i of q is
 * the quadratic form b^T Q_i b. Row i of quadratic_stack holds vec(Q_i)
 * (column-major, Q_i symmetric p x p).
 */
struct NonlinearImage {
  Eigen::MatrixXd linear_basis;
  Eigen::MatrixXd quadratic_stack;
  Eigen::Index nonlinear_dim = 0;

  Eigen::Index ambient_dim() const { return linear_basis.rows(); }
  Eigen::Index linear_dims() const { return linear_basis.cols(); }
  Eigen::Index nonlinear_dims() const { return nonlinear_dim; }

  Eigen::MatrixXd quadratic_form(Eigen::Index coordinate) const;
  Eigen::VectorXd quadratic_part(const Eigen::VectorXd &b) const;
  Eigen::VectorXd map(const Eigen::VectorXd &linear_coef,
                      const Eigen::VectorXd &b) const;
};

using TangentCone = std::variant<LinearSubspace, HalfSpaceCone, NonlinearImage>;

Eigen::Index ambient_dim(const TangentCone &cone);

/// Numeric column rank with relative tolerance.
Eigen::Index numeric_rank(const Eigen::MatrixXd &m, double rel_tol = 1e-10);

// ---------------------------------------------------------------------------
// Cone constructions for the three model families. All vectors live in the
// coordinates of the corresponding saturated model.
// ---------------------------------------------------------------------------

/*
 * One-factor EFA at Sigma* = a* a*^T + Delta*: span of rho(a* e_j^T + e_j
 * a*^T) and rho(e_j e_j^T), dimension 2J in R^{J(J+1)/2}.
 */
LinearSubspace cone_efa_null(const Eigen::VectorXd &a_star);

/// Adds the rho(b2 b2^T) term, b2 in R^J with its first coordinate zero.
NonlinearImage cone_efa_alt(const Eigen::VectorXd &a_star);

/*
 * One-factor IFA: span of the f_l and g_l vectors (derivatives of the
 * nonzero-pattern probabilities with respect to d_l and a_l1).
 */
LinearSubspace cone_ifa_null(const Eigen::VectorXd &d_star,
                             const Eigen::VectorXd &a_star,
                             const QuadratureRule &quad);

/// Adds b2^T H_x b2 per pattern, b2 with its first coordinate zero.
NonlinearImage cone_ifa_alt(const Eigen::VectorXd &d_star,
                            const Eigen::VectorXd &a_star,
                            const QuadratureRule &quad);

/// H_x for every pattern x in {0,1}^J (index = pattern), J x J each.
std::vector<Eigen::MatrixXd> ifa_curvature_matrices(
    const Eigen::VectorXd &d_star, const Eigen::VectorXd &a_star,
    const QuadratureRule &quad);

/*
 * Random intercept at Sigma* = s2 I in (rho(Sigma), beta0) coordinates:
 * c0 = mean direction, c2 = rho(I), c1 = rho(1 1^T).
 */
LinearSubspace cone_re_null(int n_items);
HalfSpaceCone cone_re_alt(int n_items);

// ---------------------------------------------------------------------------
// Projection objective min_{tau in T} || z - isqrt tau ||^2
// ---------------------------------------------------------------------------

struct ConeMinConfig {
  // Random starts for the nonlinear block, in addition to the zero start.
  int n_starts = 31;
  int max_iter = 200;
  double grad_tol = 1e-9;
};

struct ConeMinResult {
  double value = 0.0;
  // Linear coefficients followed by the nonlinear block (or the ray
  // coefficient for a half-space cone).
  Eigen::VectorXd minimizer_params;
  int n_starts_used = 1;
};

/*
 * A cone prepared against a fixed information square root so that repeated
 * minimizations (one per Monte Carlo draw) only pay for the z-dependent work.
 * Immutable after construction; minimize() may be called concurrently.
 */
class ConeProjector {
public:
  ConeProjector(const TangentCone &cone, const Eigen::MatrixXd &isqrt,
                const ConeMinConfig &config = ConeMinConfig{});

  ConeMinResult minimize(const Eigen::VectorXd &z, Rng &rng) const;

  /// Value only; skips recovering the linear coefficients.
  double value(const Eigen::VectorXd &z, Rng &rng) const;

  Eigen::Index ambient_dim() const { return ambient_dim_; }

private:
  struct LinearPart {
    Eigen::MatrixXd image;       // isqrt * basis
    Eigen::MatrixXd complement;  // orthonormal basis of span(image)^perp
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  };
  static LinearPart prepare_linear(const Eigen::MatrixXd &image);

  double nonlinear_minimize(const Eigen::VectorXd &u, double z_scale,
                            Rng &rng, Eigen::VectorXd *best_b,
                            int *starts_used) const;

  enum class Kind { Linear, HalfSpace, Nonlinear } kind_;
  Eigen::Index ambient_dim_ = 0;
  ConeMinConfig config_;
  Eigen::MatrixXd isqrt_;
  LinearPart linear_;
  // Half-space: the cone with the ray included.
  LinearPart with_ray_;
  Eigen::Index ray_index_ = 0;
  // Nonlinear: row i of reduced_stack is vec(K_i), the quadratic forms seen
  // through the orthogonal complement of the linear block.
  Eigen::MatrixXd quadratic_image_;  // isqrt * quadratic_stack
  Eigen::MatrixXd reduced_stack_;
  Eigen::Index p_ = 0;
};

ConeMinResult cone_minimize(const TangentCone &cone, const Eigen::VectorXd &z,
                            const Eigen::MatrixXd &isqrt,
                            const ConeMinConfig &config = ConeMinConfig{},
                            std::uint64_t seed = 0);

/*
 * Recognizes a linear null cone paired with a half-space alternative sharing
 * the same linear basis. Then the difference of the two projection values is
 * w^2 1{w >= 0} with w standard normal, whatever the information matrix.
 */
struct MixtureChi2Reduction {
  // Unit vector v (in z space) with difference = (v^T z)^2 1{v^T z >= 0}.
  Eigen::VectorXd direction;
};

std::optional<MixtureChi2Reduction>
mixture_chi2_reduction(const TangentCone &cone_null,
                       const TangentCone &cone_alt,
                       const Eigen::MatrixXd &isqrt);

} // namespace lrtcone

#endif /* LRTCONE_CONES_HPP_ */
