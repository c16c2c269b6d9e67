#ifndef LRTCONE_OPTIM_HPP_
#define LRTCONE_OPTIM_HPP_

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace lrtcone {

struct BfgsOptions {
  int max_iter = 500;
  // Stop once max |gradient| falls below this.
  double grad_tol = 1e-6;
  // Also stop after this many consecutive steps with relative decrease below
  // value_tol.
  double value_tol = 1e-14;
  int stall_iters = 5;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd gradient;
  int iterations = 0;
  bool converged = false;
};

/*
 * Minimizes f with inverse-Hessian BFGS and Armijo backtracking. f has the
 * signature double(const Eigen::VectorXd &x, Eigen::VectorXd &grad) and may
 * return a non-finite value to mark x infeasible; the line search then
 * shrinks the step.
 */
template <typename F>
BfgsResult minimize_bfgs(F &&f, Eigen::VectorXd x0,
                         const BfgsOptions &options = BfgsOptions{}) {
  const Eigen::Index n = x0.size();
  BfgsResult result;
  result.x = std::move(x0);
  result.gradient.resize(n);
  result.value = f(result.x, result.gradient);
  if (!std::isfinite(result.value) || !result.gradient.allFinite()) {
    result.value = std::numeric_limits<double>::infinity();
    return result;
  }
  if (n == 0) {
    result.converged = true;
    return result;
  }

  Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd x_new(n), g_new(n), direction(n), s(n), y(n);
  bool fresh_hessian = true;
  int stalled = 0;

  for (int iter = 0; iter < options.max_iter; ++iter) {
    result.iterations = iter;
    if (result.gradient.lpNorm<Eigen::Infinity>() <= options.grad_tol) {
      result.converged = true;
      return result;
    }

    direction.noalias() = -inv_hessian * result.gradient;
    double slope = direction.dot(result.gradient);
    if (!(slope < 0.0)) {
      inv_hessian.setIdentity();
      direction = -result.gradient;
      slope = -result.gradient.squaredNorm();
      fresh_hessian = true;
    }

    double step = 1.0;
    if (fresh_hessian) {
      step = std::min(1.0, 1.0 / direction.lpNorm<Eigen::Infinity>());
    }

    double value_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int trial = 0; trial < 60; ++trial) {
      x_new = result.x + step * direction;
      value_new = f(x_new, g_new);
      if (std::isfinite(value_new) && g_new.allFinite() &&
          value_new <= result.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }

    if (!accepted) {
      if (fresh_hessian) {
        // Steepest descent cannot make progress: numerically stationary.
        result.converged =
            result.gradient.lpNorm<Eigen::Infinity>() <= 1e3 * options.grad_tol;
        return result;
      }
      inv_hessian.setIdentity();
      fresh_hessian = true;
      continue;
    }

    s = x_new - result.x;
    y = g_new - result.gradient;
    const double decrease = result.value - value_new;
    result.x = x_new;
    result.gradient = g_new;
    result.value = value_new;

    if (decrease <= options.value_tol * (1.0 + std::abs(value_new))) {
      if (++stalled >= options.stall_iters) {
        result.iterations = iter + 1;
        result.converged =
            result.gradient.lpNorm<Eigen::Infinity>() <= 1e3 * options.grad_tol;
        return result;
      }
    } else {
      stalled = 0;
    }

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh_hessian) {
        inv_hessian *= sy / y.squaredNorm();
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = inv_hessian * y;
      const double yhy = y.dot(hy);
      inv_hessian.noalias() +=
          rho * ((1.0 + rho * yhy) * s * s.transpose() -
                 hy * s.transpose() - s * hy.transpose());
      fresh_hessian = false;
    }
  }
  result.iterations = options.max_iter;
  result.converged =
      result.gradient.lpNorm<Eigen::Infinity>() <= options.grad_tol;
  return result;
}

} // namespace lrtcone

#endif /* LRTCONE_OPTIM_HPP_ */
