#include "lrtcone/quadrature.hpp"

#include <cmath>
#include <string>

#include "lrtcone/error.hpp"

namespace lrtcone {

QuadratureRule gauss_hermite(int n_nodes) {
  if (n_nodes < 2 || n_nodes > 200) {
    throw LrtError(ErrorCode::InvalidArgument,
                   "gauss_hermite needs 2..200 nodes, got " +
                       std::to_string(n_nodes));
  }
  // Jacobi matrix of the probabilists' Hermite recurrence
  // x He_k = He_{k+1} + k He_{k-1}.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
  for (int k = 1; k < n_nodes; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  const Eigen::VectorXd &x = eig.eigenvalues();
  Eigen::VectorXd w = eig.eigenvectors().row(0).array().square().transpose();

  // Enforce exact symmetry about zero.
  QuadratureRule rule;
  rule.dimension = 1;
  rule.nodes.resize(1, n_nodes);
  rule.weights.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    const int mirror = n_nodes - 1 - i;
    rule.nodes(0, i) = 0.5 * (x[i] - x[mirror]);
    rule.weights[i] = 0.5 * (w[i] + w[mirror]);
  }
  if (n_nodes % 2 == 1) {
    rule.nodes(0, n_nodes / 2) = 0.0;
  }
  rule.weights /= rule.weights.sum();
  return rule;
}

QuadratureRule tensor_product(const QuadratureRule &rule) {
  if (rule.dimension != 1) {
    throw LrtError(ErrorCode::InvalidArgument,
                   "tensor_product expects a one-dimensional rule");
  }
  const Eigen::Index n = rule.size();
  QuadratureRule out;
  out.dimension = 2;
  out.nodes.resize(2, n * n);
  out.weights.resize(n * n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out.nodes(0, k) = rule.nodes(0, i);
      out.nodes(1, k) = rule.nodes(0, j);
      out.weights[k] = rule.weights[i] * rule.weights[j];
      ++k;
    }
  }
  return out;
}

QuadratureRule prune(const QuadratureRule &rule, double relative_tol) {
  const double cutoff = relative_tol * rule.weights.maxCoeff();
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < rule.size(); ++i) {
    kept += rule.weights[i] >= cutoff ? 1 : 0;
  }
  QuadratureRule out;
  out.dimension = rule.dimension;
  out.nodes.resize(rule.dimension, kept);
  out.weights.resize(kept);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < rule.size(); ++i) {
    if (rule.weights[i] >= cutoff) {
      out.nodes.col(k) = rule.nodes.col(i);
      out.weights[k] = rule.weights[i];
      ++k;
    }
  }
  return out;
}

const QuadratureRule &default_rule(int dimension) {
  static const QuadratureRule one = gauss_hermite(kDefaultQuadratureNodes);
  // Tensor nodes below 1e-20 of the peak weight carry less total mass than
  // the rounding error of the retained sum.
  static const QuadratureRule two = prune(tensor_product(one), 1e-20);
  if (dimension == 1) {
    return one;
  }
  if (dimension == 2) {
    return two;
  }
  throw LrtError(ErrorCode::InvalidArgument,
                 "quadrature dimension must be 1 or 2");
}

} // namespace lrtcone
