#ifndef LRTCONE_QUADRATURE_HPP_
#define LRTCONE_QUADRATURE_HPP_

#include <Eigen/Dense>

namespace lrtcone {

constexpr int kDefaultQuadratureNodes = 49;

/*
 * Quadrature rule against the standard normal density:
 *
 *   E[f(xi)] ~= sum_i weights[i] * f(nodes.col(i))
 *
 * with xi ~ N(0, I_dimension). Nodes are stored one per column.
 */
struct QuadratureRule {
  Eigen::MatrixXd nodes;
  Eigen::VectorXd weights;
  int dimension = 1;

  Eigen::Index size() const { return weights.size(); }
};

/// Probabilists' Gauss-Hermite rule via Golub-Welsch, 2 <= n_nodes <= 200.
QuadratureRule gauss_hermite(int n_nodes);

/// Tensor product of a one-dimensional rule with itself.
QuadratureRule tensor_product(const QuadratureRule &rule);

/*
 * Drops nodes whose weight is below `relative_tol * max weight`. The omitted
 * mass is reported through the weights no longer summing to one exactly; for
 * the default tolerances it is far below double precision of any integral we
 * compute.
 */
QuadratureRule prune(const QuadratureRule &rule, double relative_tol);

/// Default rule for the given number of latent factors (49 or 49x49 nodes).
const QuadratureRule &default_rule(int dimension);

template <typename F> double integrate(const QuadratureRule &rule, F &&f) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < rule.size(); ++i) {
    total += rule.weights[i] * f(rule.nodes.col(i));
  }
  return total;
}

} // namespace lrtcone

#endif /* LRTCONE_QUADRATURE_HPP_ */
