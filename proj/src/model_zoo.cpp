#include "lrtcone/model_zoo.hpp"

#include <limits>
#include <numbers>
#include <random>

#include "lrtcone/error.hpp"
#include "lrtcone/linalg.hpp"
#include "lrtcone/rng.hpp"

namespace lrtcone {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

std::string indexed(const std::string &base, Eigen::Index i) {
  return base + "[" + std::to_string(i + 1) + "]";
}

void require(bool ok, ErrorCode code, const std::string &what) {
  if (!ok) {
    throw LrtError(code, what);
  }
}

/*
 * Per-node item probabilities and per-node pattern likelihoods for an item
 * factor model. likelihood(q, x) = prod_j p_j(q)^{x_j} (1 - p_j(q))^{1-x_j}.
 */
struct IfaNodeTable {
  Eigen::MatrixXd item_probs;  // nodes x J
  Eigen::MatrixXd likelihood;  // nodes x 2^J
};

IfaNodeTable ifa_node_table(const IfaParams &params,
                            const QuadratureRule &quad) {
  const int n_items = params.n_items();
  const Eigen::Index n_nodes = quad.size();
  const Eigen::Index n_patterns = Eigen::Index{1} << n_items;
  if (params.n_factors() > quad.dimension) {
    throw LrtError(ErrorCode::InvalidArgument,
                   "two-factor item model needs a two-dimensional rule");
  }

  IfaNodeTable table;
  table.item_probs.resize(n_nodes, n_items);
  table.likelihood.resize(n_nodes, n_patterns);

  Eigen::VectorXd row(n_patterns);
  for (Eigen::Index q = 0; q < n_nodes; ++q) {
    const double xi1 = quad.nodes(0, q);
    const double xi2 = quad.dimension > 1 ? quad.nodes(1, q) : 0.0;
    row[0] = 1.0;
    Eigen::Index filled = 1;
    for (int j = 0; j < n_items; ++j) {
      double eta = params.easiness[j] + params.discrimination_1[j] * xi1;
      if (params.discrimination_2) {
        eta += (*params.discrimination_2)[j] * xi2;
      }
      const double p = logistic(eta);
      table.item_probs(q, j) = p;
      for (Eigen::Index x = 0; x < filled; ++x) {
        row[x + filled] = row[x] * p;
        row[x] *= 1.0 - p;
      }
      filled *= 2;
    }
    table.likelihood.row(q) = row.transpose();
  }
  return table;
}

Eigen::MatrixXd pattern_bit_matrix(int n_items) {
  const Eigen::Index n_patterns = Eigen::Index{1} << n_items;
  Eigen::MatrixXd bits(n_patterns, n_items);
  for (Eigen::Index x = 0; x < n_patterns; ++x) {
    for (int j = 0; j < n_items; ++j) {
      bits(x, j) = pattern_bit(static_cast<std::uint32_t>(x), j) ? 1.0 : 0.0;
    }
  }
  return bits;
}

Eigen::Index ifa_param_count(int n_items, int n_factors) {
  return n_factors == 1 ? 2 * n_items : 3 * n_items - 1;
}

} // namespace

std::string to_string(Family family) {
  switch (family) {
  case Family::EfaOneFactor:
    return "efa_one_factor";
  case Family::EfaTwoFactor:
    return "efa_two_factor";
  case Family::SaturatedGaussian:
    return "saturated_gaussian";
  case Family::IfaOneFactor:
    return "ifa_one_factor";
  case Family::IfaTwoFactor:
    return "ifa_two_factor";
  case Family::SaturatedMultinomial:
    return "saturated_multinomial";
  case Family::RandomIntercept:
    return "random_intercept";
  }
  return "unknown";
}

double ParamVector::at(const std::string &name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) {
      return values[static_cast<Eigen::Index>(i)];
    }
  }
  throw LrtError(ErrorCode::InvalidArgument, "no parameter named " + name);
}

void EfaParams::validate() const {
  const auto n = loadings_1.size();
  require(uniquenesses.size() == n, ErrorCode::InvalidArgument,
          "uniquenesses length must match loadings");
  require((uniquenesses.array() > 0.0).all(), ErrorCode::InvalidArgument,
          "uniquenesses must be strictly positive");
  if (loadings_2) {
    require(loadings_2->size() == n, ErrorCode::InvalidArgument,
            "second loading vector length must match");
    require((*loadings_2)[0] == 0.0, ErrorCode::InvalidArgument,
            "a[1,2] must be fixed at zero");
  }
}

void IfaParams::validate() const {
  const auto n = easiness.size();
  require(discrimination_1.size() == n, ErrorCode::InvalidArgument,
          "discrimination length must match easiness");
  require(easiness.allFinite() && discrimination_1.allFinite(),
          ErrorCode::InvalidArgument, "item parameters must be finite");
  if (discrimination_2) {
    require(discrimination_2->size() == n && discrimination_2->allFinite(),
            ErrorCode::InvalidArgument, "bad second discrimination vector");
    require((*discrimination_2)[0] == 0.0, ErrorCode::InvalidArgument,
            "a[1,2] must be fixed at zero");
  }
}

void RandomEffectsParams::validate() const {
  require(var_between >= 0.0, ErrorCode::InvalidArgument,
          "between-group variance must be nonnegative");
  require(var_within > 0.0, ErrorCode::DegenerateVariance,
          "within-group variance must be positive");
}

Eigen::MatrixXd SaturatedGaussianParams::covariance() const {
  const Eigen::Index dim = dim_from_half_vec_size(cov_upper.size());
  require(dim > 0, ErrorCode::InvalidArgument,
          "cov_upper length is not triangular");
  return from_half_vec(cov_upper, dim);
}

int SaturatedGaussianParams::n_items() const {
  return static_cast<int>(dim_from_half_vec_size(cov_upper.size()));
}

void SaturatedMultinomialParams::validate() const {
  require(probs.size() == (Eigen::Index{1} << n_items) - 1,
          ErrorCode::InvalidArgument, "need 2^J - 1 probabilities");
  require((probs.array() >= 0.0).all(), ErrorCode::InvalidProb,
          "probabilities must be nonnegative");
  require(probs.sum() <= 1.0 + 1e-12, ErrorCode::InvalidProb,
          "probabilities must sum to at most one");
}

std::uint32_t pattern_index(const Eigen::Ref<const Eigen::VectorXd> &row) {
  std::uint32_t x = 0;
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (row[j] != 0.0) {
      x |= 1U << j;
    }
  }
  return x;
}

PatternCounts pattern_counts(const Dataset &data) {
  require(data.kind == DataKind::Binary, ErrorCode::InvalidArgument,
          "pattern counts need binary data");
  require(data.n_items() <= 20, ErrorCode::InvalidArgument,
          "too many items to enumerate patterns");
  PatternCounts out;
  out.n_items = static_cast<int>(data.n_items());
  out.counts = Eigen::VectorXd::Zero(Eigen::Index{1} << out.n_items);
  for (Eigen::Index i = 0; i < data.n_obs(); ++i) {
    out.counts[pattern_index(data.rows.row(i).transpose())] += 1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd efa_covariance(const EfaParams &params) {
  Eigen::MatrixXd cov = params.loadings_1 * params.loadings_1.transpose();
  if (params.loadings_2) {
    cov.noalias() += *params.loadings_2 * params.loadings_2->transpose();
  }
  cov.diagonal() += params.uniquenesses;
  return cov;
}

Eigen::MatrixXd second_moment(const Dataset &data) {
  require(data.n_obs() > 0, ErrorCode::InvalidArgument, "empty dataset");
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(data.n_items(), data.n_items());
  s.selfadjointView<Eigen::Lower>().rankUpdate(data.rows.transpose());
  s = s.selfadjointView<Eigen::Lower>();
  return s / static_cast<double>(data.n_obs());
}

double gaussian_loglik(const Eigen::MatrixXd &cov, const Dataset &data) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  require(llt.info() == Eigen::Success, ErrorCode::NonSPD,
          "covariance is not positive definite");
  const double log_det =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const Eigen::MatrixXd white =
      llt.matrixL().solve(data.rows.transpose());
  const double n = static_cast<double>(data.n_obs());
  const double j = static_cast<double>(data.n_items());
  return -0.5 * (n * (j * kLog2Pi + log_det) + white.squaredNorm());
}

double gaussian_loglik(const Eigen::MatrixXd &cov,
                       const Eigen::MatrixXd &second_moment, double n_obs) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  require(llt.info() == Eigen::Success, ErrorCode::NonSPD,
          "covariance is not positive definite");
  const double log_det =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double trace = llt.solve(second_moment).trace();
  const double j = static_cast<double>(cov.rows());
  return -0.5 * n_obs * (j * kLog2Pi + log_det + trace);
}

ParamVector to_param_vector(const EfaParams &params) {
  const int n = params.n_items();
  ParamVector out;
  const Eigen::Index size = params.loadings_2 ? 3 * n - 1 : 2 * n;
  out.values.resize(size);
  Eigen::Index k = 0;
  for (int j = 0; j < n; ++j, ++k) {
    out.values[k] = params.uniquenesses[j];
    out.names.push_back(indexed("delta", j));
  }
  for (int j = 0; j < n; ++j, ++k) {
    out.values[k] = params.loadings_1[j];
    out.names.push_back(indexed("a1", j));
  }
  if (params.loadings_2) {
    for (int j = 1; j < n; ++j, ++k) {
      out.values[k] = (*params.loadings_2)[j];
      out.names.push_back(indexed("a2", j));
    }
  }
  return out;
}

EfaParams efa_from_param_vector(const Eigen::VectorXd &values, int n_items,
                                int n_factors) {
  const Eigen::Index n = n_items;
  require(values.size() == (n_factors == 1 ? 2 * n : 3 * n - 1),
          ErrorCode::InvalidArgument, "EFA parameter vector has wrong length");
  EfaParams params;
  params.uniquenesses = values.head(n);
  params.loadings_1 = values.segment(n, n);
  if (n_factors == 2) {
    Eigen::VectorXd a2(n);
    a2[0] = 0.0;
    a2.tail(n - 1) = values.tail(n - 1);
    params.loadings_2 = a2;
  }
  return params;
}

Eigen::VectorXd efa_gradient(const EfaParams &params,
                             const Eigen::MatrixXd &second_moment,
                             double n_obs) {
  const int n = params.n_items();
  Eigen::LLT<Eigen::MatrixXd> llt(efa_covariance(params));
  require(llt.info() == Eigen::Success, ErrorCode::NonSPD,
          "covariance is not positive definite");
  const Eigen::MatrixXd inv =
      llt.solve(Eigen::MatrixXd::Identity(n, n));
  // dl = -N/2 tr(G dSigma) with G = W - W S W.
  const Eigen::MatrixXd g = inv - inv * second_moment * inv;

  Eigen::VectorXd grad(params.loadings_2 ? 3 * n - 1 : 2 * n);
  grad.head(n) = -0.5 * n_obs * g.diagonal();
  grad.segment(n, n) = -n_obs * g * params.loadings_1;
  if (params.loadings_2) {
    const Eigen::VectorXd g2 = -n_obs * g * (*params.loadings_2);
    grad.tail(n - 1) = g2.tail(n - 1);
  }
  return grad;
}

// ---------------------------------------------------------------------------

ParamVector to_param_vector(const IfaParams &params) {
  const int n = params.n_items();
  ParamVector out;
  out.values.resize(ifa_param_count(n, params.n_factors()));
  Eigen::Index k = 0;
  for (int j = 0; j < n; ++j, ++k) {
    out.values[k] = params.easiness[j];
    out.names.push_back(indexed("d", j));
  }
  for (int j = 0; j < n; ++j, ++k) {
    out.values[k] = params.discrimination_1[j];
    out.names.push_back(indexed("a1", j));
  }
  if (params.discrimination_2) {
    for (int j = 1; j < n; ++j, ++k) {
      out.values[k] = (*params.discrimination_2)[j];
      out.names.push_back(indexed("a2", j));
    }
  }
  return out;
}

IfaParams ifa_from_param_vector(const Eigen::VectorXd &values, int n_items,
                                int n_factors) {
  const Eigen::Index n = n_items;
  require(values.size() == ifa_param_count(n_items, n_factors),
          ErrorCode::InvalidArgument, "IFA parameter vector has wrong length");
  IfaParams params;
  params.easiness = values.head(n);
  params.discrimination_1 = values.segment(n, n);
  if (n_factors == 2) {
    Eigen::VectorXd a2(n);
    a2[0] = 0.0;
    a2.tail(n - 1) = values.tail(n - 1);
    params.discrimination_2 = a2;
  }
  return params;
}

double ifa_pattern_prob(const IfaParams &params, std::uint32_t pattern,
                        const QuadratureRule &quad) {
  const int n = params.n_items();
  double total = 0.0;
  for (Eigen::Index q = 0; q < quad.size(); ++q) {
    const double xi1 = quad.nodes(0, q);
    const double xi2 = quad.dimension > 1 ? quad.nodes(1, q) : 0.0;
    double lik = 1.0;
    for (int j = 0; j < n; ++j) {
      double eta = params.easiness[j] + params.discrimination_1[j] * xi1;
      if (params.discrimination_2) {
        eta += (*params.discrimination_2)[j] * xi2;
      }
      // Sign flip keeps this in the stable branch for either response.
      lik *= logistic(pattern_bit(pattern, j) ? eta : -eta);
    }
    total += quad.weights[q] * lik;
  }
  return total;
}

Eigen::VectorXd ifa_pattern_probs(const IfaParams &params,
                                  const QuadratureRule &quad) {
  const IfaNodeTable table = ifa_node_table(params, quad);
  return table.likelihood.transpose() * quad.weights;
}

IfaPatternJacobian ifa_pattern_jacobian(const IfaParams &params,
                                        const QuadratureRule &quad) {
  const int n = params.n_items();
  const int factors = params.n_factors();
  const IfaNodeTable table = ifa_node_table(params, quad);
  const Eigen::MatrixXd bits = pattern_bit_matrix(n);

  IfaPatternJacobian out;
  out.probs = table.likelihood.transpose() * quad.weights;
  out.jacobian.resize(out.probs.size(), ifa_param_count(n, factors));

  // d pi_x / d eta_l weighted by a node covariate c(q) (1, xi1 or xi2):
  //   sum_q w_q c_q L_x(q) (x_l - p_l(q)).
  auto block = [&](const Eigen::VectorXd &covariate) {
    const Eigen::VectorXd wc = quad.weights.cwiseProduct(covariate);
    const Eigen::VectorXd mass = table.likelihood.transpose() * wc;
    const Eigen::MatrixXd expected =
        table.likelihood.transpose() *
        (table.item_probs.array().colwise() * wc.array()).matrix();
    return Eigen::MatrixXd(
        (bits.array().colwise() * mass.array()).matrix() - expected);
  };

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(quad.size());
  out.jacobian.leftCols(n) = block(ones);
  out.jacobian.middleCols(n, n) = block(quad.nodes.row(0).transpose());
  if (factors == 2) {
    const Eigen::MatrixXd d2 = block(quad.nodes.row(1).transpose());
    out.jacobian.rightCols(n - 1) = d2.rightCols(n - 1);
  }
  return out;
}

double ifa_loglik(const IfaParams &params, const Dataset &data,
                  const QuadratureRule &quad) {
  return ifa_loglik(params, pattern_counts(data), quad);
}

double ifa_loglik(const IfaParams &params, const PatternCounts &counts,
                  const QuadratureRule &quad) {
  const Eigen::VectorXd probs = ifa_pattern_probs(params, quad);
  double total = 0.0;
  for (Eigen::Index x = 0; x < probs.size(); ++x) {
    if (counts.counts[x] > 0.0) {
      total += counts.counts[x] * std::log(probs[x]);
    }
  }
  return total;
}

LoglikWithGradient ifa_loglik_gradient(const IfaParams &params,
                                       const PatternCounts &counts,
                                       const QuadratureRule &quad) {
  const int n = params.n_items();
  const int factors = params.n_factors();
  const IfaNodeTable table = ifa_node_table(params, quad);
  const Eigen::VectorXd probs = table.likelihood.transpose() * quad.weights;

  LoglikWithGradient out;
  Eigen::VectorXd ratio = Eigen::VectorXd::Zero(probs.size());
  for (Eigen::Index x = 0; x < probs.size(); ++x) {
    if (counts.counts[x] > 0.0) {
      out.loglik += counts.counts[x] * std::log(probs[x]);
      ratio[x] = counts.counts[x] / probs[x];
    }
  }

  // Posterior-weighted node sums: total[q] = sum_x r_x L_x(q) and
  // endorsed[q, l] = sum_{x: x_l = 1} r_x L_x(q).
  const Eigen::MatrixXd bits = pattern_bit_matrix(n);
  const Eigen::VectorXd total = table.likelihood * ratio;
  const Eigen::MatrixXd endorsed =
      table.likelihood * (bits.array().colwise() * ratio.array()).matrix();
  const Eigen::MatrixXd node_grad =
      ((endorsed - (table.item_probs.array().colwise() * total.array())
                       .matrix())
           .array()
           .colwise() *
       quad.weights.array())
          .matrix();

  out.gradient.resize(ifa_param_count(n, factors));
  out.gradient.head(n) = node_grad.colwise().sum().transpose();
  out.gradient.segment(n, n) = node_grad.transpose() * quad.nodes.row(0).transpose();
  if (factors == 2) {
    const Eigen::VectorXd g2 =
        node_grad.transpose() * quad.nodes.row(1).transpose();
    out.gradient.tail(n - 1) = g2.tail(n - 1);
  }
  return out;
}

// ---------------------------------------------------------------------------

ParamVector to_param_vector(const RandomEffectsParams &params) {
  ParamVector out;
  out.values = Eigen::Vector3d(params.beta0, params.var_between,
                               params.var_within);
  out.names = {"beta0", "sigma1_sq", "sigma2_sq"};
  return out;
}

namespace {

struct GroupSummary {
  double sum = 0.0;          // sum_j (x_ij - beta0)
  double within_ss = 0.0;    // sum_j (x_ij - xbar_i)^2
};

GroupSummary summarize_group(const Eigen::Ref<const Eigen::RowVectorXd> &row,
                             double beta0) {
  GroupSummary g;
  const double mean = row.mean();
  g.sum = (mean - beta0) * static_cast<double>(row.size());
  g.within_ss = (row.array() - mean).square().sum();
  return g;
}

} // namespace

double re_loglik(const RandomEffectsParams &params, const Dataset &data) {
  require(params.var_within > 0.0, ErrorCode::DegenerateVariance,
          "within-group variance must be positive");
  const double j = static_cast<double>(data.n_items());
  const double s2 = params.var_within;
  // Group covariance s1 11^T + s2 I has eigenvalue lambda along 1 and s2 on
  // its orthogonal complement.
  const double lambda = s2 + j * params.var_between;
  require(lambda > 0.0, ErrorCode::DegenerateVariance,
          "group covariance is not positive definite");
  const double per_group_const =
      j * kLog2Pi + (j - 1.0) * std::log(s2) + std::log(lambda);
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.n_obs(); ++i) {
    const GroupSummary g = summarize_group(data.rows.row(i), params.beta0);
    total += per_group_const + g.within_ss / s2 + g.sum * g.sum / (j * lambda);
  }
  return -0.5 * total;
}

Eigen::Vector3d re_gradient(const RandomEffectsParams &params,
                            const Dataset &data) {
  require(params.var_within > 0.0, ErrorCode::DegenerateVariance,
          "within-group variance must be positive");
  const double j = static_cast<double>(data.n_items());
  const double s2 = params.var_within;
  const double lambda = s2 + j * params.var_between;
  require(lambda > 0.0, ErrorCode::DegenerateVariance,
          "group covariance is not positive definite");
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  for (Eigen::Index i = 0; i < data.n_obs(); ++i) {
    const GroupSummary g = summarize_group(data.rows.row(i), params.beta0);
    const double mean_term = g.sum * g.sum / (j * lambda * lambda);
    grad[0] += g.sum / lambda;
    grad[1] += -0.5 * j * (1.0 / lambda - mean_term);
    grad[2] += -0.5 * ((j - 1.0) / s2 + 1.0 / lambda -
                       g.within_ss / (s2 * s2) - mean_term);
  }
  return grad;
}

double saturated_multinomial_loglik(const SaturatedMultinomialParams &params,
                                    const PatternCounts &counts) {
  require(counts.n_patterns() == params.probs.size() + 1,
          ErrorCode::InvalidArgument, "pattern count size mismatch");
  double total = 0.0;
  for (Eigen::Index x = 0; x < counts.n_patterns(); ++x) {
    const double n = counts.counts[x];
    if (n <= 0.0) {
      continue;
    }
    const double p = x == 0 ? params.zero_pattern_prob() : params.probs[x - 1];
    if (p <= 0.0) {
      return -std::numeric_limits<double>::infinity();
    }
    total += n * std::log(p);
  }
  return total;
}

ParamVector to_param_vector(const SaturatedGaussianParams &params) {
  const int dim = params.n_items();
  ParamVector out;
  out.values = params.cov_upper;
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      out.names.push_back("sigma[" + std::to_string(i + 1) + "," +
                          std::to_string(j + 1) + "]");
    }
  }
  return out;
}

ParamVector to_param_vector(const SaturatedMultinomialParams &params) {
  ParamVector out;
  out.values = params.probs;
  for (Eigen::Index x = 1; x <= params.probs.size(); ++x) {
    out.names.push_back("pi[" + std::to_string(x) + "]");
  }
  return out;
}

// ---------------------------------------------------------------------------

Dataset simulate(const ModelSpec &spec, const ModelParams &params,
                 Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Dataset data;

  if (const auto *efa = std::get_if<EfaParams>(&params)) {
    efa->validate();
    const Eigen::Index dim = efa->n_items();
    require(spec.n_items == 0 || spec.n_items == dim,
            ErrorCode::InvalidArgument, "spec.n_items disagrees with loadings");
    const Eigen::VectorXd sd = efa->uniquenesses.array().sqrt();
    data.kind = DataKind::Continuous;
    data.rows.resize(n, dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double xi1 = normal(rng);
      const double xi2 = efa->loadings_2 ? normal(rng) : 0.0;
      for (Eigen::Index j = 0; j < dim; ++j) {
        double x = efa->loadings_1[j] * xi1 + sd[j] * normal(rng);
        if (efa->loadings_2) {
          x += (*efa->loadings_2)[j] * xi2;
        }
        data.rows(i, j) = x;
      }
    }
  } else if (const auto *ifa = std::get_if<IfaParams>(&params)) {
    ifa->validate();
    const Eigen::Index dim = ifa->n_items();
    require(spec.n_items == 0 || spec.n_items == dim,
            ErrorCode::InvalidArgument, "spec.n_items disagrees with items");
    data.kind = DataKind::Binary;
    data.rows.resize(n, dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double xi1 = normal(rng);
      const double xi2 = ifa->discrimination_2 ? normal(rng) : 0.0;
      for (Eigen::Index j = 0; j < dim; ++j) {
        double eta = ifa->easiness[j] + ifa->discrimination_1[j] * xi1;
        if (ifa->discrimination_2) {
          eta += (*ifa->discrimination_2)[j] * xi2;
        }
        data.rows(i, j) = uniform(rng) < logistic(eta) ? 1.0 : 0.0;
      }
    }
  } else {
    const auto &re = std::get<RandomEffectsParams>(params);
    re.validate();
    require(spec.n_items > 0, ErrorCode::InvalidArgument,
            "random intercept simulation needs a group size");
    const double sd_between = std::sqrt(re.var_between);
    const double sd_within = std::sqrt(re.var_within);
    data.kind = DataKind::Grouped;
    data.rows.resize(n, spec.n_items);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = sd_between * normal(rng);
      for (Eigen::Index j = 0; j < spec.n_items; ++j) {
        data.rows(i, j) = re.beta0 + mu + sd_within * normal(rng);
      }
    }
  }
  return data;
}

} // namespace lrtcone
