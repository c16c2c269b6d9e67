#ifndef LRTCONE_LINALG_HPP_
#define LRTCONE_LINALG_HPP_

#include <utility>

#include <Eigen/Dense>

namespace lrtcone {

constexpr Eigen::Index half_vec_size(Eigen::Index dim) {
  return dim * (dim + 1) / 2;
}

/*
 * Position of entry (i, j) (either order) in the row-major upper-triangular
 * half-vectorization (s11, s12, ..., s1J, s22, ..., sJJ).
 */
inline Eigen::Index half_vec_index(Eigen::Index dim, Eigen::Index i,
                                   Eigen::Index j) {
  if (i > j) {
    std::swap(i, j);
  }
  return i * dim - i * (i - 1) / 2 + (j - i);
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>
half_vec(const Eigen::MatrixBase<Derived> &m) {
  const Eigen::Index dim = m.rows();
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out(
      half_vec_size(dim));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i; j < dim; ++j) {
      out[k++] = m(i, j);
    }
  }
  return out;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
from_half_vec(const Eigen::MatrixBase<Derived> &v, Eigen::Index dim) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> m(
      dim, dim);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i; j < dim; ++j) {
      m(i, j) = v[k];
      m(j, i) = v[k];
      ++k;
    }
  }
  return m;
}

/// Dimension J recovered from a half-vectorized length J(J+1)/2.
inline Eigen::Index dim_from_half_vec_size(Eigen::Index k) {
  Eigen::Index dim = 0;
  while (half_vec_size(dim) < k) {
    ++dim;
  }
  return half_vec_size(dim) == k ? dim : -1;
}

/// d Sigma / d sigma_ij for the half-vectorized coordinate (i, j).
inline Eigen::MatrixXd symmetric_unit(Eigen::Index dim, Eigen::Index i,
                                      Eigen::Index j) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(dim, dim);
  e(i, j) = 1.0;
  e(j, i) = 1.0;
  return e;
}

template <typename Derived>
bool is_exactly_symmetric(const Eigen::MatrixBase<Derived> &m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      if (m(i, j) != m(j, i)) {
        return false;
      }
    }
  }
  return true;
}

/// Orthonormal basis of the orthogonal complement of span(a).
inline Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd &a) {
  const Eigen::Index k = a.rows();
  if (a.cols() == 0) {
    return Eigen::MatrixXd::Identity(k, k);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::Index rank = qr.rank();
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
  return q.rightCols(k - rank);
}

} // namespace lrtcone

#endif /* LRTCONE_LINALG_HPP_ */
