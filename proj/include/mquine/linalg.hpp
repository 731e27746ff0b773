#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace mquine {

/// Dense row-major matrix, the storage order used throughout the library.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using RowVectorXd = RowVector<double>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Number of free values in a packed lower triangle of a d x d matrix.
constexpr std::size_t lower_size(std::size_t d) { return d * (d + 1) / 2; }

/// Packed offset of (i, j), i >= j, row by row.
constexpr std::size_t lower_index(std::size_t i, std::size_t j) { return i * (i + 1) / 2 + j; }

/// Dimension d such that lower_size(d) == n, or 0 if n is not triangular.
inline std::size_t dim_from_lower_size(std::size_t n) {
  std::size_t d = 0;
  while (lower_size(d) < n) ++d;
  return lower_size(d) == n ? d : 0;
}

/// E = A + A^T from the packed lower triangle of A. Mirrored entries are
/// written from the same value so the result is exactly symmetric.
template <typename Derived>
Matrix<typename Derived::Scalar> symmetric_from_lower(const Eigen::DenseBase<Derived>& packed,
                                                      std::size_t d) {
  using Scalar = typename Derived::Scalar;
  if (static_cast<std::size_t>(packed.size()) != lower_size(d)) {
    throw DimensionError("packed lower triangle has " + std::to_string(packed.size()) +
                         " values, expected " + std::to_string(lower_size(d)));
  }
  Matrix<Scalar> e(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const Scalar a = packed(lower_index(i, j));
      if (i == j) {
        e(i, i) = a + a;
      } else {
        e(i, j) = a;
        e(j, i) = a;
      }
    }
  }
  return e;
}

/// Pulls a gradient with respect to E = A + A^T back onto the packed lower
/// triangle of A: dA_ij = G_ij + G_ji for i >= j.
template <typename Derived>
Vector<typename Derived::Scalar> lower_from_symmetric_grad(const Eigen::MatrixBase<Derived>& g) {
  using Scalar = typename Derived::Scalar;
  const auto d = static_cast<std::size_t>(g.rows());
  Vector<Scalar> out(lower_size(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      out(lower_index(i, j)) = g(i, j) + g(j, i);
    }
  }
  return out;
}

template <typename A, typename B>
void require_same_shape(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b,
                        const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) +
                         "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                         "x" + std::to_string(b.cols()) + ")");
  }
}

/// Numerical rank: singular values above d * eps * sigma_max count.
template <typename Derived>
std::size_t numerical_rank(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> svd(m.eval());
  const auto& sv = svd.singularValues();
  const Scalar smax = sv.size() > 0 ? sv(0) : Scalar(0);
  const Scalar tol = static_cast<Scalar>(std::max(m.rows(), m.cols())) *
                     Eigen::NumTraits<Scalar>::epsilon() * smax;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) ++rank;
  }
  return rank;
}

}  // namespace mquine
