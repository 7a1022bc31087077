#pragma once

#include <cmath>
#include <span>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "obstacle/kernels.hpp"

namespace obstacle {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
/// Row-major so that the raw arrays are CSR and can be fed to the kernels.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

inline std::span<const double> view(const Vector &v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
inline std::span<double> view(Vector &v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// CSR view of a compressed row-major matrix.
inline kernels::CsrView csr(const SparseMatrix &a) {
  const auto rows = static_cast<std::size_t>(a.rows());
  const auto nnz = static_cast<std::size_t>(a.nonZeros());
  return {a.rows(), a.cols(), {a.outerIndexPtr(), rows + 1}, {a.innerIndexPtr(), nnz},
          {a.valuePtr(), nnz}};
}

/// y = A x through the dispatched spmv kernel. A must be compressed.
inline Vector multiply(const SparseMatrix &a, const Vector &x) {
  Vector y(a.rows());
  kernels::spmv(csr(a), view(x), view(y));
  return y;
}

/// sqrt(x^T A x)
inline double energy_norm(const SparseMatrix &a, const Vector &x) {
  const Vector ax = multiply(a, x);
  const double q = kernels::dot(view(x), view(ax));
  return q > 0.0 ? std::sqrt(q) : 0.0;
}

} // namespace obstacle
