// Scalar reference kernels. These define the semantics the SIMD variants are
// tested against.

#include <algorithm>
#include <limits>

#include "kernels_internal.hpp"

namespace obstacle::kernels::detail {
namespace {

double dot_scalar(const double *x, const double *y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    s += x[i] * y[i];
  return s;
}

void axpy_scalar(double a, const double *x, double *y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    y[i] += a * x[i];
}

void spmv_scalar(long rows, const int *row_ptr, const int *col_idx, const double *values,
                 const double *x, double *y) {
  for (long r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
      s += values[k] * x[col_idx[k]];
    y[r] = s;
  }
}

void projected_step_upper_scalar(double *w, const double *grad, double step, const double *upper,
                                 std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    w[i] = std::min(w[i] - step * grad[i], upper[i]);
}

void projected_step_nonneg_scalar(double *lambda, const double *grad, double step, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    lambda[i] = std::max(lambda[i] - step * grad[i], 0.0);
}

double max_excess_scalar(const double *x, const double *bound, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    m = std::max(m, x[i] - bound[i]);
  return m;
}

constexpr KernelTable kScalar{dot_scalar,
                              axpy_scalar,
                              spmv_scalar,
                              projected_step_upper_scalar,
                              projected_step_nonneg_scalar,
                              max_excess_scalar};

} // namespace

const KernelTable &scalar_table() noexcept { return kScalar; }

} // namespace obstacle::kernels::detail
