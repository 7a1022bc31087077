#pragma once

#include <cstddef>
#include <span>
#include <string_view>

/// Data-parallel inner loops. Every kernel has a scalar reference version and,
/// on x86-64, an AVX2/FMA version. The variant is chosen once at startup from
/// cpuid, or from the OBSTACLE_ISA environment variable ("scalar" / "avx2").
namespace obstacle::kernels {

enum class Isa { scalar, avx2 };

struct CsrView {
  long rows = 0;
  long cols = 0;
  std::span<const int> row_ptr;
  std::span<const int> col_idx;
  std::span<const double> values;
};

bool isa_supported(Isa isa) noexcept;
Isa active_isa() noexcept;
/// Switches the process-wide variant. Throws Unsupported when unavailable.
void set_active_isa(Isa isa);
std::string_view isa_name(Isa isa) noexcept;

double dot(std::span<const double> x, std::span<const double> y);
/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
/// y = A x
void spmv(const CsrView &a, std::span<const double> x, std::span<double> y);
/// w = min(w - step * grad, upper), componentwise. +inf in upper means unconstrained.
void projected_step_upper(std::span<double> w, std::span<const double> grad, double step,
                          std::span<const double> upper);
/// lambda = max(lambda - step * grad, 0)
void projected_step_nonneg(std::span<double> lambda, std::span<const double> grad, double step);
/// max_i (x_i - bound_i); -inf for empty input.
double max_excess(std::span<const double> x, std::span<const double> bound);

namespace detail {

struct KernelTable {
  double (*dot)(const double *x, const double *y, std::size_t n);
  void (*axpy)(double a, const double *x, double *y, std::size_t n);
  void (*spmv)(long rows, const int *row_ptr, const int *col_idx, const double *values,
               const double *x, double *y);
  void (*projected_step_upper)(double *w, const double *grad, double step, const double *upper,
                               std::size_t n);
  void (*projected_step_nonneg)(double *lambda, const double *grad, double step, std::size_t n);
  double (*max_excess)(const double *x, const double *bound, std::size_t n);
};

const KernelTable &scalar_table() noexcept;
/// Table for a given variant; throws Unsupported when not compiled in or not supported by the CPU.
const KernelTable &table(Isa isa);

} // namespace detail

} // namespace obstacle::kernels
