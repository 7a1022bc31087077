#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"
#include "obstacle/errors.hpp"

namespace obstacle::kernels {
namespace {

Isa detect_isa() noexcept {
  if (const char *env = std::getenv("OBSTACLE_ISA")) {
    const std::string_view want(env);
    if (want == "scalar")
      return Isa::scalar;
    if (want == "avx2" && isa_supported(Isa::avx2))
      return Isa::avx2;
  }
  return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa> &current() noexcept {
  static std::atomic<Isa> isa{detect_isa()};
  return isa;
}

const detail::KernelTable &active() noexcept {
#if defined(OBSTACLE_HAVE_AVX2)
  if (current().load(std::memory_order_relaxed) == Isa::avx2)
    return detail::avx2_table();
#endif
  return detail::scalar_table();
}

void check_same_size(std::size_t a, std::size_t b, const char *what) {
  if (a != b)
    throw DimensionMismatch(std::string(what) + ": operand sizes differ (" + std::to_string(a) +
                            " vs " + std::to_string(b) + ")");
}

} // namespace

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
  case Isa::scalar:
    return true;
  case Isa::avx2:
#if defined(OBSTACLE_HAVE_AVX2)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
  }
  return false;
}

Isa active_isa() noexcept { return current().load(); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa))
    throw Unsupported("kernel variant '" + std::string(isa_name(isa)) + "' is not available");
  current().store(isa);
}

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
  case Isa::scalar:
    return "scalar";
  case Isa::avx2:
    return "avx2";
  }
  return "unknown";
}

const detail::KernelTable &detail::table(Isa isa) {
  if (!isa_supported(isa))
    throw Unsupported("kernel variant '" + std::string(isa_name(isa)) + "' is not available");
#if defined(OBSTACLE_HAVE_AVX2)
  if (isa == Isa::avx2)
    return avx2_table();
#endif
  return scalar_table();
}

double dot(std::span<const double> x, std::span<const double> y) {
  check_same_size(x.size(), y.size(), "dot");
  return active().dot(x.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  check_same_size(x.size(), y.size(), "axpy");
  active().axpy(a, x.data(), y.data(), x.size());
}

void spmv(const CsrView &a, std::span<const double> x, std::span<double> y) {
  check_same_size(static_cast<std::size_t>(a.cols), x.size(), "spmv");
  check_same_size(static_cast<std::size_t>(a.rows), y.size(), "spmv");
  active().spmv(a.rows, a.row_ptr.data(), a.col_idx.data(), a.values.data(), x.data(), y.data());
}

void projected_step_upper(std::span<double> w, std::span<const double> grad, double step,
                          std::span<const double> upper) {
  check_same_size(w.size(), grad.size(), "projected_step_upper");
  check_same_size(w.size(), upper.size(), "projected_step_upper");
  active().projected_step_upper(w.data(), grad.data(), step, upper.data(), w.size());
}

void projected_step_nonneg(std::span<double> lambda, std::span<const double> grad, double step) {
  check_same_size(lambda.size(), grad.size(), "projected_step_nonneg");
  active().projected_step_nonneg(lambda.data(), grad.data(), step, lambda.size());
}

double max_excess(std::span<const double> x, std::span<const double> bound) {
  check_same_size(x.size(), bound.size(), "max_excess");
  return active().max_excess(x.data(), bound.data(), x.size());
}

} // namespace obstacle::kernels
