#pragma once

#include "obstacle/kernels.hpp"

namespace obstacle::kernels::detail {

#if defined(OBSTACLE_HAVE_AVX2)
const KernelTable &avx2_table() noexcept;
#endif

} // namespace obstacle::kernels::detail
