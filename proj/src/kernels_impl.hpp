#pragma once

#include "heat/kernels.hpp"

namespace heat::kernels::detail {

extern const KernelTable kScalarTable;

#if HEAT_HAVE_AVX2
extern const KernelTable kAvx2Table;
#endif

}  // namespace heat::kernels::detail
