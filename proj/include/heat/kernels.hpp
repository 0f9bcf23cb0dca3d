#pragma once

// Data-parallel inner loops used by the models and the attack update.
//
// Two implementations exist: a portable scalar reference and an AVX2/FMA
// variant compiled in its own translation unit. The active table is chosen
// once at startup from the CPU feature bits; HEAT_KERNELS=scalar|avx2 in the
// environment (or select()) overrides the choice. Elementwise kernels
// are bit-identical across variants, reductions agree to rounding.

#include <cstddef>
#include <string_view>
#include <vector>

namespace heat::kernels {

struct KernelTable {
  const char* name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // sum_i |x[i]|
  double (*abs_sum)(const double* x, std::size_t n);
  // out[i] = x[i] + alpha * sign(dir[i]), sign(0) = 0
  void (*sign_step)(const double* x, const double* dir, double alpha, double* out, std::size_t n);
  // out[i] = min(max(adv[i], orig[i] - eps, 0), orig[i] + eps, 1)
  void (*clip_project)(const double* adv, const double* orig, double eps, double* out,
                       std::size_t n);
};

const KernelTable& scalar();

// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2();

const KernelTable& active();

// Names of the variants usable on this machine, scalar first.
std::vector<std::string_view> available();

// Returns false (and leaves the selection unchanged) for an unknown or
// unsupported name.
bool select(std::string_view name);

// y = W x + b for a row-major rows x cols matrix.
void gemv(const double* w, const double* b, const double* x, double* y, std::size_t rows,
          std::size_t cols);

// y = W^T v for a row-major rows x cols matrix; y has length cols.
void gemv_transposed(const double* w, const double* v, double* y, std::size_t rows,
                     std::size_t cols);

}  // namespace heat::kernels
