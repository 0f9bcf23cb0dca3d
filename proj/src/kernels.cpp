#include "heat/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"

namespace heat::kernels {

namespace {

bool cpu_has_avx2() {
#if HEAT_HAVE_AVX2 && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const KernelTable* best = avx2() ? avx2() : &scalar();
  if (const char* env = std::getenv("HEAT_KERNELS")) {
    const std::string_view want(env);
    if (want == "scalar") return &scalar();
    if (want == "avx2" && avx2()) return avx2();
  }
  return best;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& scalar() { return detail::kScalarTable; }

const KernelTable* avx2() {
#if HEAT_HAVE_AVX2
  static const bool supported = cpu_has_avx2();
  return supported ? &detail::kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

std::vector<std::string_view> available() {
  std::vector<std::string_view> names{scalar().name};
  if (avx2()) names.emplace_back(avx2()->name);
  return names;
}

bool select(std::string_view name) {
  if (name == scalar().name) {
    current().store(&scalar(), std::memory_order_release);
    return true;
  }
  if (const KernelTable* t = avx2(); t && name == t->name) {
    current().store(t, std::memory_order_release);
    return true;
  }
  return false;
}

void gemv(const double* w, const double* b, const double* x, double* y, std::size_t rows,
          std::size_t cols) {
  const auto dot = active().dot;
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(w + r * cols, x, cols) + b[r];
}

void gemv_transposed(const double* w, const double* v, double* y, std::size_t rows,
                     std::size_t cols) {
  const auto axpy = active().axpy;
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) axpy(v[r], w + r * cols, y, cols);
}

}  // namespace heat::kernels
