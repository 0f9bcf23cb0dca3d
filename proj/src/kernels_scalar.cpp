#include "kernels_impl.hpp"

#include <algorithm>
#include <cmath>

namespace heat::kernels::detail {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double abs_sum_scalar(const double* x, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::fabs(x[i]);
  return sum;
}

void sign_step_scalar(const double* x, const double* dir, double alpha, double* out,
                      std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double s = dir[i] > 0.0 ? 1.0 : (dir[i] < 0.0 ? -1.0 : 0.0);
    out[i] = x[i] + alpha * s;
  }
}

void clip_project_scalar(const double* adv, const double* orig, double eps, double* out,
                         std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = std::max(orig[i] - eps, 0.0);
    const double hi = std::min(orig[i] + eps, 1.0);
    out[i] = std::min(std::max(adv[i], lo), hi);
  }
}

}  // namespace

const KernelTable kScalarTable{
    "scalar", dot_scalar, axpy_scalar, abs_sum_scalar, sign_step_scalar, clip_project_scalar,
};

}  // namespace heat::kernels::detail
