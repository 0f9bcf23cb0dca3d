#include "heat/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "heat/kernels.hpp"

namespace heat {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kRankCutoff = 1e-12;
constexpr double kSignTie = 1e-12;

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": lengths " + std::to_string(a) +
                                              " and " + std::to_string(b));
  }
}

// Rotates rows i and j of `rows` (and columns i and j of `basis`) so that the
// two rows become orthogonal.
void rotate_pair(std::vector<double>& rows, std::vector<double>& basis, std::size_t m,
                 std::size_t d, std::size_t i, std::size_t j, double cs, double sn) {
  double* ri = rows.data() + i * d;
  double* rj = rows.data() + j * d;
  for (std::size_t k = 0; k < d; ++k) {
    const double a = ri[k];
    const double b = rj[k];
    ri[k] = cs * a - sn * b;
    rj[k] = sn * a + cs * b;
  }
  for (std::size_t k = 0; k < m; ++k) {
    const double a = basis[k * m + i];
    const double b = basis[k * m + j];
    basis[k * m + i] = cs * a - sn * b;
    basis[k * m + j] = sn * a + cs * b;
  }
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  check_same_size(a.size(), b.size(), "dot");
  return kernels::active().dot(a.data(), b.data(), a.size());
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine_similarity(std::span<const double> a, std::span<const double> b, double eps_stab) {
  check_same_size(a.size(), b.size(), "cosine_similarity");
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na <= eps_stab || nb <= eps_stab) {
    throw Error(ErrorCode::ZeroVector, "cosine similarity of a degenerate vector");
  }
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

SvdFactors thin_svd(const GradientMatrix& g) {
  if (!g.all_finite()) throw Error(ErrorCode::NotFinite, "gradient matrix has NaN/Inf entries");
  const std::size_t m = g.rows();
  const std::size_t d = g.cols();
  SvdFactors out;
  if (m == 0 || d == 0) return out;

  const auto& k = kernels::active();
  std::vector<double> rows(g.values().begin(), g.values().end());
  std::vector<double> basis(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) basis[i * m + i] = 1.0;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        const double* ri = rows.data() + i * d;
        const double* rj = rows.data() + j * d;
        // Gram entries (G G^T)_ii, _jj, _ij of the current iterate.
        const double a = k.dot(ri, ri, d);
        const double b = k.dot(rj, rj, d);
        const double c = k.dot(ri, rj, d);
        if (c == 0.0 || std::fabs(c) <= 1e-15 * std::sqrt(a * b)) continue;
        rotated = true;
        const double zeta = (b - a) / (2.0 * c);
        const double t = std::fabs(zeta) > 1e150
                             ? 1.0 / (2.0 * zeta)
                             : std::copysign(1.0, zeta) / (std::fabs(zeta) + std::hypot(1.0, zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        rotate_pair(rows, basis, m, d, i, j, cs, cs * t);
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* ri = rows.data() + i * d;
    sigma[i] = std::sqrt(k.dot(ri, ri, d));
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  const double top = sigma[order.front()];
  if (top <= 0.0) return out;
  for (std::size_t idx : order) {
    const double s = sigma[idx];
    if (s <= top * kRankCutoff) break;

    std::vector<double> u(m);
    for (std::size_t r = 0; r < m; ++r) u[r] = basis[r * m + idx];
    std::vector<double> v(rows.begin() + idx * d, rows.begin() + (idx + 1) * d);
    for (double& x : v) x /= s;

    const double total = std::accumulate(u.begin(), u.end(), 0.0);
    bool flip = total < 0.0;
    if (std::fabs(total) <= kSignTie) {
      const auto largest = std::max_element(
          u.begin(), u.end(), [](double x, double y) { return std::fabs(x) < std::fabs(y); });
      flip = *largest < 0.0;
    }
    if (flip) {
      for (double& x : u) x = -x;
      for (double& x : v) x = -x;
    }
    out.singular_values.push_back(s);
    out.left_vectors.push_back(std::move(u));
    out.right_vectors.push_back(std::move(v));
  }
  return out;
}

ImageTensor clip_project(const ImageTensor& adv, const ImageTensor& orig, double epsilon) {
  check_same_size(adv.size(), orig.size(), "clip_project");
  if (!(adv.shape() == orig.shape())) throw Error(ErrorCode::ShapeMismatch, "clip_project shapes");
  ImageTensor out(adv.shape());
  kernels::active().clip_project(adv.values().data(), orig.values().data(), epsilon,
                                 out.values().data(), adv.size());
  return out;
}

ImageTensor sign_step(const ImageTensor& x, std::span<const double> direction, double alpha) {
  check_same_size(x.size(), direction.size(), "sign_step");
  ImageTensor out(x.shape());
  kernels::active().sign_step(x.values().data(), direction.data(), alpha, out.values().data(),
                              x.size());
  return out;
}

double linf_distance(std::span<const double> a, std::span<const double> b) {
  check_same_size(a.size(), b.size(), "linf_distance");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
  return worst;
}

}  // namespace heat
