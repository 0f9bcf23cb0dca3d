#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "heat/tensor.hpp"

namespace heat {

inline constexpr double kDefaultEpsStab = 1e-8;

// Factors of a thin SVD, truncated to the numerical rank r.
//   singular_values[i] = sigma_i (nonincreasing, all > sigma_1 * 1e-12)
//   right_vectors[i]   = v_i, length D
//   left_vectors[i]    = u_i, length M
struct SvdFactors {
  std::vector<double> singular_values;
  std::vector<std::vector<double>> right_vectors;
  std::vector<std::vector<double>> left_vectors;

  std::size_t rank() const noexcept { return singular_values.size(); }
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

// a.b / (|a| |b|). Throws ZeroVector when either norm is <= eps_stab.
double cosine_similarity(std::span<const double> a, std::span<const double> b,
                         double eps_stab = kDefaultEpsStab);

// Thin SVD through cyclic Jacobi rotations of the M x M Gram matrix G G^T.
// The rotations are applied one-sided to the rows of G, which converges to
// rows sigma_i v_i^T without forming G G^T explicitly, so small singular
// values keep full relative accuracy.
//
// Sign convention: each (u_i, v_i) pair is flipped so that sum_m u_i[m] >= 0;
// when that sum is within 1e-12 of zero the largest-magnitude entry of u_i is
// made positive.
SvdFactors thin_svd(const GradientMatrix& g);

// min(max(adv, orig - eps, 0), orig + eps, 1), elementwise.
ImageTensor clip_project(const ImageTensor& adv, const ImageTensor& orig, double epsilon);

// x + alpha * sign(direction), sign(0) = 0. Not projected.
ImageTensor sign_step(const ImageTensor& x, std::span<const double> direction, double alpha);

// max_i |a[i] - b[i]|
double linf_distance(std::span<const double> a, std::span<const double> b);

}  // namespace heat
