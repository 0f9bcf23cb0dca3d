#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "heat/ensemble.hpp"
#include "heat/linalg.hpp"
#include "heat/model.hpp"

namespace heat {

// Consensus gradient direction: sum of the top-k singular directions of the
// stacked ensemble gradients, each weighted by its singular value.
struct ConsensusDirection {
  std::vector<double> v_k;
  std::size_t k = 0;
  // sum_{i<=k} sigma_i / sum_i sigma_i
  double retained_ratio = 0.0;
};

// Row m is the raw input gradient of model m's loss at x.
GradientMatrix build_gradient_matrix(std::span<const ClassifierPtr> models, const ImageTensor& x,
                                     int label);
// Same, through the ensemble's evaluation path. `losses`, when given, receives
// the per-model loss at x that came with each gradient.
GradientMatrix build_gradient_matrix(Ensemble& ensemble, const ImageTensor& x, int label,
                                     std::vector<double>* losses = nullptr);

// Copy of g with every nonzero row scaled to unit L2 norm.
GradientMatrix normalize_rows(const GradientMatrix& g);

// Smallest k whose leading singular values carry at least a fraction p of the
// total. Throws EmptySpectrum for an empty spectrum.
std::size_t select_rank(std::span<const double> singular_values, double p);

ConsensusDirection synthesize_direction(const SvdFactors& factors, std::size_t k);

// clip_project(sign_step(x_anchor, v_k, alpha), x_orig, epsilon)
ImageTensor cgrads_step(const ImageTensor& x_anchor, const ImageTensor& x_orig,
                        const ConsensusDirection& direction, double alpha, double epsilon);

}  // namespace heat
