#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "heat/ensemble.hpp"
#include "heat/linalg.hpp"
#include "heat/model.hpp"

namespace heat {

enum class WeightKind { Intra, Inter };

// Nonnegative per-model weights summing to one.
struct WeightVector {
  std::vector<double> weights;
  WeightKind kind = WeightKind::Intra;

  std::size_t size() const noexcept { return weights.size(); }
  double operator[](std::size_t m) const { return weights[m]; }

  static WeightVector uniform(std::size_t m, WeightKind kind);
};

// Sum that does not depend on the order of `values` (they are summed in
// sorted order). Used wherever a permutation of the ensemble must permute the
// result bit for bit.
double order_free_sum(std::span<const double> values);

// Intra-domain coherence weights.
//
// For every model m a probe x_m = clip(x_anchor + alpha sign(grad_m), x_orig, eps)
// is built from its own gradient at the anchor. With L_j^self the loss of model
// j on its own probe, the raw score of m is
//   sum_{j != m} log(L_j(x_m) + eps_stab) / (L_j^self + eps_stab),
// floored at eps_stab and normalized to the simplex. A single model gets (1).
WeightVector intra_weights(std::span<const ClassifierPtr> models, const ImageTensor& x_anchor,
                           const ImageTensor& x_orig, int label, double alpha, double epsilon,
                           double eps_stab);
// Same, reusing gradients at the anchor that were already evaluated.
WeightVector intra_weights(Ensemble& ensemble, const GradientMatrix& anchor_grads,
                           const ImageTensor& x_anchor, const ImageTensor& x_orig, int label,
                           double alpha, double epsilon, double eps_stab);

// S_m = L_m(x_vk) + eps_stab
std::vector<double> loss_contributions(std::span<const ClassifierPtr> models,
                                       const ImageTensor& x_vk, int label, double eps_stab);

// A_m = 1 / (max(mean_{j != m} cos(g_m, g_j), 0) + eps_stab); a degenerate
// (near-zero) row contributes similarity 0. Requires M >= 2.
std::vector<double> alignment_contributions(const GradientMatrix& grads, double eps_stab);

// (v_m / sum v)^(1/tau)
std::vector<double> temperature_normalize(std::span<const double> v, double tau);

// H_m = -(s_m ln s_m + a_m ln a_m), weights 1/(H_m + eps_stab) normalized.
WeightVector entropy_weights(std::span<const double> s_norm, std::span<const double> a_norm,
                             double eps_stab);

// Per-model entropies used by entropy_weights, with t ln t = 0 at t = 0.
std::vector<double> contribution_entropies(std::span<const double> s_norm,
                                           std::span<const double> a_norm);

}  // namespace heat
