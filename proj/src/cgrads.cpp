#include "heat/cgrads.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace heat {

GradientMatrix build_gradient_matrix(std::span<const ClassifierPtr> models, const ImageTensor& x,
                                     int label) {
  Ensemble ensemble(models);
  return build_gradient_matrix(ensemble, x, label);
}

GradientMatrix build_gradient_matrix(Ensemble& ensemble, const ImageTensor& x, int label,
                                     std::vector<double>* losses) {
  GradientMatrix g(ensemble.size(), ensemble.input_dim());
  if (losses) losses->assign(ensemble.size(), 0.0);
  for (std::size_t m = 0; m < ensemble.size(); ++m) {
    LossGrad lg = ensemble.loss_and_grad(m, x, label);
    if (lg.grad.size() != g.cols()) {
      throw Error(ErrorCode::EnsembleMismatch, "model " + std::to_string(m) +
                                                   " returned a gradient of length " +
                                                   std::to_string(lg.grad.size()));
    }
    std::copy(lg.grad.begin(), lg.grad.end(), g.row(m).begin());
    if (losses) (*losses)[m] = lg.loss;
  }
  return g;
}

GradientMatrix normalize_rows(const GradientMatrix& g) {
  GradientMatrix out = g;
  for (std::size_t m = 0; m < out.rows(); ++m) {
    auto row = out.row(m);
    const double n = norm2(row);
    if (n > 0.0) {
      for (double& v : row) v /= n;
    }
  }
  return out;
}

std::size_t select_rank(std::span<const double> singular_values, double p) {
  if (singular_values.empty()) throw Error(ErrorCode::EmptySpectrum, "no singular values retained");
  if (!(p > 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "contribution ratio p must be in (0, 1]");
  }
  const double total = std::accumulate(singular_values.begin(), singular_values.end(), 0.0);
  double running = 0.0;
  for (std::size_t k = 0; k < singular_values.size(); ++k) {
    running += singular_values[k];
    if (running / total >= p) return k + 1;
  }
  return singular_values.size();
}

ConsensusDirection synthesize_direction(const SvdFactors& factors, std::size_t k) {
  if (k < 1 || k > factors.rank()) {
    throw Error(ErrorCode::RankOutOfRange, "k=" + std::to_string(k) + " outside [1, " +
                                               std::to_string(factors.rank()) + "]");
  }
  ConsensusDirection out;
  out.k = k;
  out.v_k.assign(factors.right_vectors.front().size(), 0.0);
  double kept = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double sigma = factors.singular_values[i];
    const auto& v = factors.right_vectors[i];
    for (std::size_t d = 0; d < v.size(); ++d) out.v_k[d] += sigma * v[d];
    kept += sigma;
  }
  const double total =
      std::accumulate(factors.singular_values.begin(), factors.singular_values.end(), 0.0);
  out.retained_ratio = kept / total;
  return out;
}

ImageTensor cgrads_step(const ImageTensor& x_anchor, const ImageTensor& x_orig,
                        const ConsensusDirection& direction, double alpha, double epsilon) {
  return clip_project(sign_step(x_anchor, direction.v_k, alpha), x_orig, epsilon);
}

}  // namespace heat
