#include "heat/dharmo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "heat/cgrads.hpp"

namespace heat {

namespace {

WeightVector normalized(std::vector<double> raw, WeightKind kind) {
  const double total = order_free_sum(raw);
  for (double& w : raw) w /= total;
  return {std::move(raw), kind};
}

double xlogx(double t) { return t > 0.0 ? t * std::log(t) : 0.0; }

}  // namespace

WeightVector WeightVector::uniform(std::size_t m, WeightKind kind) {
  return {std::vector<double>(m, 1.0 / static_cast<double>(m)), kind};
}

double order_free_sum(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double v : sorted) total += v;
  return total;
}

WeightVector intra_weights(std::span<const ClassifierPtr> models, const ImageTensor& x_anchor,
                           const ImageTensor& x_orig, int label, double alpha, double epsilon,
                           double eps_stab) {
  Ensemble ensemble(models);
  if (ensemble.size() == 1) return WeightVector::uniform(1, WeightKind::Intra);
  const GradientMatrix grads = build_gradient_matrix(ensemble, x_anchor, label);
  return intra_weights(ensemble, grads, x_anchor, x_orig, label, alpha, epsilon, eps_stab);
}

WeightVector intra_weights(Ensemble& ensemble, const GradientMatrix& anchor_grads,
                           const ImageTensor& x_anchor, const ImageTensor& x_orig, int label,
                           double alpha, double epsilon, double eps_stab) {
  const std::size_t count = ensemble.size();
  if (count == 1) return WeightVector::uniform(1, WeightKind::Intra);
  if (anchor_grads.rows() != count) {
    throw Error(ErrorCode::LengthMismatch, "anchor gradients do not match the ensemble size");
  }

  // cross[m][j] = L_j(probe_m)
  std::vector<std::vector<double>> cross(count, std::vector<double>(count));
  for (std::size_t m = 0; m < count; ++m) {
    const ImageTensor probe =
        clip_project(sign_step(x_anchor, anchor_grads.row(m), alpha), x_orig, epsilon);
    for (std::size_t j = 0; j < count; ++j) cross[m][j] = ensemble.loss(j, probe, label);
  }

  std::vector<double> raw(count);
  std::vector<double> terms;
  for (std::size_t m = 0; m < count; ++m) {
    terms.clear();
    for (std::size_t j = 0; j < count; ++j) {
      if (j == m) continue;
      terms.push_back(std::log(cross[m][j] + eps_stab) / (cross[j][j] + eps_stab));
    }
    raw[m] = std::max(order_free_sum(terms), eps_stab);
  }
  return normalized(std::move(raw), WeightKind::Intra);
}

std::vector<double> loss_contributions(std::span<const ClassifierPtr> models,
                                       const ImageTensor& x_vk, int label, double eps_stab) {
  std::vector<double> s;
  s.reserve(models.size());
  for (const auto& model : models) s.push_back(model->loss(x_vk, label) + eps_stab);
  return s;
}

std::vector<double> alignment_contributions(const GradientMatrix& grads, double eps_stab) {
  const std::size_t count = grads.rows();
  if (count < 2) {
    throw Error(ErrorCode::EnsembleTooSmall, "alignment needs at least two models");
  }
  std::vector<std::vector<double>> sim(count, std::vector<double>(count, 0.0));
  for (std::size_t m = 0; m < count; ++m) {
    for (std::size_t j = m + 1; j < count; ++j) {
      double p = 0.0;
      try {
        p = cosine_similarity(grads.row(m), grads.row(j), eps_stab);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroVector) throw;
      }
      sim[m][j] = sim[j][m] = p;
    }
  }
  std::vector<double> a(count);
  std::vector<double> others;
  for (std::size_t m = 0; m < count; ++m) {
    others.clear();
    for (std::size_t j = 0; j < count; ++j) {
      if (j != m) others.push_back(sim[m][j]);
    }
    const double mean = order_free_sum(others) / static_cast<double>(count - 1);
    a[m] = 1.0 / (std::max(mean, 0.0) + eps_stab);
  }
  return a;
}

std::vector<double> temperature_normalize(std::span<const double> v, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::NonPositiveTau, "tau must be > 0");
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw Error(ErrorCode::NonPositiveEntry, "temperature normalization needs positive entries");
    }
  }
  const double total = order_free_sum(v);
  std::vector<double> out(v.size());
  for (std::size_t m = 0; m < v.size(); ++m) {
    const double share = v[m] / total;
    out[m] = tau == 1.0 ? share : std::pow(share, 1.0 / tau);
  }
  return out;
}

std::vector<double> contribution_entropies(std::span<const double> s_norm,
                                           std::span<const double> a_norm) {
  if (s_norm.size() != a_norm.size()) {
    throw Error(ErrorCode::LengthMismatch, "contribution vectors differ in length");
  }
  std::vector<double> h(s_norm.size());
  for (std::size_t m = 0; m < s_norm.size(); ++m) {
    for (double t : {s_norm[m], a_norm[m]}) {
      if (!(t >= 0.0 && t <= 1.0)) {
        throw Error(ErrorCode::OutOfRangeEntry,
                    "normalized contribution " + std::to_string(t) + " outside [0, 1]");
      }
    }
    h[m] = -(xlogx(s_norm[m]) + xlogx(a_norm[m]));
  }
  return h;
}

WeightVector entropy_weights(std::span<const double> s_norm, std::span<const double> a_norm,
                             double eps_stab) {
  std::vector<double> raw = contribution_entropies(s_norm, a_norm);
  for (double& h : raw) h = 1.0 / (h + eps_stab);
  return normalized(std::move(raw), WeightKind::Inter);
}

}  // namespace heat
