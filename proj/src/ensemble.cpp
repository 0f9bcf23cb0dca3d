#include "heat/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

namespace heat {

DiversityTransform::DiversityTransform(Shape shape) : shape_(shape) {}

DiversityTransform::DiversityTransform(Shape shape, std::size_t side_h, std::size_t side_w,
                                       std::size_t top, std::size_t left)
    : shape_(shape), identity_(false) {
  const std::size_t h = shape.height;
  const std::size_t w = shape.width;
  if (side_h == 0 || side_w == 0 || top + side_h > h || left + side_w > w) {
    throw Error(ErrorCode::ShapeMismatch, "diversity placement outside the canvas");
  }
  if (side_h == h && side_w == w) {
    identity_ = true;
    return;
  }
  // Source coordinate of destination index `dst` under half-pixel sampling,
  // clamped the same way as common bilinear resize implementations.
  const auto source = [](std::size_t dst, std::size_t in, std::size_t out) {
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    const double src = std::max((static_cast<double>(dst) + 0.5) * scale - 0.5, 0.0);
    const auto i0 = std::min(static_cast<std::size_t>(src), in - 1);
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    const double frac = src - static_cast<double>(i0);
    return std::tuple{i0, i1, frac};
  };

  taps_.assign(h * w, {});
  for (std::size_t oy = 0; oy < side_h; ++oy) {
    const auto [y0, y1, fy] = source(oy, h, side_h);
    for (std::size_t ox = 0; ox < side_w; ++ox) {
      const auto [x0, x1, fx] = source(ox, w, side_w);
      auto& taps = taps_[(top + oy) * w + (left + ox)];
      const double wy[2] = {1.0 - fy, fy};
      const double wx[2] = {1.0 - fx, fx};
      const std::size_t ys[2] = {y0, y1};
      const std::size_t xs[2] = {x0, x1};
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          const double weight = wy[a] * wx[b];
          if (weight != 0.0) taps.push_back({ys[a] * w + xs[b], weight});
        }
      }
    }
  }
}

DiversityTransform DiversityTransform::draw(Shape shape, double resize_rate, double prob,
                                            Rng& rng) {
  if (!(uniform01(rng) < prob)) return DiversityTransform(shape);
  const std::size_t h = shape.height;
  const std::size_t w = shape.width;
  const auto lo = std::max<long long>(1, std::llround(resize_rate * static_cast<double>(h)));
  const auto side_h = static_cast<std::size_t>(uniform_int(rng, std::min<long long>(lo, h), h));
  const auto side_w = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(static_cast<double>(side_h * w) / h)), 1, w);
  const auto top = static_cast<std::size_t>(uniform_int(rng, 0, h - side_h));
  const auto left = static_cast<std::size_t>(uniform_int(rng, 0, w - side_w));
  return DiversityTransform(shape, side_h, side_w, top, left);
}

ImageTensor DiversityTransform::apply(const ImageTensor& x) const {
  if (!(x.shape() == shape_)) throw Error(ErrorCode::ShapeMismatch, "diversity input shape");
  if (identity_) return x;
  ImageTensor out(shape_, 0.0);
  const std::size_t plane = shape_.height * shape_.width;
  for (std::size_t c = 0; c < shape_.channels; ++c) {
    const std::size_t base = c * plane;
    for (std::size_t o = 0; o < plane; ++o) {
      double acc = 0.0;
      for (const Tap& t : taps_[o]) acc += t.weight * x[base + t.src];
      out[base + o] = acc;
    }
  }
  return out;
}

std::vector<double> DiversityTransform::apply_transposed(std::span<const double> grad) const {
  if (grad.size() != shape_.size()) throw Error(ErrorCode::ShapeMismatch, "diversity grad shape");
  if (identity_) return {grad.begin(), grad.end()};
  std::vector<double> out(grad.size(), 0.0);
  const std::size_t plane = shape_.height * shape_.width;
  for (std::size_t c = 0; c < shape_.channels; ++c) {
    const std::size_t base = c * plane;
    for (std::size_t o = 0; o < plane; ++o) {
      for (const Tap& t : taps_[o]) out[base + t.src] += t.weight * grad[base + o];
    }
  }
  return out;
}

ImageTensor input_diversity(const ImageTensor& x, double resize_rate, double prob, Rng& rng) {
  if (!(resize_rate > 0.0 && resize_rate <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "resize_rate must be in (0, 1]");
  }
  return DiversityTransform::draw(x.shape(), resize_rate, prob, rng).apply(x);
}

Ensemble::Ensemble(std::span<const ClassifierPtr> models) : models_(models) {
  if (models_.empty()) throw Error(ErrorCode::EnsembleTooSmall, "ensemble needs at least one model");
  const std::size_t d = models_.front()->input_dim();
  const std::size_t k = models_.front()->num_classes();
  for (const auto& m : models_) {
    if (m->input_dim() != d || m->num_classes() != k) {
      throw Error(ErrorCode::EnsembleMismatch,
                  "ensemble members disagree on input_dim/num_classes (" + std::to_string(d) + "/" +
                      std::to_string(k) + " vs " + std::to_string(m->input_dim()) + "/" +
                      std::to_string(m->num_classes()) + ")");
    }
  }
}

Ensemble::Ensemble(std::span<const ClassifierPtr> models, DiversitySettings diversity, Rng& rng)
    : Ensemble(models) {
  diversity_ = diversity;
  rng_ = &rng;
}

double Ensemble::loss(std::size_t m, const ImageTensor& x, int label) {
  if (!diversity_) return models_[m]->loss(x, label);
  const auto t = DiversityTransform::draw(x.shape(), diversity_->resize_rate, diversity_->prob, *rng_);
  return models_[m]->loss(t.apply(x), label);
}

LossGrad Ensemble::loss_and_grad(std::size_t m, const ImageTensor& x, int label) {
  if (!diversity_) return models_[m]->loss_and_grad(x, label);
  const auto t = DiversityTransform::draw(x.shape(), diversity_->resize_rate, diversity_->prob, *rng_);
  LossGrad out = models_[m]->loss_and_grad(t.apply(x), label);
  out.grad = t.apply_transposed(out.grad);
  return out;
}

}  // namespace heat
