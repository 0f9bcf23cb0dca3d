#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "heat/model.hpp"
#include "heat/random.hpp"
#include "heat/tensor.hpp"

namespace heat {

// Random resize-and-pad of the input (DI). The map is linear in the input:
// every output pixel is a bilinear blend of at most four input pixels of the
// same channel, or zero padding. Keeping it as an explicit linear map lets
// gradients flow back through it exactly.
class DiversityTransform {
 public:
  // Identity on `shape`.
  explicit DiversityTransform(Shape shape);

  // Bilinear resize (half-pixel centers) of the H x W plane to
  // side_h x side_w, placed at (top, left) inside a zero H x W canvas.
  DiversityTransform(Shape shape, std::size_t side_h, std::size_t side_w, std::size_t top,
                     std::size_t left);

  // Draws the transform: with probability `prob` a side length uniform in
  // [round(resize_rate * H), H] (width scaled to keep the aspect) and a
  // uniform offset; otherwise the identity.
  static DiversityTransform draw(Shape shape, double resize_rate, double prob, Rng& rng);

  bool is_identity() const noexcept { return identity_; }

  ImageTensor apply(const ImageTensor& x) const;
  // Adjoint: pulls a gradient w.r.t. the transformed input back to the input.
  std::vector<double> apply_transposed(std::span<const double> grad) const;

 private:
  struct Tap {
    std::size_t src;  // plane offset
    double weight;
  };

  Shape shape_;
  bool identity_ = true;
  // taps_[o] are the plane taps for output plane position o (empty = padding).
  std::vector<std::vector<Tap>> taps_;
};

ImageTensor input_diversity(const ImageTensor& x, double resize_rate, double prob, Rng& rng);

// Settings for drawing a fresh DiversityTransform per model evaluation.
struct DiversitySettings {
  double resize_rate = 0.9;
  double prob = 0.5;
};

// The surrogate ensemble as seen by the attack: per-model loss and input
// gradient, optionally through a fresh input-diversity draw for every single
// evaluation. Not thread-safe when diversity is on (it owns the rng stream).
class Ensemble {
 public:
  explicit Ensemble(std::span<const ClassifierPtr> models);
  Ensemble(std::span<const ClassifierPtr> models, DiversitySettings diversity, Rng& rng);

  std::size_t size() const noexcept { return models_.size(); }
  std::size_t input_dim() const noexcept { return models_.front()->input_dim(); }
  const Classifier& model(std::size_t m) const { return *models_[m]; }
  bool has_diversity() const noexcept { return diversity_.has_value(); }

  double loss(std::size_t m, const ImageTensor& x, int label);
  LossGrad loss_and_grad(std::size_t m, const ImageTensor& x, int label);

 private:
  std::span<const ClassifierPtr> models_;
  std::optional<DiversitySettings> diversity_;
  Rng* rng_ = nullptr;
};

}  // namespace heat
