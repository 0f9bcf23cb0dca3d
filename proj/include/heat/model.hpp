#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "heat/tensor.hpp"

namespace heat {

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// A differentiable classifier with cross-entropy loss against an integer label.
//
// Implementations must be safe to call concurrently; remote classifiers
// serialize requests on their connection internally.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t num_classes() const = 0;

  virtual double loss(std::span<const double> x, int label) const = 0;
  virtual LossGrad loss_and_grad(std::span<const double> x, int label) const = 0;
  virtual int predict(std::span<const double> x) const = 0;

  // Instance a worker thread should use. In-process models return themselves;
  // remote models open a fresh connection so each worker has its own.
  virtual std::shared_ptr<const Classifier> worker_instance(
      std::shared_ptr<const Classifier> self) const {
    return self;
  }

  double loss(const ImageTensor& x, int label) const { return loss(x.values(), label); }
  LossGrad loss_and_grad(const ImageTensor& x, int label) const {
    return loss_and_grad(x.values(), label);
  }
  int predict(const ImageTensor& x) const { return predict(x.values()); }

 protected:
  void check_input(std::span<const double> x) const;
  void check_input(std::span<const double> x, int label) const;
};

using ClassifierPtr = std::shared_ptr<const Classifier>;

// Cross-entropy -log softmax(logits)[label] with log-sum-exp stabilization.
// When the label is the top class the log1p form keeps full relative accuracy
// for losses near zero.
double cross_entropy(std::span<const double> logits, int label);

// softmax(logits) - onehot(label), with the label entry computed as minus the
// sum of the others so it stays accurate when p_label -> 1.
std::vector<double> cross_entropy_residual(std::span<const double> logits, int label);

// argmax with ties toward the smallest index.
int argmax(std::span<const double> scores);

// One affine layer: out = weights (rows x cols, row-major) * in + bias.
struct DenseLayer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weights;
  std::vector<double> bias;
};

// Feed-forward network with tanh between layers and softmax cross-entropy on
// top. A single layer is the linear-softmax model.
class FeedForwardClassifier final : public Classifier {
 public:
  FeedForwardClassifier(std::vector<DenseLayer> layers, std::string kind);

  std::string kind() const override { return kind_; }
  std::size_t input_dim() const override { return layers_.front().cols; }
  std::size_t num_classes() const override { return layers_.back().rows; }

  double loss(std::span<const double> x, int label) const override;
  LossGrad loss_and_grad(std::span<const double> x, int label) const override;
  int predict(std::span<const double> x) const override;

  std::vector<double> logits(std::span<const double> x) const;

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  // Copy with `shift` added to every output bias, i.e. every logit moves by
  // the same constant. Softmax and argmax must not notice.
  FeedForwardClassifier with_logit_shift(double shift) const;

  using Classifier::loss;
  using Classifier::loss_and_grad;
  using Classifier::predict;

 private:
  // Layer activations; activations[0] is the input, back() are the logits.
  std::vector<std::vector<double>> forward(std::span<const double> x) const;

  std::vector<DenseLayer> layers_;
  std::string kind_;
};

// Central differences (L(x + h e_i) - L(x - h e_i)) / 2h per coordinate.
std::vector<double> finite_diff_grad(const Classifier& model, std::span<const double> x,
                                     int label, double h);

// Reads the JSON model format:
//   {"kind": "linear-softmax"|"mlp", "input_dim": D, "num_classes": K,
//    "activation": "tanh",
//    "layers": [{"rows": R, "cols": C, "weights": [R*C], "bias": [R]}, ...]}
std::shared_ptr<FeedForwardClassifier> load_model(const std::filesystem::path& path);
std::shared_ptr<FeedForwardClassifier> parse_model(const std::string& text,
                                                   const std::string& origin = "<memory>");

// Serializes in the same format, 17 significant digits per number.
std::string serialize_model(const FeedForwardClassifier& model);

}  // namespace heat
