#pragma once
// Small hand-checkable classifiers and fixture helpers shared by the tests.

#include <cmath>
#include <filesystem>
#include <memory>
#include <vector>

#include "heat/dataset.hpp"
#include "heat/error.hpp"
#include "heat/model.hpp"
#include "heat/random.hpp"

// Asserts that `stmt` throws heat::Error with the given code.
#define EXPECT_HEAT_ERROR(stmt, expected_code)                       \
  try {                                                               \
    stmt;                                                             \
    ADD_FAILURE() << "expected " << ::heat::to_string(expected_code); \
  } catch (const ::heat::Error& e) {                                  \
    EXPECT_EQ(e.code(), expected_code) << e.what();                   \
  }

namespace heat::testing {

inline std::filesystem::path source_dir() { return HEAT_SOURCE_DIR; }
inline std::filesystem::path zoo_path(const std::string& name) {
  return source_dir() / "zoo" / (name + ".json");
}
inline const Dataset& fixture_dataset() {
  static const Dataset ds = load_dataset(source_dir() / "fixtures" / "blobs64.jsonl");
  return ds;
}
inline std::vector<ClassifierPtr> load_zoo(const std::vector<std::string>& names) {
  std::vector<ClassifierPtr> out;
  for (const auto& n : names) out.push_back(load_model(zoo_path(n)));
  return out;
}
inline std::vector<ClassifierPtr> fixture_surrogates() {
  return load_zoo({"linear_a", "linear_b", "mlp_a", "mlp_b"});
}
inline std::vector<ClassifierPtr> fixture_targets() {
  return load_zoo({"target_a", "target_b", "target_c", "target_d"});
}

// Every class gets the same logit: p = 1/K everywhere.
class UniformModel final : public Classifier {
 public:
  UniformModel(std::size_t dim, std::size_t classes) : dim_(dim), classes_(classes) {}
  std::string kind() const override { return "uniform"; }
  std::size_t input_dim() const override { return dim_; }
  std::size_t num_classes() const override { return classes_; }
  double loss(std::span<const double> x, int label) const override {
    check_input(x, label);
    return std::log(static_cast<double>(classes_));
  }
  LossGrad loss_and_grad(std::span<const double> x, int label) const override {
    return {loss(x, label), std::vector<double>(dim_, 0.0)};
  }
  int predict(std::span<const double> x) const override {
    check_input(x);
    return 0;
  }
  using Classifier::loss;
  using Classifier::loss_and_grad;
  using Classifier::predict;

 private:
  std::size_t dim_, classes_;
};

// L(x) = |x|^2, label ignored.
class QuadraticModel final : public Classifier {
 public:
  explicit QuadraticModel(std::size_t dim) : dim_(dim) {}
  std::string kind() const override { return "quadratic"; }
  std::size_t input_dim() const override { return dim_; }
  std::size_t num_classes() const override { return 2; }
  double loss(std::span<const double> x, int) const override {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
  }
  LossGrad loss_and_grad(std::span<const double> x, int label) const override {
    LossGrad out{loss(x, label), {}};
    for (double v : x) out.grad.push_back(2.0 * v);
    return out;
  }
  int predict(std::span<const double>) const override { return 0; }
  using Classifier::loss;
  using Classifier::loss_and_grad;
  using Classifier::predict;

 private:
  std::size_t dim_;
};

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = lo + (hi - lo) * uniform01(rng);
  return v;
}

// Standard normal draw (Box-Muller), for weight initialization in tests.
inline double normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Random tanh network with the given layer widths (input first, classes last).
inline std::shared_ptr<FeedForwardClassifier> random_network(Rng& rng, std::vector<std::size_t> widths,
                                                             double scale = 1.0) {
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer{widths[l + 1], widths[l], {}, {}};
    const double s = scale / std::sqrt(static_cast<double>(widths[l]));
    for (std::size_t i = 0; i < layer.rows * layer.cols; ++i) layer.weights.push_back(s * normal(rng));
    for (std::size_t i = 0; i < layer.rows; ++i) layer.bias.push_back(0.1 * normal(rng));
    layers.push_back(std::move(layer));
  }
  return std::make_shared<FeedForwardClassifier>(std::move(layers),
                                                 widths.size() == 2 ? "linear-softmax" : "mlp");
}

}  // namespace heat::testing
