// Regenerates the fixture dataset and the model zoo.
//
// Data: 10-class Gaussian blobs rendered as 3x8x8 images. Each class has a
// prototype image; samples add i.i.d. pixel noise and clamp to [0,1].
// Models: tanh MLPs / linear-softmax trained with Adam on a separate training
// draw from the same distribution. Everything is seeded; rerunning produces
// byte-identical files.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "heat/dataset.hpp"
#include "heat/kernels.hpp"
#include "heat/model.hpp"
#include "heat/random.hpp"

namespace fs = std::filesystem;
using namespace heat;

namespace {

double gaussian(Rng& rng) {
  // Box-Muller; uniform01 can return 0, so shift into (0, 1].
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

struct BlobSpec {
  std::size_t classes = 10;
  Shape shape{3, 8, 8};
  double spread = 0.05;  // prototype deviation from mid-grey
  double noise = 0.15;   // per-pixel sample noise
};

std::vector<std::vector<double>> prototypes(const BlobSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> protos(spec.classes, std::vector<double>(spec.shape.size()));
  for (auto& p : protos) {
    for (double& v : p) v = 0.5 + spec.spread * gaussian(rng);
  }
  return protos;
}

Dataset draw_blobs(const BlobSpec& spec, const std::vector<std::vector<double>>& protos,
                   std::size_t per_class, std::uint64_t seed, const std::string& name) {
  Rng rng(seed);
  Dataset ds;
  ds.name = name;
  ds.num_classes = spec.classes;
  ds.shape = spec.shape;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < spec.classes; ++c) {
      std::vector<double> x(spec.shape.size());
      for (std::size_t d = 0; d < x.size(); ++d) {
        // Round to 1/1024 so the committed file stays compact and exact.
        const double v = std::clamp(protos[c][d] + spec.noise * gaussian(rng), 0.0, 1.0);
        x[d] = std::round(v * 1024.0) / 1024.0;
      }
      ds.samples.push_back({ImageTensor(spec.shape, std::move(x)), static_cast<int>(c)});
    }
  }
  return ds;
}

struct ModelSpec {
  std::string id;
  std::vector<std::size_t> hidden;
  std::uint64_t seed;
  int epochs;
};

struct Adam {
  std::vector<double> m, v;
  int t = 0;
  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
  void step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
    ++t;
    const double b1 = 0.9, b2 = 0.999;
    const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = b1 * m[i] + (1 - b1) * grad[i];
      v[i] = b2 * v[i] + (1 - b2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + 1e-8);
    }
  }
};

FeedForwardClassifier train(const ModelSpec& spec, const Dataset& data, double lr,
                            double weight_decay, double* final_loss) {
  Rng rng(spec.seed);
  std::vector<std::size_t> sizes{data.input_dim()};
  sizes.insert(sizes.end(), spec.hidden.begin(), spec.hidden.end());
  sizes.push_back(data.num_classes);

  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer layer{sizes[l + 1], sizes[l], {}, std::vector<double>(sizes[l + 1], 0.0)};
    const double scale = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    layer.weights.resize(layer.rows * layer.cols);
    for (double& w : layer.weights) w = scale * gaussian(rng);
    layers.push_back(std::move(layer));
  }
  std::vector<Adam> w_opt, b_opt;
  for (const auto& layer : layers) {
    w_opt.emplace_back(layer.weights.size());
    b_opt.emplace_back(layer.bias.size());
  }

  const std::size_t n = data.samples.size();
  const std::size_t batch = 50;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  double epoch_loss = 0.0;
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long long>(i)))]);
    }
    epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      std::vector<std::vector<double>> gw, gb;
      for (const auto& layer : layers) {
        gw.emplace_back(layer.weights.size(), 0.0);
        gb.emplace_back(layer.bias.size(), 0.0);
      }
      for (std::size_t s = start; s < stop; ++s) {
        const LabeledSample& sample = data.samples[order[s]];
        std::vector<std::vector<double>> acts{sample.x.data()};
        for (std::size_t l = 0; l < layers.size(); ++l) {
          std::vector<double> z(layers[l].rows);
          kernels::gemv(layers[l].weights.data(), layers[l].bias.data(), acts.back().data(), z.data(),
                        layers[l].rows, layers[l].cols);
          if (l + 1 < layers.size()) {
            for (double& v : z) v = std::tanh(v);
          }
          acts.push_back(std::move(z));
        }
        epoch_loss += cross_entropy(acts.back(), sample.y);
        std::vector<double> delta = cross_entropy_residual(acts.back(), sample.y);
        for (std::size_t l = layers.size(); l-- > 0;) {
          const DenseLayer& layer = layers[l];
          for (std::size_t r = 0; r < layer.rows; ++r) {
            gb[l][r] += delta[r];
            kernels::active().axpy(delta[r], acts[l].data(), gw[l].data() + r * layer.cols, layer.cols);
          }
          if (l == 0) break;
          std::vector<double> back(layer.cols);
          kernels::gemv_transposed(layer.weights.data(), delta.data(), back.data(), layer.rows, layer.cols);
          for (std::size_t i = 0; i < back.size(); ++i) back[i] *= 1.0 - acts[l][i] * acts[l][i];
          delta = std::move(back);
        }
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t l = 0; l < layers.size(); ++l) {
        for (std::size_t i = 0; i < gw[l].size(); ++i) gw[l][i] = gw[l][i] * inv + weight_decay * layers[l].weights[i];
        for (double& g : gb[l]) g *= inv;
        w_opt[l].step(layers[l].weights, gw[l], lr);
        b_opt[l].step(layers[l].bias, gb[l], lr);
      }
    }
  }
  *final_loss = epoch_loss / static_cast<double>(n);
  return FeedForwardClassifier(std::move(layers), spec.hidden.empty() ? "linear-softmax" : "mlp");
}

double accuracy(const Classifier& model, const Dataset& data) {
  std::size_t ok = 0;
  for (const auto& s : data.samples) ok += model.predict(s.x) == s.y;
  return 100.0 * static_cast<double>(ok) / static_cast<double>(data.samples.size());
}

void write(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regenerate the fixture dataset and model zoo"};
  fs::path root = ".";
  BlobSpec spec;
  std::uint64_t seed = 20240611;
  std::size_t train_per_class = 150;
  std::size_t eval_per_class = 20;
  double lr = 0.01;
  double weight_decay = 1e-3;
  app.add_option("--root", root, "Repository root (fixtures/ and zoo/ are written below it)");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--spread", spec.spread, "Class prototype spread around 0.5");
  app.add_option("--noise", spec.noise, "Per-pixel noise");
  app.add_option("--train-per-class", train_per_class);
  app.add_option("--eval-per-class", eval_per_class);
  app.add_option("--lr", lr);
  app.add_option("--weight-decay", weight_decay);
  CLI11_PARSE(app, argc, argv);

  kernels::select("scalar");
  const auto protos = prototypes(spec, derive_seed(seed, 0));
  const Dataset train_set = draw_blobs(spec, protos, train_per_class, derive_seed(seed, 1), "blobs64-train");
  const Dataset eval_set = draw_blobs(spec, protos, eval_per_class, derive_seed(seed, 2), "blobs64");

  fs::create_directories(root / "fixtures");
  fs::create_directories(root / "zoo");
  write(root / "fixtures" / "blobs64.jsonl", serialize_dataset(eval_set));

  const std::vector<ModelSpec> zoo{
      {"linear_a", {}, 101, 40},       {"linear_b", {}, 102, 40},
      {"mlp_a", {32}, 103, 40},        {"mlp_b", {64}, 104, 40},
      {"target_a", {48}, 201, 80},     {"target_b", {96}, 202, 40},
      {"target_c", {24}, 203, 40},     {"target_d", {48, 24}, 204, 60},
  };
  int status = 0;
  for (const auto& m : zoo) {
    double final_loss = 0.0;
    const FeedForwardClassifier model = train(m, train_set, lr, weight_decay, &final_loss);
    const double train_acc = accuracy(model, train_set);
    const double eval_acc = accuracy(model, eval_set);
    std::printf("%-9s train-loss %.4f train-acc %6.2f%% eval-acc %6.2f%%\n", m.id.c_str(), final_loss,
                train_acc, eval_acc);
    if (eval_acc < 95.0) status = 1;
    write(root / "zoo" / (m.id + ".json"), serialize_model(model));
  }
  if (status) std::fprintf(stderr, "warning: a model is below 95%% clean accuracy\n");
  return status;
}
