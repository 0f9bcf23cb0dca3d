#include "heat/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "heat/kernels.hpp"

namespace heat {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& origin, const std::string& what) {
  throw Error(ErrorCode::ParseError, origin + ": " + what);
}

std::size_t read_size(const json& obj, const char* field, const std::string& origin) {
  if (!obj.contains(field)) parse_fail(origin, std::string("missing field '") + field + "'");
  const json& v = obj.at(field);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    parse_fail(origin, std::string("field '") + field + "' must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

std::vector<double> read_reals(const json& obj, const char* field, std::size_t expected,
                               const std::string& origin, const std::string& where) {
  if (!obj.contains(field) || !obj.at(field).is_array()) {
    parse_fail(origin, where + ": missing array field '" + field + "'");
  }
  const json& arr = obj.at(field);
  if (arr.size() != expected) {
    throw Error(ErrorCode::DimensionMismatch, origin + ": " + where + "." + field + " has " +
                                                  std::to_string(arr.size()) + " values, expected " +
                                                  std::to_string(expected));
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const json& v : arr) {
    if (!v.is_number()) parse_fail(origin, where + "." + field + " contains a non-number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) parse_fail(origin, where + "." + field + " contains a non-finite value");
    out.push_back(x);
  }
  return out;
}

void append_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void append_array(std::string& out, const std::vector<double>& values) {
  out += '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    append_number(out, values[i]);
  }
  out += ']';
}

}  // namespace

void Classifier::check_input(std::span<const double> x) const {
  if (x.size() != input_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(x.size()) +
                                              " values, model expects " +
                                              std::to_string(input_dim()));
  }
}

void Classifier::check_input(std::span<const double> x, int label) const {
  check_input(x);
  if (label < 0 || static_cast<std::size_t>(label) >= num_classes()) {
    throw Error(ErrorCode::InvalidLabel, "label " + std::to_string(label) + " outside [0, " +
                                             std::to_string(num_classes()) + ")");
  }
}

double cross_entropy(std::span<const double> logits, int label) {
  const auto y = static_cast<std::size_t>(label);
  const double top = *std::max_element(logits.begin(), logits.end());
  if (logits[y] == top) {
    double rest = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
      if (k != y) rest += std::exp(logits[k] - logits[y]);
    }
    return std::log1p(rest);
  }
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - top);
  return top - logits[y] + std::log(sum);
}

std::vector<double> cross_entropy_residual(std::span<const double> logits, int label) {
  const auto y = static_cast<std::size_t>(label);
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - top);
    sum += p[k];
  }
  double others = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] /= sum;
    if (k != y) others += p[k];
  }
  p[y] = -others;
  return p;
}

int argmax(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return static_cast<int>(best);
}

FeedForwardClassifier::FeedForwardClassifier(std::vector<DenseLayer> layers, std::string kind)
    : layers_(std::move(layers)), kind_(std::move(kind)) {
  if (layers_.empty()) throw Error(ErrorCode::DimensionMismatch, "model has no layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    const std::string where = "layer " + std::to_string(l);
    if (layer.rows == 0 || layer.cols == 0) {
      throw Error(ErrorCode::DimensionMismatch, where + " has an empty dimension");
    }
    if (layer.weights.size() != layer.rows * layer.cols || layer.bias.size() != layer.rows) {
      throw Error(ErrorCode::DimensionMismatch, where + " weight/bias sizes disagree with rows/cols");
    }
    if (l > 0 && layer.cols != layers_[l - 1].rows) {
      throw Error(ErrorCode::DimensionMismatch,
                  where + " expects " + std::to_string(layer.cols) + " inputs, previous layer has " +
                      std::to_string(layers_[l - 1].rows) + " outputs");
    }
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(layer.weights.begin(), layer.weights.end(), finite) ||
        !std::all_of(layer.bias.begin(), layer.bias.end(), finite)) {
      throw Error(ErrorCode::NotFinite, where + " has non-finite parameters");
    }
  }
  if (num_classes() < 2) {
    throw Error(ErrorCode::DimensionMismatch, "num_classes must be >= 2, got " +
                                                  std::to_string(num_classes()));
  }
}

std::vector<std::vector<double>> FeedForwardClassifier::forward(std::span<const double> x) const {
  std::vector<std::vector<double>> acts;
  acts.reserve(layers_.size() + 1);
  acts.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    std::vector<double> z(layer.rows);
    kernels::gemv(layer.weights.data(), layer.bias.data(), acts.back().data(), z.data(),
                  layer.rows, layer.cols);
    if (l + 1 < layers_.size()) {
      for (double& v : z) v = std::tanh(v);
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

std::vector<double> FeedForwardClassifier::logits(std::span<const double> x) const {
  check_input(x);
  return std::move(forward(x).back());
}

double FeedForwardClassifier::loss(std::span<const double> x, int label) const {
  check_input(x, label);
  return cross_entropy(forward(x).back(), label);
}

LossGrad FeedForwardClassifier::loss_and_grad(std::span<const double> x, int label) const {
  check_input(x, label);
  const auto acts = forward(x);
  LossGrad out;
  out.loss = cross_entropy(acts.back(), label);

  std::vector<double> delta = cross_entropy_residual(acts.back(), label);
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const DenseLayer& layer = layers_[l];
    std::vector<double> back(layer.cols);
    kernels::gemv_transposed(layer.weights.data(), delta.data(), back.data(), layer.rows,
                             layer.cols);
    if (l > 0) {
      const std::vector<double>& a = acts[l];
      for (std::size_t i = 0; i < back.size(); ++i) back[i] *= 1.0 - a[i] * a[i];
    }
    delta = std::move(back);
  }
  out.grad = std::move(delta);
  return out;
}

int FeedForwardClassifier::predict(std::span<const double> x) const {
  check_input(x);
  return argmax(forward(x).back());
}

FeedForwardClassifier FeedForwardClassifier::with_logit_shift(double shift) const {
  auto layers = layers_;
  for (double& b : layers.back().bias) b += shift;
  return FeedForwardClassifier(std::move(layers), kind_);
}

std::vector<double> finite_diff_grad(const Classifier& model, std::span<const double> x,
                                     int label, double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidConfig, "finite difference step must be > 0");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = model.loss(probe, label);
    probe[i] = saved - h;
    const double down = model.loss(probe, label);
    probe[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

std::shared_ptr<FeedForwardClassifier> parse_model(const std::string& text,
                                                   const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    parse_fail(origin, e.what());
  }
  if (!doc.is_object()) parse_fail(origin, "top level must be an object");
  if (!doc.contains("kind") || !doc.at("kind").is_string()) {
    parse_fail(origin, "missing string field 'kind'");
  }
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind != "linear-softmax" && kind != "mlp") {
    parse_fail(origin, "field 'kind' must be \"linear-softmax\" or \"mlp\", got \"" + kind + "\"");
  }
  const std::size_t input_dim = read_size(doc, "input_dim", origin);
  const std::size_t num_classes = read_size(doc, "num_classes", origin);
  if (num_classes < 2) {
    throw Error(ErrorCode::DimensionMismatch,
                origin + ": num_classes must be >= 2, got " + std::to_string(num_classes));
  }
  if (input_dim < 1) throw Error(ErrorCode::DimensionMismatch, origin + ": input_dim must be >= 1");
  if (doc.contains("activation")) {
    if (!doc.at("activation").is_string() || doc.at("activation").get<std::string>() != "tanh") {
      parse_fail(origin, "field 'activation' must be \"tanh\"");
    }
  }
  if (!doc.contains("layers") || !doc.at("layers").is_array() || doc.at("layers").empty()) {
    parse_fail(origin, "missing non-empty array field 'layers'");
  }

  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l < doc.at("layers").size(); ++l) {
    const json& obj = doc.at("layers").at(l);
    const std::string where = "layers[" + std::to_string(l) + "]";
    if (!obj.is_object()) parse_fail(origin, where + " must be an object");
    DenseLayer layer;
    layer.rows = read_size(obj, "rows", origin);
    layer.cols = read_size(obj, "cols", origin);
    layer.weights = read_reals(obj, "weights", layer.rows * layer.cols, origin, where);
    layer.bias = read_reals(obj, "bias", layer.rows, origin, where);
    layers.push_back(std::move(layer));
  }
  if (kind == "linear-softmax" && layers.size() != 1) {
    throw Error(ErrorCode::DimensionMismatch, origin + ": linear-softmax takes exactly one layer");
  }
  if (layers.front().cols != input_dim) {
    throw Error(ErrorCode::DimensionMismatch, origin + ": layers[0].cols != input_dim");
  }
  if (layers.back().rows != num_classes) {
    throw Error(ErrorCode::DimensionMismatch, origin + ": last layer rows != num_classes");
  }
  try {
    return std::make_shared<FeedForwardClassifier>(std::move(layers), kind);
  } catch (const Error& e) {
    throw Error(e.code(), origin + ": " + e.what());
  }
}

std::shared_ptr<FeedForwardClassifier> load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) parse_fail(path.string(), "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str(), path.string());
}

std::string serialize_model(const FeedForwardClassifier& model) {
  std::string out = "{\"kind\":\"" + model.kind() + "\",\"input_dim\":" +
                    std::to_string(model.input_dim()) +
                    ",\"num_classes\":" + std::to_string(model.num_classes()) +
                    ",\"activation\":\"tanh\",\"layers\":[";
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (l) out += ",\n";
    out += "{\"rows\":" + std::to_string(layers[l].rows) +
           ",\"cols\":" + std::to_string(layers[l].cols) + ",\"weights\":";
    append_array(out, layers[l].weights);
    out += ",\"bias\":";
    append_array(out, layers[l].bias);
    out += '}';
  }
  out += "]}\n";
  return out;
}

}  // namespace heat
