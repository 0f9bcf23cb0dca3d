#include "heat/dataset.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace heat {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(line) + ": " + what);
}

json parse_line(const std::string& text, const std::string& origin, std::size_t line) {
  try {
    json doc = json::parse(text);
    if (!doc.is_object()) fail(origin, line, "expected a JSON object");
    return doc;
  } catch (const json::parse_error& e) {
    fail(origin, line, e.what());
  }
}

}  // namespace

Dataset parse_dataset(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  Dataset ds;
  bool have_header = false;

  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json doc = parse_line(line, origin, lineno);
    if (!have_header) {
      if (!doc.contains("name") || !doc["name"].is_string()) fail(origin, lineno, "header needs string 'name'");
      if (!doc.contains("num_classes") || !doc["num_classes"].is_number_integer() ||
          doc["num_classes"].get<long long>() < 2) {
        fail(origin, lineno, "header field 'num_classes' must be an integer >= 2");
      }
      const json& shape = doc.contains("shape") ? doc["shape"] : json();
      if (!shape.is_array() || shape.size() != 3) fail(origin, lineno, "header field 'shape' must be [C, H, W]");
      for (const json& s : shape) {
        if (!s.is_number_integer() || s.get<long long>() < 1) {
          fail(origin, lineno, "header field 'shape' entries must be positive integers");
        }
      }
      ds.name = doc["name"].get<std::string>();
      ds.num_classes = doc["num_classes"].get<std::size_t>();
      ds.shape = {shape[0].get<std::size_t>(), shape[1].get<std::size_t>(), shape[2].get<std::size_t>()};
      have_header = true;
      continue;
    }

    if (!doc.contains("x") || !doc["x"].is_array()) fail(origin, lineno, "sample needs array 'x'");
    if (!doc.contains("y") || !doc["y"].is_number_integer()) fail(origin, lineno, "sample needs integer 'y'");
    const json& xs = doc["x"];
    if (xs.size() != ds.input_dim()) {
      throw Error(ErrorCode::DimensionMismatch, origin + ":" + std::to_string(lineno) + ": 'x' has " +
                                                    std::to_string(xs.size()) + " values, shape needs " +
                                                    std::to_string(ds.input_dim()));
    }
    std::vector<double> pixels;
    pixels.reserve(xs.size());
    for (const json& v : xs) {
      if (!v.is_number()) fail(origin, lineno, "'x' contains a non-number");
      const double p = v.get<double>();
      if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::PixelOutOfRange, origin + ":" + std::to_string(lineno) + ": pixel " +
                                                    std::to_string(p) + " outside [0, 1]");
      }
      pixels.push_back(p);
    }
    const long long y = doc["y"].get<long long>();
    if (y < 0 || static_cast<std::size_t>(y) >= ds.num_classes) {
      fail(origin, lineno, "label " + std::to_string(y) + " outside [0, num_classes)");
    }
    ds.samples.push_back({ImageTensor(ds.shape, std::move(pixels)), static_cast<int>(y)});
  }
  if (!have_header) fail(origin, lineno, "empty dataset file");
  if (ds.samples.empty()) fail(origin, lineno, "dataset has no samples");
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), path.string());
}

std::string serialize_dataset(const Dataset& dataset) {
  std::string out = "{\"name\":" + json(dataset.name).dump() +
                    ",\"num_classes\":" + std::to_string(dataset.num_classes) + ",\"shape\":[" +
                    std::to_string(dataset.shape.channels) + "," + std::to_string(dataset.shape.height) +
                    "," + std::to_string(dataset.shape.width) + "]}\n";
  char buf[40];
  for (const auto& s : dataset.samples) {
    out += "{\"x\":[";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", s.x[i]);
      out += buf;
    }
    out += "],\"y\":" + std::to_string(s.y) + "}\n";
  }
  return out;
}

}  // namespace heat
