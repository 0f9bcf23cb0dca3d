#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "heat/attack.hpp"
#include "heat/tensor.hpp"

namespace heat {

// JSON-lines dataset:
//   {"name": "...", "num_classes": K, "shape": [C, H, W]}
//   {"x": [D reals in [0,1]], "y": label}
//   ...
struct Dataset {
  std::string name;
  std::size_t num_classes = 0;
  Shape shape;
  std::vector<LabeledSample> samples;

  std::size_t input_dim() const noexcept { return shape.size(); }
};

Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(const std::string& text, const std::string& origin = "<memory>");
std::string serialize_dataset(const Dataset& dataset);

}  // namespace heat
