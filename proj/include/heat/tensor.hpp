#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "heat/error.hpp"

namespace heat {

struct Shape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const noexcept { return channels * height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

// A sample and its adversarial variants: pixel intensities in [0,1], stored
// channel-major (C, H, W).
class ImageTensor {
 public:
  ImageTensor() = default;
  explicit ImageTensor(Shape shape, double fill = 0.0);
  ImageTensor(Shape shape, std::vector<double> data);

  // Flat 1xD tensor; convenient for tests and non-image inputs.
  static ImageTensor flat(std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  // True when every element lies in [0,1].
  bool in_unit_range() const noexcept;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  Shape shape_{};
  std::vector<double> data_;
};

// M x D matrix of per-model input gradients, one row per model.
class GradientMatrix {
 public:
  GradientMatrix() = default;
  GradientMatrix(std::size_t rows, std::size_t cols);

  static GradientMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<const double> row(std::size_t m) const { return {data_.data() + m * cols_, cols_}; }
  std::span<double> row(std::size_t m) { return {data_.data() + m * cols_, cols_}; }

  double operator()(std::size_t m, std::size_t d) const { return data_[m * cols_ + d]; }
  double& operator()(std::size_t m, std::size_t d) { return data_[m * cols_ + d]; }

  std::span<const double> values() const noexcept { return data_; }

  bool all_finite() const noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace heat
