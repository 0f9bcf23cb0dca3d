#include "heat/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace heat {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NotFinite: return "NotFinite";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::PixelOutOfRange: return "PixelOutOfRange";
    case ErrorCode::EnsembleMismatch: return "EnsembleMismatch";
    case ErrorCode::EnsembleTooSmall: return "EnsembleTooSmall";
    case ErrorCode::EmptySpectrum: return "EmptySpectrum";
    case ErrorCode::RankOutOfRange: return "RankOutOfRange";
    case ErrorCode::NonPositiveEntry: return "NonPositiveEntry";
    case ErrorCode::NonPositiveTau: return "NonPositiveTau";
    case ErrorCode::OutOfRangeEntry: return "OutOfRangeEntry";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NoCleanCorrect: return "NoCleanCorrect";
    case ErrorCode::ConnectFailure: return "ConnectFailure";
    case ErrorCode::HandshakeMismatch: return "HandshakeMismatch";
    case ErrorCode::RemoteFailure: return "RemoteFailure";
  }
  return "Unknown";
}

ImageTensor::ImageTensor(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

ImageTensor::ImageTensor(Shape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "tensor data has " + std::to_string(data_.size()) +
                                              " values, shape needs " +
                                              std::to_string(shape_.size()));
  }
}

ImageTensor ImageTensor::flat(std::vector<double> data) {
  const Shape shape{1, 1, data.size()};
  return ImageTensor(shape, std::move(data));
}

bool ImageTensor::in_unit_range() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

GradientMatrix::GradientMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

GradientMatrix GradientMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  GradientMatrix g(rows.size(), rows.front().size());
  for (std::size_t m = 0; m < rows.size(); ++m) {
    if (rows[m].size() != g.cols_) {
      throw Error(ErrorCode::ShapeMismatch, "gradient rows differ in length");
    }
    std::copy(rows[m].begin(), rows[m].end(), g.row(m).begin());
  }
  return g;
}

bool GradientMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace heat
