#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace heat {

enum class ErrorCode {
  ShapeMismatch,
  LengthMismatch,
  NotFinite,
  ZeroVector,
  InvalidLabel,
  ParseError,
  DimensionMismatch,
  PixelOutOfRange,
  EnsembleMismatch,
  EnsembleTooSmall,
  EmptySpectrum,
  RankOutOfRange,
  NonPositiveEntry,
  NonPositiveTau,
  OutOfRangeEntry,
  InvalidConfig,
  NoCleanCorrect,
  ConnectFailure,
  HandshakeMismatch,
  RemoteFailure,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so that
// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace heat
