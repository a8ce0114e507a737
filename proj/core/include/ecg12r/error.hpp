#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ecg12r {

enum class ErrorCode {
  MalformedHeader,
  UnsupportedFormat,
  TruncatedFile,
  MissingLead,
  IoError,
  EmptySignal,
  RecordTooShort,
  LengthMismatch,
  DegenerateInputs,
  ShapeMismatch,
  NotScalarLoss,
  InvalidSpec,
  TooFewWindows,
  ConstantReference,
  ConstantSeries,
  BandTooNarrow,
  EmptyManifest,
  UnknownRecord,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the ErrorCode values
/// so callers (and the batch harness) can branch on the kind of failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ecg12r
