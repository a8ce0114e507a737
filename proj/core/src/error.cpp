#include "ecg12r/error.hpp"

namespace ecg12r {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::MissingLead: return "MissingLead";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptySignal: return "EmptySignal";
    case ErrorCode::RecordTooShort: return "RecordTooShort";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateInputs: return "DegenerateInputs";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotScalarLoss: return "NotScalarLoss";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::TooFewWindows: return "TooFewWindows";
    case ErrorCode::ConstantReference: return "ConstantReference";
    case ErrorCode::ConstantSeries: return "ConstantSeries";
    case ErrorCode::BandTooNarrow: return "BandTooNarrow";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::UnknownRecord: return "UnknownRecord";
  }
  return "Unknown";
}

}  // namespace ecg12r
