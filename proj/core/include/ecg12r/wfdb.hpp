#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecg12r/leads.hpp"
#include "ecg12r/matrix.hpp"

namespace ecg12r::wfdb {

enum class Format { Fmt16 = 16, Fmt212 = 212 };

struct SignalSpec {
  std::string file_name;
  Format format = Format::Fmt16;
  double adc_gain = 200.0;  // ADC units per mV
  int adc_baseline = 0;
  std::string units_label = "mV";
  int adc_resolution = 16;
  int adc_zero = 0;
  int initial_value = 0;
  int checksum = 0;
  int block_size = 0;
  std::string description;
};

struct RecordHeader {
  std::string record_name;
  std::size_t n_signals = 0;
  double sampling_frequency = 0.0;
  std::size_t n_samples = 0;
  std::vector<SignalSpec> signals;
  std::vector<std::string> comments;  // verbatim, including the leading '#'
};

/// Parses a single-segment, single-frequency WFDB header.
/// Throws Error{MalformedHeader} or Error{UnsupportedFormat}.
RecordHeader parse_header(std::string_view text);

/// Integer ADC counts, row-major [n_samples x n_signals].
struct AdcMatrix {
  std::size_t n_samples = 0;
  std::size_t n_signals = 0;
  std::vector<std::int32_t> values;

  std::int32_t operator()(std::size_t sample, std::size_t signal) const {
    return values[sample * n_signals + signal];
  }
};

/// Number of bytes needed to hold n_values interleaved samples.
std::size_t encoded_size(Format format, std::size_t n_values) noexcept;

AdcMatrix decode_samples(std::span<const std::uint8_t> bytes, Format format,
                         std::size_t n_signals, std::size_t n_samples);

/// (adc - baseline) / gain per column.
Matrix to_physical_units(const AdcMatrix& adc, std::span<const SignalSpec> specs);

/// Maps a PTBDB "Reason for admission" comment to its diagnostic group.
/// Falls back to ND when no keyword matches.
DiagnosticGroup classify_diagnosis(std::span<const std::string> comments);

/// One keyword rule of the admission-reason table; first matching row wins.
struct DiagnosisRule {
  std::string_view keyword;
  DiagnosticGroup group;
};

std::span<const DiagnosisRule> diagnosis_rules() noexcept;

}  // namespace ecg12r::wfdb
