#include "ecg12r/wfdb.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <string>

#include "ecg12r/error.hpp"

namespace ecg12r::wfdb {
namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedHeader, what); }

template <typename Int>
Int parse_int(std::string_view token, const char* field) {
  Int value{};
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    malformed(std::string("non-numeric ") + field + " '" + std::string(token) + "'");
  }
  return value;
}

double parse_double(std::string_view token, const char* field) {
  // strtod needs a terminated buffer; from_chars<double> is not in libstdc++ 11 for all targets.
  const std::string buf(token);
  char* end = nullptr;
  const double value = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size()) {
    malformed(std::string("non-numeric ") + field + " '" + buf + "'");
  }
  return value;
}

Format parse_format(std::string_view token) {
  if (token.find_first_of("x:+") != std::string_view::npos) {
    throw Error(ErrorCode::UnsupportedFormat,
                "format modifiers (samples per frame, skew, offset) are not supported: '" +
                    std::string(token) + "'");
  }
  const int code = parse_int<int>(token, "format");
  if (code == 16) return Format::Fmt16;
  if (code == 212) return Format::Fmt212;
  throw Error(ErrorCode::UnsupportedFormat, "format " + std::to_string(code) + " is not supported");
}

// gain[(baseline)][/units]
void parse_gain(std::string_view token, SignalSpec& spec) {
  std::string_view rest = token;
  const auto slash = rest.find('/');
  if (slash != std::string_view::npos) {
    spec.units_label = std::string(rest.substr(slash + 1));
    if (spec.units_label.empty()) malformed("empty units in '" + std::string(token) + "'");
    rest = rest.substr(0, slash);
  }
  const auto open = rest.find('(');
  if (open != std::string_view::npos) {
    if (rest.back() != ')') malformed("unterminated baseline in '" + std::string(token) + "'");
    spec.adc_baseline = parse_int<int>(rest.substr(open + 1, rest.size() - open - 2), "baseline");
    rest = rest.substr(0, open);
  }
  const double gain = parse_double(rest, "gain");
  if (gain < 0.0) malformed("negative gain '" + std::string(token) + "'");
  // WFDB treats a zero gain as "unspecified" and substitutes the default.
  spec.adc_gain = gain == 0.0 ? 200.0 : gain;
}

SignalSpec parse_signal_line(std::string_view line) {
  const auto tokens = split_ws(line);
  if (tokens.size() < 2) malformed("signal line needs at least file and format: '" + std::string(line) + "'");

  SignalSpec spec;
  spec.file_name = std::string(tokens[0]);
  spec.format = parse_format(tokens[1]);
  spec.adc_resolution = spec.format == Format::Fmt16 ? 16 : 12;
  if (tokens.size() > 2) parse_gain(tokens[2], spec);
  if (tokens.size() > 3) spec.adc_resolution = parse_int<int>(tokens[3], "adc resolution");
  if (tokens.size() > 4) spec.adc_zero = parse_int<int>(tokens[4], "adc zero");
  if (tokens.size() > 5) spec.initial_value = parse_int<int>(tokens[5], "initial value");
  if (tokens.size() > 6) spec.checksum = parse_int<int>(tokens[6], "checksum");
  if (tokens.size() > 7) spec.block_size = parse_int<int>(tokens[7], "block size");
  for (std::size_t i = 8; i < tokens.size(); ++i) {
    if (i > 8) spec.description += ' ';
    spec.description += tokens[i];
  }
  return spec;
}

std::int32_t sign_extend12(std::uint32_t v) {
  v &= 0xFFFu;
  return (v & 0x800u) ? static_cast<std::int32_t>(v) - 0x1000 : static_cast<std::int32_t>(v);
}

constexpr std::array<DiagnosisRule, 15> kRules = {{
    {"healthy control", DiagnosticGroup::HC},
    {"bundle branch block", DiagnosticGroup::BB},
    {"hypertrophy", DiagnosticGroup::HY},
    {"cardiomyopathy", DiagnosticGroup::HY},
    {"heart failure", DiagnosticGroup::HY},
    {"myocardial infarction", DiagnosticGroup::MI},
    {"valvular", DiagnosticGroup::VA},
    {"myocarditis", DiagnosticGroup::VA},
    {"dysrhythmia", DiagnosticGroup::VA},
    {"miscellaneous", DiagnosticGroup::VA},
    {"stable angina", DiagnosticGroup::VA},
    {"unstable angina", DiagnosticGroup::VA},
    {"palpitation", DiagnosticGroup::VA},
    {"syncope", DiagnosticGroup::VA},
    {"n/a", DiagnosticGroup::ND},
}};

}  // namespace

RecordHeader parse_header(std::string_view text) {
  if (trim(text).empty()) malformed("empty header");

  RecordHeader header;
  bool have_record_line = false;
  for (std::string_view raw : split_lines(text)) {
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      header.comments.emplace_back(raw);
      continue;
    }
    if (!have_record_line) {
      const auto tokens = split_ws(line);
      // name n_signals fs n_samples [base_time [base_date]]
      if (tokens.size() < 4 || tokens.size() > 6) {
        malformed("record line needs 4 to 6 fields, got " + std::to_string(tokens.size()));
      }
      if (tokens[0].find('/') != std::string_view::npos) {
        throw Error(ErrorCode::UnsupportedFormat, "multi-segment records are not supported");
      }
      header.record_name = std::string(tokens[0]);
      header.n_signals = parse_int<std::size_t>(tokens[1], "signal count");
      std::string_view fs_token = tokens[2];
      fs_token = fs_token.substr(0, fs_token.find('/'));  // drop counter frequency
      header.sampling_frequency = parse_double(fs_token, "sampling frequency");
      header.n_samples = parse_int<std::size_t>(tokens[3], "sample count");
      if (header.n_signals == 0) malformed("signal count must be positive");
      if (!(header.sampling_frequency > 0.0)) malformed("sampling frequency must be positive");
      if (header.n_samples == 0) malformed("sample count must be positive");
      have_record_line = true;
      continue;
    }
    if (header.signals.size() == header.n_signals) {
      malformed("unexpected line after signal specifications: '" + std::string(line) + "'");
    }
    header.signals.push_back(parse_signal_line(line));
  }

  if (!have_record_line) malformed("missing record line");
  if (header.signals.size() != header.n_signals) {
    malformed("expected " + std::to_string(header.n_signals) + " signal lines, got " +
              std::to_string(header.signals.size()));
  }
  return header;
}

std::size_t encoded_size(Format format, std::size_t n_values) noexcept {
  if (format == Format::Fmt16) return 2 * n_values;
  return (n_values / 2) * 3 + (n_values % 2 ? 2 : 0);
}

AdcMatrix decode_samples(std::span<const std::uint8_t> bytes, Format format,
                         std::size_t n_signals, std::size_t n_samples) {
  const std::size_t n_values = n_signals * n_samples;
  const std::size_t needed = encoded_size(format, n_values);
  if (bytes.size() < needed) {
    throw Error(ErrorCode::TruncatedFile, "need " + std::to_string(needed) + " bytes, have " +
                                              std::to_string(bytes.size()));
  }

  AdcMatrix out{n_samples, n_signals, std::vector<std::int32_t>(n_values)};
  if (format == Format::Fmt16) {
    for (std::size_t i = 0; i < n_values; ++i) {
      const auto u = static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
      out.values[i] = static_cast<std::int16_t>(u);
    }
    return out;
  }

  for (std::size_t i = 0, b = 0; i < n_values; i += 2, b += 3) {
    const std::uint32_t b0 = bytes[b];
    const std::uint32_t b1 = bytes[b + 1];
    out.values[i] = sign_extend12(b0 | ((b1 & 0x0Fu) << 8));
    if (i + 1 < n_values) {
      const std::uint32_t b2 = bytes[b + 2];
      out.values[i + 1] = sign_extend12(b2 | ((b1 & 0xF0u) << 4));
    }
  }
  return out;
}

Matrix to_physical_units(const AdcMatrix& adc, std::span<const SignalSpec> specs) {
  if (specs.size() != adc.n_signals) {
    throw Error(ErrorCode::LengthMismatch, "signal spec count " + std::to_string(specs.size()) +
                                               " != column count " + std::to_string(adc.n_signals));
  }
  Matrix mv(adc.n_samples, adc.n_signals);
  for (std::size_t r = 0; r < adc.n_samples; ++r) {
    for (std::size_t c = 0; c < adc.n_signals; ++c) {
      mv(r, c) = (adc(r, c) - specs[c].adc_baseline) / specs[c].adc_gain;
    }
  }
  return mv;
}

std::span<const DiagnosisRule> diagnosis_rules() noexcept { return kRules; }

DiagnosticGroup classify_diagnosis(std::span<const std::string> comments) {
  constexpr std::string_view kKey = "reason for admission";
  for (const std::string& comment : comments) {
    std::string lower(comment);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    const auto at = lower.find(kKey);
    if (at == std::string::npos) continue;
    std::string_view reason(lower);
    reason.remove_prefix(at + kKey.size());
    if (const auto colon = reason.find(':'); colon != std::string_view::npos) {
      reason.remove_prefix(colon + 1);
    }
    for (const DiagnosisRule& rule : kRules) {
      if (reason.find(rule.keyword) != std::string_view::npos) return rule.group;
    }
    return DiagnosticGroup::ND;
  }
  return DiagnosticGroup::ND;
}

}  // namespace ecg12r::wfdb
