#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ecg12r/error.hpp"
#include "ecg12r/leads.hpp"
#include "ecg12r/matrix.hpp"

namespace ecg12r::metrics {

enum class R2Variant {
  Standard,  // 1 - sum (x - y)^2 / sum (x - mean x)^2
  Literal,   // 1 - sum (x - mean y)^2 / sum (y - mean y)^2, kept for audit
};

/// Coefficient of determination of reconstruction y against original x.
/// Throws LengthMismatch, EmptySignal (n < 2) and ConstantReference.
double r_squared(std::span<const double> x, std::span<const double> y, R2Variant variant = R2Variant::Standard);

/// Centered product-moment correlation. Throws LengthMismatch, EmptySignal and ConstantSeries.
double pearson_r(std::span<const double> x, std::span<const double> y);

/// Zero-based index pairs from (0, 0) to (n-1, m-1).
using AlignmentPath = std::vector<std::pair<std::size_t, std::size_t>>;

struct DtwResult {
  double cost = 0.0;
  AlignmentPath path;
};

/// Minimal cumulative squared difference over monotone paths with steps
/// (1,0), (0,1), (1,1), restricted to |i - j| <= band_radius when a radius is
/// given. The path is recovered by backtracking, preferring the diagonal, then
/// the vertical, then the horizontal predecessor on ties.
/// Throws EmptySignal and BandTooNarrow.
DtwResult dtw_align(std::span<const double> x, std::span<const double> y,
                    std::optional<std::size_t> band_radius = std::nullopt);

/// Same cost as dtw_align using two rolling rows and no path.
double dtw_cost(std::span<const double> x, std::span<const double> y,
                std::optional<std::size_t> band_radius = std::nullopt);

struct NdtwSettings {
  double window_seconds = 2.0;  // <= 0 evaluates the whole signal as one window
  std::optional<std::size_t> band_radius = 100;
};

/// Mean over non-overlapping windows (the last may be short) of
/// dtw_cost / sqrt(sum (x - y)^2). A window with zero residual contributes 0.
/// Throws LengthMismatch and EmptySignal.
double ndtw(std::span<const double> x, std::span<const double> y, double fs, const NdtwSettings& settings = {});

struct LeadMetrics {
  LeadName lead = LeadName::III;
  std::optional<double> r2;
  std::optional<double> rx;
  std::optional<double> ndtw;
  std::size_t n = 0;
  std::optional<ErrorCode> flag;  // first error met while scoring this lead
};

struct MetricMeans {
  std::optional<double> r2;
  std::optional<double> rx;
  std::optional<double> ndtw;
};

struct MetricsReport {
  std::string record_id;
  std::vector<LeadMetrics> leads;  // kOutputLeads order
  MetricMeans means;               // over leads where the metric exists
};

struct EvaluateOptions {
  double fs = 1000.0;
  R2Variant r2_variant = R2Variant::Standard;
  NdtwSettings ndtw;
};

/// Scores each of the 9 output leads. `original` and `reconstructed` are
/// [n x 9] in kOutputLeads order. Per-lead failures are flagged rather than
/// thrown. Throws LengthMismatch when the matrices differ in shape.
MetricsReport evaluate_record(const std::string& record_id, const Matrix& original, const Matrix& reconstructed,
                              const EvaluateOptions& options = {});

/// {"record_id", "leads": [{lead, r2, rx, ndtw, n, flag}], "means": {r2, rx, ndtw}}
/// with null for missing values.
std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(std::string_view text);

/// One "record_id,lead,r2,rx,ndtw,n,flag" row per lead, no header.
std::string report_to_csv_rows(const MetricsReport& report);
inline constexpr const char* kReportCsvHeader = "record_id,lead,r2,rx,ndtw,n,flag";

/// Fixed 4-decimal rendering used by every CSV writer; empty for a missing value.
std::string format_metric(std::optional<double> value);

}  // namespace ecg12r::metrics
