#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecg12r/leads.hpp"
#include "ecg12r/matrix.hpp"
#include "ecg12r/metrics.hpp"
#include "ecg12r/network.hpp"
#include "ecg12r/record.hpp"
#include "ecg12r/training.hpp"

namespace ecg12r::harness {

enum class Method { LT, LSTM, LSTM_UNET };

std::string_view to_string(Method method) noexcept;
/// "lt", "lstm" or "lstm-unet".
std::optional<Method> parse_method(std::string_view text) noexcept;

struct ExperimentConfig {
  Method method = Method::LT;
  std::optional<nn::Profile> profile;  // neural methods only; defaults to small
  std::uint64_t seed = 0;
  std::vector<std::string> record_filter;  // empty keeps every record
  std::filesystem::path out_dir;
  bool grid_search = false;
  metrics::EvaluateOptions metrics;  // fs is replaced by each record's rate
  std::size_t workers = 1;
  double train_seconds = 5.0;
  /// Replaces the profile's spec when set; kind still follows `method`.
  std::optional<nn::NetworkSpec> spec_override;
  /// Grid searched when grid_search is on; empty uses default_grid().
  std::vector<nn::SpecDelta> grid;

  /// Throws InvalidSpec.
  void validate() const;
  /// Spec before per-record seeding. Only meaningful for neural methods.
  nn::NetworkSpec network_spec() const;
};

/// Small grid around the profile defaults: learning rate, dropout and kernel width.
std::vector<nn::SpecDelta> default_grid();

/// Per-record seed derived from the run seed and the record id.
std::uint64_t record_seed(std::uint64_t run_seed, std::string_view record_id) noexcept;

/// Original and reconstructed test-segment leads of one record, [n x 9] in mV.
struct Reconstruction {
  std::string record_id;
  DiagnosticGroup group = DiagnosticGroup::ND;
  double fs = 0.0;
  Matrix original;
  Matrix reconstructed;
};

/// Ingest, preprocess, split, fit the configured method on the first
/// train_seconds and reconstruct the remainder.
Reconstruction reconstruct_record(const Record& raw, const ExperimentConfig& config);
Reconstruction reconstruct_entry(const ManifestEntry& entry, const ExperimentConfig& config);

struct RecordFailure {
  std::string record_id;
  std::string message;
};

struct ExperimentResult {
  std::vector<metrics::MetricsReport> reports;  // manifest order
  std::vector<RecordFailure> failures;          // manifest order

  /// 0 when every record succeeded, 1 when none did, 2 otherwise.
  int exit_code() const noexcept;
};

using LogSink = std::function<void(std::string_view)>;

/// Runs the pipeline over every selected manifest entry on `workers` threads.
/// Output order follows the manifest regardless of completion order.
/// Throws EmptyManifest when nothing is selected.
ExperimentResult run_experiment(const Manifest& manifest, const ExperimentConfig& config, const LogSink& log = {});

struct LeadSummary {
  LeadName lead = LeadName::III;
  metrics::MetricMeans mean;
};

struct GroupSummary {
  DiagnosticGroup group = DiagnosticGroup::ND;
  std::vector<LeadSummary> leads;  // kOutputLeads order
  metrics::MetricMeans avg;        // mean of the per-lead means
  std::size_t n_records = 0;
};

/// Equal-weight per-group means in kGroupOrder; groups without records are
/// omitted. Throws UnknownRecord.
std::vector<GroupSummary> aggregate_groups(std::span<const metrics::MetricsReport> reports, const Manifest& manifest);

/// group,lead,r2,rx,ndtw,n_records with one Avg row per group.
std::string summary_csv(std::span<const GroupSummary> summaries);

/// Full per-record detail plus run settings and failures.
std::string records_json(const ExperimentResult& result, const Manifest& manifest, const ExperimentConfig& config);

/// Writes summary.csv and records.json into out_dir. Throws IoError.
void emit_report(std::span<const GroupSummary> summaries, const ExperimentResult& result, const Manifest& manifest,
                 const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct WaveformPanel {
  LeadName lead = LeadName::III;
  std::vector<double> original;
  std::vector<double> reconstructed;  // empty renders a "missing" note
};

/// Stacked panels, one per lead, original solid and reconstruction dashed,
/// showing the first duration_s seconds.
std::string render_waveform_svg(std::span<const WaveformPanel> panels, double fs, double duration_s);

/// Panels in kOutputLeads order from a reconstruction.
std::vector<WaveformPanel> panels_from(const Reconstruction& rec);

// Published reference values (percent for R2 and r_x) for side-by-side display.
inline constexpr double kNotReported = std::numeric_limits<double>::quiet_NaN();

struct ReferenceRow {
  std::string_view lead;  // lead name or "Avg"
  // r2 {LT, LSTM, LSTM-UNet}, rx {LT, LSTM, LSTM-UNet}, ndtw {LSTM, LSTM-UNet}
  std::array<double, 8> values;
};

struct ReferenceTable {
  Database database;
  DiagnosticGroup group;
  std::array<ReferenceRow, 10> rows;
};

std::span<const ReferenceTable> reference_tables();
const ReferenceTable* find_reference(Database database, DiagnosticGroup group);

/// Text table of computed group means next to the reference values for the
/// same method. Asserts nothing.
std::string reference_comparison(std::span<const GroupSummary> summaries, Database database, Method method);

}  // namespace ecg12r::harness
