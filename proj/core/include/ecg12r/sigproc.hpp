#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ecg12r/leads.hpp"
#include "ecg12r/matrix.hpp"
#include "ecg12r/record.hpp"

namespace ecg12r::sigproc {

inline constexpr double kTargetRate = 1000.0;

/// Linear interpolation onto a k / fs_out grid; samples past the last input
/// hold the last value. Throws EmptySignal for fewer than two samples.
std::vector<double> resample(std::span<const double> signal, double fs_in, double fs_out);

/// Median over [i - half, i + half], clipped to the signal.
std::vector<double> moving_median(std::span<const double> signal, std::size_t half_width);

/// Subtracts a two-stage (200 ms, then 600 ms) moving-median baseline.
std::vector<double> remove_baseline(std::span<const double> signal, double fs);

/// Resamples every channel to `fs_out` and removes baseline wander.
Record preprocess_record(const Record& record, double fs_out = kTargetRate);

struct LeadNorm {
  double lo = 0.0;
  double hi = 0.0;
  bool degenerate = true;

  double forward(double x) const noexcept { return degenerate ? 0.0 : 2.0 * (x - lo) / (hi - lo) - 1.0; }
  double inverse(double y) const noexcept { return degenerate ? lo : (y + 1.0) * (hi - lo) / 2.0 + lo; }
};

enum class Direction { Forward, Inverse };

LeadNorm fit_normalizer(std::span<const double> training_segment);
std::vector<double> apply_normalizer(const LeadNorm& params, std::span<const double> signal, Direction direction);

/// Per-lead min/max scaling, fitted on the training segment only.
struct NormParams {
  std::array<std::optional<LeadNorm>, kStandardLeadCount> leads{};

  const LeadNorm& at(LeadName lead) const;
  void set(LeadName lead, LeadNorm norm) { leads[static_cast<std::size_t>(lead)] = norm; }
};

struct SplitSpec {
  double train_seconds = 5.0;
  std::size_t window_len = 1024;
  std::size_t train_stride = 512;
  std::size_t test_stride = 1024;

  void validate() const;
};

/// Normalized windows. inputs are [window_len x 3] (I, II, V2) and targets are
/// [window_len x 9] in kOutputLeads order. A window that runs past the end of
/// its segment is zero padded; pads[k] counts those trailing samples.
struct WindowSet {
  std::size_t window_len = 0;
  std::vector<Matrix> inputs;
  std::vector<Matrix> targets;
  std::vector<std::size_t> starts;  // offset within the segment
  std::vector<std::size_t> pads;

  std::size_t size() const noexcept { return inputs.size(); }
};

/// Window start offsets covering [0, length): starts advance by stride until a
/// window reaches the end.
std::vector<std::size_t> tile_starts(std::size_t length, std::size_t window_len, std::size_t stride);

/// Cuts `inputs` [n x 3] and `targets` [n x 9] into windows.
WindowSet make_windows(const Matrix& inputs, const Matrix& targets, std::size_t window_len, std::size_t stride);

/// Reassembles per-window outputs laid out with stride == window_len into a
/// [length x cols] matrix, dropping pads.
Matrix stitch_windows(std::span<const Matrix> windows, std::size_t length);

struct Segmentation {
  WindowSet train;
  WindowSet test;
  NormParams norm;
  std::size_t train_len = 0;  // samples in the training segment
  std::size_t test_len = 0;
};

/// Input (I, II, V2) columns of a record as an [n x 3] mV matrix.
Matrix input_matrix(const Record& record);
/// Target columns in kOutputLeads order as an [n x 9] mV matrix.
Matrix target_matrix(const Record& record);

/// Number of samples in the training segment for this record's rate.
std::size_t training_samples(const Record& record, double train_seconds);

/// Splits a preprocessed record into normalized training windows (first
/// train_seconds) and test windows (the remainder). Throws RecordTooShort.
Segmentation segment_record(const Record& record, const SplitSpec& spec);

/// Applies the forward map lead by lead to an [n x k] matrix whose columns are `leads`.
Matrix normalize_columns(const Matrix& mv, std::span<const LeadName> leads, const NormParams& norm,
                         Direction direction);

}  // namespace ecg12r::sigproc
