#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecg12r/matrix.hpp"
#include "ecg12r/network.hpp"
#include "ecg12r/record.hpp"
#include "ecg12r/sigproc.hpp"

namespace ecg12r::nn {

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainedModel {
  Network network;
  sigproc::NormParams norm;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;

  const NetworkSpec& spec() const noexcept { return network.spec(); }
};

/// Untrained model for a spec. Throws InvalidSpec.
TrainedModel build_model(const NetworkSpec& spec);

/// Stacks windows [k] into a [B, T, C] tensor.
ad::Tensor stack_windows(std::span<const Matrix> windows, std::span<const std::size_t> indices);

/// Runs Adam on MSE + lambda * ||W||^2 (LSTM kernels only) over `train`,
/// evaluates MSE on `validation` after every epoch and stops once the
/// validation loss has not improved for spec.patience epochs. The parameters
/// of the best epoch are restored. Padded samples are masked out of every loss.
void fit(TrainedModel& model, const sigproc::WindowSet& train, const sigproc::WindowSet& validation);

/// Holds out the trailing 20% of windows (at least one) for early stopping and
/// trains on the rest. Throws TooFewWindows for fewer than two windows.
TrainedModel train_personalized(TrainedModel model, const sigproc::WindowSet& windows);

/// Masked MSE of the model on a window set (Eval mode).
double evaluate_loss(Network& network, const sigproc::WindowSet& windows);

/// Eval-mode outputs for each window, [window_len x 9] each.
std::vector<Matrix> predict_windows(Network& network, std::span<const Matrix> inputs, std::size_t batch_size);

/// Mean over target channels of R^2 on unpadded samples (normalized units).
/// Channels whose reference is constant are skipped.
double mean_window_r2(std::span<const Matrix> predictions, const sigproc::WindowSet& windows);

/// Hyperparameter overrides for one grid point.
struct SpecDelta {
  std::string label;
  std::optional<double> lr;
  std::optional<double> dropout_rate;
  std::optional<double> l2_lambda;
  std::optional<std::size_t> conv_kernel;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> max_epochs;
  std::optional<std::vector<std::size_t>> lstm_units;
  std::optional<std::vector<std::size_t>> encoder_filters;

  NetworkSpec apply(NetworkSpec base) const;
};

struct GridPointResult {
  std::string label;
  NetworkSpec spec;
  std::vector<double> fold_r2;
  double mean_r2 = 0.0;
};

struct CVResult {
  std::vector<GridPointResult> points;
  std::size_t chosen = 0;

  const GridPointResult& best() const { return points.at(chosen); }
};

inline constexpr std::size_t kFolds = 5;

/// Contiguous split of n items into k folds; the first n % k folds get one extra item.
std::vector<std::pair<std::size_t, std::size_t>> fold_ranges(std::size_t n, std::size_t k = kFolds);

/// Windows at the given indices, in order.
sigproc::WindowSet select_windows(const sigproc::WindowSet& set, std::span<const std::size_t> indices);

/// 5-fold cross-validation of every grid point on the training windows. Each
/// fold trains a fresh model on four folds with early stopping on the fifth and
/// scores mean R^2 on it. The chosen point maximizes mean validation R^2; ties
/// go to the earlier point. Throws TooFewWindows below five windows.
CVResult grid_search_cv(const sigproc::WindowSet& windows, const NetworkSpec& base, std::span<const SpecDelta> grid);

/// Trains `spec` on folds 1-4 with early stopping on fold 5.
TrainedModel train_on_final_fold(const NetworkSpec& spec, const sigproc::WindowSet& windows);

/// Maps normalized input windows [T x 3] to normalized outputs [T x 9], one per window.
using WindowPredictor = std::function<std::vector<Matrix>(std::span<const Matrix>)>;

/// Windows the normalized test segment with stride == window_len, predicts,
/// stitches, drops pads and maps each target lead back to mV with its own
/// normalizer. Returns [test_len x 9]. Throws RecordTooShort.
Matrix reconstruct_with(const WindowPredictor& predictor, const Record& record, const sigproc::NormParams& norm,
                        double train_seconds, std::size_t window_len);

Matrix reconstruct_leads(TrainedModel& model, const Record& record, double train_seconds = 5.0);

/// <stem>.bin (tensor container), <stem>.json (spec, seed, normalizers) and
/// <stem>.history.csv (epoch,train_loss,val_loss).
void save_model(const TrainedModel& model, const std::filesystem::path& stem);
TrainedModel load_model(const std::filesystem::path& stem);
std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace ecg12r::nn
