#include "ecg12r/sigproc.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "ecg12r/error.hpp"

namespace ecg12r::sigproc {
namespace {

// Running median over a multiset window. `low` holds the smaller half and is
// never smaller than `high`.
class SlidingMedian {
 public:
  void insert(double x) {
    if (low_.empty() || x <= *low_.rbegin()) {
      low_.insert(x);
    } else {
      high_.insert(x);
    }
    rebalance();
  }

  void erase(double x) {
    if (auto it = low_.find(x); it != low_.end() && x <= *low_.rbegin()) {
      low_.erase(it);
    } else {
      high_.erase(high_.find(x));
    }
    rebalance();
  }

  double median() const {
    if (low_.size() > high_.size()) return *low_.rbegin();
    return 0.5 * (*low_.rbegin() + *high_.begin());
  }

 private:
  void rebalance() {
    if (low_.size() > high_.size() + 1) {
      auto it = std::prev(low_.end());
      high_.insert(*it);
      low_.erase(it);
    } else if (high_.size() > low_.size()) {
      auto it = high_.begin();
      low_.insert(*it);
      high_.erase(it);
    }
  }

  std::multiset<double> low_;
  std::multiset<double> high_;
};

std::size_t half_window(double seconds, double fs) {
  return static_cast<std::size_t>(std::lround(seconds * fs / 2.0));
}

}  // namespace

std::vector<double> resample(std::span<const double> signal, double fs_in, double fs_out) {
  if (!(fs_in > 0.0) || !(fs_out > 0.0)) {
    throw Error(ErrorCode::InvalidSpec, "sampling rates must be positive");
  }
  if (signal.size() < 2) throw Error(ErrorCode::EmptySignal, "resampling needs at least two samples");
  if (fs_in == fs_out) return {signal.begin(), signal.end()};

  const long double ratio = static_cast<long double>(fs_in) / fs_out;
  const long double exact_len = static_cast<long double>(signal.size()) * fs_out / fs_in;
  const auto out_len = static_cast<std::size_t>(std::ceil(exact_len - 1e-9L));
  std::vector<double> out(out_len);
  const std::size_t last = signal.size() - 1;
  for (std::size_t k = 0; k < out_len; ++k) {
    const long double pos = static_cast<long double>(k) * ratio;
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i >= last) {
      out[k] = signal[last];
      continue;
    }
    const double frac = static_cast<double>(pos - static_cast<long double>(i));
    out[k] = signal[i] + frac * (signal[i + 1] - signal[i]);
  }
  return out;
}

std::vector<double> moving_median(std::span<const double> signal, std::size_t half_width) {
  const std::size_t n = signal.size();
  std::vector<double> out(n);
  if (n == 0) return out;

  SlidingMedian window;
  // Window for index 0 is [0, min(n-1, half)].
  std::size_t hi = std::min(n - 1, half_width);
  for (std::size_t j = 0; j <= hi; ++j) window.insert(signal[j]);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = window.median();
    if (i + 1 == n) break;
    if (i + 1 + half_width < n) window.insert(signal[i + 1 + half_width]);
    if (i >= half_width) window.erase(signal[i - half_width]);
  }
  return out;
}

std::vector<double> remove_baseline(std::span<const double> signal, double fs) {
  if (!(fs > 0.0)) throw Error(ErrorCode::InvalidSpec, "sampling rate must be positive");
  const auto stage1 = moving_median(signal, half_window(0.2, fs));
  const auto baseline = moving_median(stage1, half_window(0.6, fs));
  std::vector<double> out(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i) out[i] = signal[i] - baseline[i];
  return out;
}

Record preprocess_record(const Record& record, double fs_out) {
  Record out = record;
  const double fs_in = record.sampling_frequency();
  std::vector<std::vector<double>> columns;
  columns.reserve(record.samples_mv.cols());
  for (std::size_t c = 0; c < record.samples_mv.cols(); ++c) {
    columns.push_back(remove_baseline(resample(record.samples_mv.column(c), fs_in, fs_out), fs_out));
  }
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  out.samples_mv = Matrix(n, columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) out.samples_mv.set_column(c, columns[c]);
  out.header.sampling_frequency = fs_out;
  out.header.n_samples = n;
  return out;
}

LeadNorm fit_normalizer(std::span<const double> training_segment) {
  if (training_segment.empty()) throw Error(ErrorCode::EmptySignal, "cannot fit a normalizer on no samples");
  const auto [lo, hi] = std::minmax_element(training_segment.begin(), training_segment.end());
  return LeadNorm{*lo, *hi, *hi == *lo};
}

std::vector<double> apply_normalizer(const LeadNorm& params, std::span<const double> signal, Direction direction) {
  std::vector<double> out(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i) {
    out[i] = direction == Direction::Forward ? params.forward(signal[i]) : params.inverse(signal[i]);
  }
  return out;
}

const LeadNorm& NormParams::at(LeadName lead) const {
  const auto& slot = leads[static_cast<std::size_t>(lead)];
  if (!slot) throw Error(ErrorCode::MissingLead, "no normalizer for lead " + std::string(to_string(lead)));
  return *slot;
}

void SplitSpec::validate() const {
  if (window_len == 0 || window_len % 8 != 0) {
    throw Error(ErrorCode::InvalidSpec, "window_len " + std::to_string(window_len) + " is not a positive multiple of 8");
  }
  if (train_stride == 0 || train_stride > window_len || test_stride == 0 || test_stride > window_len) {
    throw Error(ErrorCode::InvalidSpec, "strides must lie in (0, window_len]");
  }
  if (!(train_seconds > 0.0)) throw Error(ErrorCode::InvalidSpec, "train_seconds must be positive");
}

std::vector<std::size_t> tile_starts(std::size_t length, std::size_t window_len, std::size_t stride) {
  std::vector<std::size_t> starts;
  if (length == 0) return starts;
  for (std::size_t s = 0;; s += stride) {
    starts.push_back(s);
    if (s + window_len >= length) break;
  }
  return starts;
}

WindowSet make_windows(const Matrix& inputs, const Matrix& targets, std::size_t window_len, std::size_t stride) {
  if (inputs.rows() != targets.rows()) {
    throw Error(ErrorCode::LengthMismatch, "input and target segments differ in length");
  }
  WindowSet set;
  set.window_len = window_len;
  const std::size_t n = inputs.rows();
  for (std::size_t s : tile_starts(n, window_len, stride)) {
    const std::size_t valid = std::min(window_len, n - s);
    Matrix in(window_len, inputs.cols());
    Matrix tg(window_len, targets.cols());
    for (std::size_t t = 0; t < valid; ++t) {
      std::copy_n(inputs.row(s + t).begin(), inputs.cols(), in.row(t).begin());
      std::copy_n(targets.row(s + t).begin(), targets.cols(), tg.row(t).begin());
    }
    set.inputs.push_back(std::move(in));
    set.targets.push_back(std::move(tg));
    set.starts.push_back(s);
    set.pads.push_back(window_len - valid);
  }
  return set;
}

Matrix stitch_windows(std::span<const Matrix> windows, std::size_t length) {
  if (windows.empty()) return Matrix(length, 0);
  const std::size_t cols = windows.front().cols();
  const std::size_t win = windows.front().rows();
  Matrix out(length, cols);
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const std::size_t start = k * win;
    for (std::size_t t = 0; t < win && start + t < length; ++t) {
      std::copy_n(windows[k].row(t).begin(), cols, out.row(start + t).begin());
    }
  }
  return out;
}

Matrix input_matrix(const Record& record) {
  Matrix m(record.n_samples(), kInputLeads.size());
  for (std::size_t k = 0; k < kInputLeads.size(); ++k) m.set_column(k, record.lead(kInputLeads[k]));
  return m;
}

Matrix target_matrix(const Record& record) {
  Matrix m(record.n_samples(), kOutputLeads.size());
  for (std::size_t k = 0; k < kOutputLeads.size(); ++k) m.set_column(k, record.lead(kOutputLeads[k]));
  return m;
}

std::size_t training_samples(const Record& record, double train_seconds) {
  return static_cast<std::size_t>(std::llround(train_seconds * record.sampling_frequency()));
}

Matrix normalize_columns(const Matrix& mv, std::span<const LeadName> leads, const NormParams& norm,
                         Direction direction) {
  Matrix out(mv.rows(), mv.cols());
  for (std::size_t c = 0; c < mv.cols(); ++c) {
    out.set_column(c, apply_normalizer(norm.at(leads[c]), mv.column(c), direction));
  }
  return out;
}

Segmentation segment_record(const Record& record, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n_train = training_samples(record, spec.train_seconds);
  if (record.n_samples() <= n_train) {
    throw Error(ErrorCode::RecordTooShort,
                record.record_id + " has " + std::to_string(record.n_samples()) + " samples; the training split alone needs " +
                    std::to_string(n_train));
  }

  const Matrix inputs = input_matrix(record);
  const Matrix targets = target_matrix(record);

  Segmentation seg;
  seg.train_len = n_train;
  seg.test_len = record.n_samples() - n_train;
  for (std::size_t k = 0; k < kInputLeads.size(); ++k) {
    const auto col = inputs.column(k);
    seg.norm.set(kInputLeads[k], fit_normalizer(std::span(col).first(n_train)));
  }
  for (std::size_t k = 0; k < kOutputLeads.size(); ++k) {
    const auto col = targets.column(k);
    seg.norm.set(kOutputLeads[k], fit_normalizer(std::span(col).first(n_train)));
  }

  const Matrix in_norm = normalize_columns(inputs, kInputLeads, seg.norm, Direction::Forward);
  const Matrix tg_norm = normalize_columns(targets, kOutputLeads, seg.norm, Direction::Forward);
  seg.train = make_windows(in_norm.slice_rows(0, n_train), tg_norm.slice_rows(0, n_train), spec.window_len,
                           spec.train_stride);
  seg.test = make_windows(in_norm.slice_rows(n_train, record.n_samples()),
                          tg_norm.slice_rows(n_train, record.n_samples()), spec.window_len, spec.test_stride);
  return seg;
}

}  // namespace ecg12r::sigproc
