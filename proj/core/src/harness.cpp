#include "ecg12r/harness.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>
#include <variant>

#include "ecg12r/error.hpp"
#include "ecg12r/linear.hpp"
#include "ecg12r/random.hpp"
#include "ecg12r/sigproc.hpp"

namespace ecg12r::harness {

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::LT: return "lt";
    case Method::LSTM: return "lstm";
    case Method::LSTM_UNET: return "lstm-unet";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view text) noexcept {
  for (Method m : {Method::LT, Method::LSTM, Method::LSTM_UNET}) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  if (method == Method::LT && profile) {
    throw Error(ErrorCode::InvalidSpec, "the linear method takes no profile");
  }
  if (workers == 0) throw Error(ErrorCode::InvalidSpec, "workers must be at least 1");
  if (!(train_seconds > 0.0)) throw Error(ErrorCode::InvalidSpec, "train_seconds must be positive");
  if (method != Method::LT) network_spec().validate();
}

nn::NetworkSpec ExperimentConfig::network_spec() const {
  const auto kind = method == Method::LSTM ? nn::ModelKind::LSTM : nn::ModelKind::LSTM_UNET;
  nn::NetworkSpec spec = spec_override ? *spec_override : nn::NetworkSpec::for_profile(profile.value_or(nn::Profile::Small), kind);
  spec.kind = kind;
  return spec;
}

std::vector<nn::SpecDelta> default_grid() {
  std::vector<nn::SpecDelta> grid(4);
  grid[0].label = "base";
  grid[1].label = "lr=0.0005";
  grid[1].lr = 0.0005;
  grid[2].label = "dropout=0.1";
  grid[2].dropout_rate = 0.1;
  grid[3].label = "kernel=5";
  grid[3].conv_kernel = 5;
  return grid;
}

std::uint64_t record_seed(std::uint64_t run_seed, std::string_view record_id) noexcept {
  return RandomStream::derive(run_seed, "record", record_id).key();
}

namespace {

Matrix select_columns(const Matrix& m, std::size_t first, std::size_t count) {
  Matrix out(m.rows(), count);
  for (std::size_t c = 0; c < count; ++c) out.set_column(c, m.column(first + c));
  return out;
}

Matrix reconstruct_linear(const Record& rec, std::size_t n_train) {
  const std::size_t n = rec.n_samples();
  const Matrix inputs = sigproc::input_matrix(rec);
  const Matrix targets = sigproc::target_matrix(rec);
  const std::size_t first_precordial = kLimbTargets.size();
  const linear::LTModel model = linear::fit_lt(
      inputs.slice_rows(0, n_train), select_columns(targets, first_precordial, kPrecordialTargets.size()).slice_rows(0, n_train));

  const Matrix test_inputs = inputs.slice_rows(n_train, n);
  const Matrix precordial = linear::predict_lt(model, test_inputs);
  const auto limb = linear::derive_limb_leads(test_inputs.column(0), test_inputs.column(1));

  Matrix out(n - n_train, kOutputLeads.size());
  out.set_column(0, limb.iii);
  out.set_column(1, limb.avr);
  out.set_column(2, limb.avl);
  out.set_column(3, limb.avf);
  for (std::size_t c = 0; c < kPrecordialTargets.size(); ++c) out.set_column(first_precordial + c, precordial.column(c));
  return out;
}

Matrix reconstruct_neural(const Record& rec, const ExperimentConfig& config) {
  nn::NetworkSpec spec = config.network_spec();
  spec.seed = record_seed(config.seed, rec.record_id);
  const sigproc::SplitSpec split{config.train_seconds, spec.window_len, spec.train_stride, spec.window_len};
  const sigproc::Segmentation seg = sigproc::segment_record(rec, split);

  nn::TrainedModel model = [&] {
    if (!config.grid_search) return nn::train_personalized(nn::build_model(spec), seg.train);
    const auto grid = config.grid.empty() ? default_grid() : config.grid;
    const nn::CVResult cv = nn::grid_search_cv(seg.train, spec, grid);
    return nn::train_on_final_fold(cv.best().spec, seg.train);
  }();
  model.norm = seg.norm;
  return nn::reconstruct_leads(model, rec, config.train_seconds);
}

}  // namespace

Reconstruction reconstruct_record(const Record& raw, const ExperimentConfig& config) {
  const Record rec = sigproc::preprocess_record(raw);
  const std::size_t n = rec.n_samples();
  const std::size_t n_train = sigproc::training_samples(rec, config.train_seconds);
  if (n <= n_train) {
    throw Error(ErrorCode::RecordTooShort, rec.record_id + " has " + std::to_string(n) +
                                               " samples; the training split alone needs " + std::to_string(n_train));
  }
  Reconstruction out;
  out.record_id = rec.record_id;
  out.group = rec.group;
  out.fs = rec.sampling_frequency();
  out.original = sigproc::target_matrix(rec).slice_rows(n_train, n);
  out.reconstructed = config.method == Method::LT ? reconstruct_linear(rec, n_train) : reconstruct_neural(rec, config);
  return out;
}

Reconstruction reconstruct_entry(const ManifestEntry& entry, const ExperimentConfig& config) {
  return reconstruct_record(load_record(entry), config);
}

int ExperimentResult::exit_code() const noexcept {
  if (failures.empty()) return 0;
  return reports.empty() ? 1 : 2;
}

ExperimentResult run_experiment(const Manifest& manifest, const ExperimentConfig& config, const LogSink& log) {
  config.validate();
  std::vector<const ManifestEntry*> selected;
  for (const auto& entry : manifest.entries) {
    const auto& filter = config.record_filter;
    if (filter.empty() || std::find(filter.begin(), filter.end(), entry.record_id) != filter.end()) {
      selected.push_back(&entry);
    }
  }
  if (selected.empty()) throw Error(ErrorCode::EmptyManifest, "no records selected");

  using Outcome = std::variant<metrics::MetricsReport, RecordFailure>;
  std::vector<std::optional<Outcome>> outcomes(selected.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto emit = [&](const std::string& line) {
    if (!log) return;
    std::lock_guard lock(log_mutex);
    log(line);
  };

  auto work = [&] {
    for (std::size_t k = next++; k < selected.size(); k = next++) {
      const ManifestEntry& entry = *selected[k];
      try {
        const Reconstruction rec = reconstruct_entry(entry, config);
        metrics::EvaluateOptions options = config.metrics;
        options.fs = rec.fs;
        outcomes[k] = metrics::evaluate_record(rec.record_id, rec.original, rec.reconstructed, options);
        emit("ok " + entry.record_id + " mean r2 " + metrics::format_metric(std::get<0>(*outcomes[k]).means.r2));
      } catch (const std::exception& e) {
        outcomes[k] = RecordFailure{entry.record_id, e.what()};
        emit("failed " + entry.record_id + ": " + e.what());
      }
    }
  };

  const std::size_t n_threads = std::min(config.workers, selected.size());
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  ExperimentResult result;
  for (auto& o : outcomes) {
    if (auto* report = std::get_if<metrics::MetricsReport>(&*o)) {
      result.reports.push_back(std::move(*report));
    } else {
      result.failures.push_back(std::get<RecordFailure>(std::move(*o)));
    }
  }
  return result;
}

std::vector<WaveformPanel> panels_from(const Reconstruction& rec) {
  std::vector<WaveformPanel> panels;
  for (std::size_t c = 0; c < kOutputLeads.size(); ++c) {
    panels.push_back({kOutputLeads[c], rec.original.column(c),
                      rec.reconstructed.empty() ? std::vector<double>{} : rec.reconstructed.column(c)});
  }
  return panels;
}

}  // namespace ecg12r::harness
