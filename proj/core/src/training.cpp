#include "ecg12r/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "ecg12r/adam.hpp"
#include "ecg12r/error.hpp"
#include "ecg12r/param_io.hpp"
#include "json.hpp"

namespace ecg12r::nn {
using ad::Graph;
using ad::NodeId;
using ad::Tensor;
using sigproc::WindowSet;

TrainedModel build_model(const NetworkSpec& spec) { return TrainedModel{Network(spec), {}, {}, 0}; }

Tensor stack_windows(std::span<const Matrix> windows, std::span<const std::size_t> indices) {
  if (indices.empty()) throw Error(ErrorCode::ShapeMismatch, "cannot stack zero windows");
  const std::size_t rows = windows[indices.front()].rows(), cols = windows[indices.front()].cols();
  Tensor out({indices.size(), rows, cols});
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const Matrix& w = windows[indices[k]];
    if (w.rows() != rows || w.cols() != cols) throw Error(ErrorCode::ShapeMismatch, "windows differ in shape");
    std::copy(w.data().begin(), w.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(k * rows * cols));
  }
  return out;
}

namespace {

Tensor stack_masks(const WindowSet& set, std::span<const std::size_t> indices) {
  const std::size_t rows = set.window_len;
  Tensor mask({indices.size(), rows, kOutputChannels}, 1.0);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t valid = rows - set.pads[indices[k]];
    for (std::size_t t = valid; t < rows; ++t) {
      for (std::size_t c = 0; c < kOutputChannels; ++c) mask[(k * rows + t) * kOutputChannels + c] = 0.0;
    }
  }
  return mask;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

std::vector<Tensor> snapshot(const Network& net) {
  std::vector<Tensor> out;
  for (const auto& p : net.parameter_storage()) out.push_back(p.value);
  return out;
}

void restore(Network& net, const std::vector<Tensor>& values) {
  auto& params = net.parameter_storage();
  for (std::size_t k = 0; k < params.size(); ++k) params[k].value = values[k];
}

}  // namespace

double evaluate_loss(Network& network, const WindowSet& windows) {
  if (windows.size() == 0) throw Error(ErrorCode::TooFewWindows, "no validation windows");
  const std::size_t chunk = std::max<std::size_t>(1, network.spec().batch_size);
  double weighted = 0.0;
  double weight = 0.0;
  const auto all = iota_indices(windows.size());
  for (std::size_t start = 0; start < all.size(); start += chunk) {
    const auto idx = std::span(all).subspan(start, std::min(chunk, all.size() - start));
    const Tensor out = network.predict(stack_windows(windows.inputs, idx));
    const Tensor target = stack_windows(windows.targets, idx);
    const Tensor mask = stack_masks(windows, idx);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double d = out[i] - target[i];
      weighted += mask[i] * d * d;
      weight += mask[i];
    }
  }
  return weight > 0.0 ? weighted / weight : 0.0;
}

void fit(TrainedModel& model, const WindowSet& train, const WindowSet& validation) {
  if (train.size() == 0 || validation.size() == 0) {
    throw Error(ErrorCode::TooFewWindows, "training needs at least one training and one validation window");
  }
  Network& net = model.network;
  const NetworkSpec& spec = net.spec();
  if (train.window_len != spec.window_len) {
    throw Error(ErrorCode::ShapeMismatch, "window length " + std::to_string(train.window_len) +
                                              " does not match the network's " + std::to_string(spec.window_len));
  }
  auto params = net.parameters();
  auto decayed = net.decayed_parameters();
  ad::AdamState adam(ad::AdamHyper{spec.lr, 0.9, 0.999, 1e-8});
  const std::size_t batch = std::min(spec.batch_size, train.size());

  model.history.clear();
  double best = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_values = snapshot(net);
  std::size_t since_best = 0;
  std::vector<std::size_t> order = iota_indices(train.size());

  for (std::size_t epoch = 0; epoch < spec.max_epochs; ++epoch) {
    RandomStream shuffle = RandomStream::derive(spec.seed, "shuffle", epoch);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch, ++batches) {
      const auto idx = std::span(order).subspan(start, std::min(batch, order.size() - start));
      const Tensor mask = stack_masks(train, idx);
      Graph g(ad::Mode::Train, RandomStream::derive(spec.seed, "dropout", epoch, batches));
      const NodeId out = net.forward(g, g.constant(stack_windows(train.inputs, idx)));
      NodeId loss = g.mse_loss(out, g.constant(stack_windows(train.targets, idx)), &mask);
      if (spec.l2_lambda > 0.0) {
        for (auto* p : decayed) loss = g.add(loss, g.l2_penalty(g.parameter(*p), spec.l2_lambda));
      }
      for (auto* p : params) p->zero_grad();
      g.backward(loss);
      ad::adam_step(params, adam);
      loss_sum += g.value(loss).item();
    }

    const double val = evaluate_loss(net, validation);
    model.history.push_back({epoch, loss_sum / static_cast<double>(batches), val});
    if (val < best) {
      best = val;
      best_values = snapshot(net);
      model.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= spec.patience) {
      break;
    }
  }
  restore(net, best_values);
}

WindowSet select_windows(const WindowSet& set, std::span<const std::size_t> indices) {
  WindowSet out;
  out.window_len = set.window_len;
  for (std::size_t i : indices) {
    out.inputs.push_back(set.inputs[i]);
    out.targets.push_back(set.targets[i]);
    out.starts.push_back(set.starts[i]);
    out.pads.push_back(set.pads[i]);
  }
  return out;
}

TrainedModel train_personalized(TrainedModel model, const WindowSet& windows) {
  if (windows.size() < 2) {
    throw Error(ErrorCode::TooFewWindows, "need at least 2 windows, have " + std::to_string(windows.size()));
  }
  const std::size_t n_val = std::max<std::size_t>(1, windows.size() / 5);
  const auto all = iota_indices(windows.size());
  const auto split = windows.size() - n_val;
  fit(model, select_windows(windows, std::span(all).first(split)), select_windows(windows, std::span(all).subspan(split)));
  return model;
}

std::vector<Matrix> predict_windows(Network& network, std::span<const Matrix> inputs, std::size_t batch_size) {
  std::vector<Matrix> out;
  out.reserve(inputs.size());
  const auto all = iota_indices(inputs.size());
  const std::size_t chunk = std::max<std::size_t>(1, batch_size);
  for (std::size_t start = 0; start < all.size(); start += chunk) {
    const auto idx = std::span(all).subspan(start, std::min(chunk, all.size() - start));
    const Tensor y = network.predict(stack_windows(inputs, idx));
    const std::size_t rows = y.dim(1), cols = y.dim(2);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      Matrix m(rows, cols);
      std::copy_n(y.data().begin() + static_cast<std::ptrdiff_t>(k * rows * cols), rows * cols, m.data().begin());
      out.push_back(std::move(m));
    }
  }
  return out;
}

double mean_window_r2(std::span<const Matrix> predictions, const WindowSet& windows) {
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < kOutputChannels; ++c) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < windows.size(); ++k) {
      for (std::size_t t = 0; t < windows.window_len - windows.pads[k]; ++t) {
        sum += windows.targets[k](t, c);
        ++n;
      }
    }
    if (n < 2) continue;
    const double mean = sum / static_cast<double>(n);
    double sse = 0.0, sst = 0.0;
    for (std::size_t k = 0; k < windows.size(); ++k) {
      for (std::size_t t = 0; t < windows.window_len - windows.pads[k]; ++t) {
        const double x = windows.targets[k](t, c);
        const double d = x - predictions[k](t, c);
        sse += d * d;
        sst += (x - mean) * (x - mean);
      }
    }
    if (sst == 0.0) continue;
    total += 1.0 - sse / sst;
    ++counted;
  }
  return counted ? total / static_cast<double>(counted) : std::numeric_limits<double>::quiet_NaN();
}

NetworkSpec SpecDelta::apply(NetworkSpec base) const {
  if (lr) base.lr = *lr;
  if (dropout_rate) base.dropout_rate = *dropout_rate;
  if (l2_lambda) base.l2_lambda = *l2_lambda;
  if (conv_kernel) base.conv_kernel = *conv_kernel;
  if (batch_size) base.batch_size = *batch_size;
  if (max_epochs) base.max_epochs = *max_epochs;
  if (lstm_units) base.lstm_units = *lstm_units;
  if (encoder_filters) {
    base.encoder_filters = *encoder_filters;
    base.decoder_filters.assign(encoder_filters->rbegin(), encoder_filters->rend());
  }
  return base;
}

std::vector<std::pair<std::size_t, std::size_t>> fold_ranges(std::size_t n, std::size_t k) {
  std::vector<std::pair<std::size_t, std::size_t>> folds;
  const std::size_t base = n / k, extra = n % k;
  std::size_t start = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    folds.emplace_back(start, start + size);
    start += size;
  }
  return folds;
}

namespace {

struct FoldSplit {
  WindowSet train;
  WindowSet validation;
};

FoldSplit split_fold(const WindowSet& windows, std::size_t fold) {
  const auto folds = fold_ranges(windows.size());
  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    (i >= folds[fold].first && i < folds[fold].second ? val_idx : train_idx).push_back(i);
  }
  return {select_windows(windows, train_idx), select_windows(windows, val_idx)};
}

}  // namespace

CVResult grid_search_cv(const WindowSet& windows, const NetworkSpec& base, std::span<const SpecDelta> grid) {
  if (windows.size() < kFolds) {
    throw Error(ErrorCode::TooFewWindows, "cross-validation needs at least 5 windows, have " + std::to_string(windows.size()));
  }
  if (grid.empty()) throw Error(ErrorCode::InvalidSpec, "empty hyperparameter grid");

  CVResult result;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    GridPointResult point;
    point.label = grid[p].label.empty() ? "point" + std::to_string(p) : grid[p].label;
    point.spec = grid[p].apply(base);
    point.spec.validate();
    for (std::size_t f = 0; f < kFolds; ++f) {
      const FoldSplit split = split_fold(windows, f);
      NetworkSpec fold_spec = point.spec;
      fold_spec.seed = RandomStream::derive(base.seed, "cv-fold", f).key();
      TrainedModel model = build_model(fold_spec);
      fit(model, split.train, split.validation);
      const auto preds = predict_windows(model.network, split.validation.inputs, fold_spec.batch_size);
      const double r2 = mean_window_r2(preds, split.validation);
      point.fold_r2.push_back(std::isnan(r2) ? -std::numeric_limits<double>::infinity() : r2);
    }
    point.mean_r2 = std::accumulate(point.fold_r2.begin(), point.fold_r2.end(), 0.0) / static_cast<double>(kFolds);
    result.points.push_back(std::move(point));
  }
  for (std::size_t p = 1; p < result.points.size(); ++p) {
    if (result.points[p].mean_r2 > result.points[result.chosen].mean_r2) result.chosen = p;
  }
  return result;
}

TrainedModel train_on_final_fold(const NetworkSpec& spec, const WindowSet& windows) {
  if (windows.size() < kFolds) {
    throw Error(ErrorCode::TooFewWindows, "need at least 5 windows, have " + std::to_string(windows.size()));
  }
  const FoldSplit split = split_fold(windows, kFolds - 1);
  TrainedModel model = build_model(spec);
  fit(model, split.train, split.validation);
  return model;
}

Matrix reconstruct_with(const WindowPredictor& predictor, const Record& record, const sigproc::NormParams& norm,
                        double train_seconds, std::size_t window_len) {
  const std::size_t n = record.n_samples();
  const std::size_t n_train = sigproc::training_samples(record, train_seconds);
  if (n <= n_train) {
    throw Error(ErrorCode::RecordTooShort, record.record_id + " has no samples after the training segment");
  }
  const Matrix inputs = sigproc::normalize_columns(sigproc::input_matrix(record).slice_rows(n_train, n), kInputLeads,
                                                   norm, sigproc::Direction::Forward);
  const std::size_t test_len = n - n_train;
  const WindowSet windows = sigproc::make_windows(inputs, Matrix(test_len, kOutputChannels), window_len, window_len);
  const std::vector<Matrix> outputs = predictor(windows.inputs);
  if (outputs.size() != windows.size()) throw Error(ErrorCode::ShapeMismatch, "predictor returned wrong window count");
  const Matrix stitched = sigproc::stitch_windows(outputs, test_len);
  return sigproc::normalize_columns(stitched, kOutputLeads, norm, sigproc::Direction::Inverse);
}

Matrix reconstruct_leads(TrainedModel& model, const Record& record, double train_seconds) {
  Network& net = model.network;
  return reconstruct_with(
      [&net](std::span<const Matrix> inputs) { return predict_windows(net, inputs, net.spec().batch_size); }, record,
      model.norm, train_seconds, net.spec().window_len);
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,train_loss,val_loss\n" << std::setprecision(10);
  for (const auto& e : history) os << e.epoch << ',' << e.train_loss << ',' << e.val_loss << '\n';
  return os.str();
}

void save_model(const TrainedModel& model, const std::filesystem::path& stem) {
  std::vector<ad::NamedTensor> tensors;
  for (const auto& p : model.network.parameter_storage()) tensors.push_back({p.name, p.value});
  ad::save_tensors(tensors, std::filesystem::path(stem).concat(".bin"));

  nlohmann::json doc;
  doc["spec"] = nlohmann::json::parse(spec_to_json(model.spec()));
  doc["seed"] = model.spec().seed;
  doc["best_epoch"] = model.best_epoch;
  nlohmann::json norm = nlohmann::json::object();
  for (LeadName lead : kStandardLeads) {
    const auto& slot = model.norm.leads[static_cast<std::size_t>(lead)];
    if (!slot) continue;
    norm[std::string(to_string(lead))] = {{"lo", slot->lo}, {"hi", slot->hi}, {"degenerate", slot->degenerate}};
  }
  doc["norm"] = norm;
  std::ofstream json_out(std::filesystem::path(stem).concat(".json"), std::ios::binary);
  if (!json_out) throw Error(ErrorCode::IoError, "cannot write model sidecar for " + stem.string());
  json_out << doc.dump(2) << '\n';

  std::ofstream csv(std::filesystem::path(stem).concat(".history.csv"), std::ios::binary);
  if (!csv) throw Error(ErrorCode::IoError, "cannot write history for " + stem.string());
  csv << history_csv(model.history);
}

TrainedModel load_model(const std::filesystem::path& stem) {
  const std::string text = read_text_file(std::filesystem::path(stem).concat(".json"));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("invalid model sidecar: ") + e.what());
  }
  TrainedModel model = build_model(spec_from_json(doc.at("spec").dump()));
  model.best_epoch = doc.value("best_epoch", std::size_t{0});
  for (const auto& [name, entry] : doc.at("norm").items()) {
    const auto lead = parse_lead_name(name);
    if (!lead) continue;
    model.norm.set(*lead, sigproc::LeadNorm{entry.at("lo").get<double>(), entry.at("hi").get<double>(),
                                            entry.at("degenerate").get<bool>()});
  }
  const auto tensors = ad::load_tensors(std::filesystem::path(stem).concat(".bin"));
  auto& params = model.network.parameter_storage();
  if (tensors.size() != params.size()) throw Error(ErrorCode::ShapeMismatch, "parameter count differs from spec");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (tensors[k].name != params[k].name || tensors[k].tensor.shape() != params[k].value.shape()) {
      throw Error(ErrorCode::ShapeMismatch, "parameter " + tensors[k].name + " does not match " + params[k].name);
    }
    params[k].value = tensors[k].tensor;
  }
  return model;
}

}  // namespace ecg12r::nn
