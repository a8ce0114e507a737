#include "ecg12r/network.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "ecg12r/error.hpp"
#include "json.hpp"

namespace ecg12r::nn {
using ad::Graph;
using ad::NodeId;
using ad::Parameter;
using ad::Shape;
using ad::Tensor;

std::string_view to_string(ModelKind kind) noexcept { return kind == ModelKind::LSTM ? "LSTM" : "LSTM_UNET"; }

std::string_view to_string(Profile profile) noexcept { return profile == Profile::Paper ? "paper" : "small"; }

std::optional<Profile> parse_profile(std::string_view text) noexcept {
  if (text == "paper") return Profile::Paper;
  if (text == "small") return Profile::Small;
  return std::nullopt;
}

NetworkSpec NetworkSpec::paper(ModelKind kind) {
  NetworkSpec s;
  s.kind = kind;
  return s;
}

NetworkSpec NetworkSpec::small(ModelKind kind) {
  NetworkSpec s;
  s.kind = kind;
  s.lstm_units = {32, 16, 8};
  s.encoder_filters = {8, 16, 32};
  s.decoder_filters = {32, 16, 8};
  s.window_len = 256;
  s.train_stride = 16;
  s.batch_size = 4;
  s.max_epochs = 30;
  return s;
}

NetworkSpec NetworkSpec::for_profile(Profile profile, ModelKind kind) {
  return profile == Profile::Paper ? paper(kind) : small(kind);
}

void NetworkSpec::validate() const {
  auto invalid = [](const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); };
  if (lstm_units.empty() || std::find(lstm_units.begin(), lstm_units.end(), 0u) != lstm_units.end()) {
    invalid("lstm_units must be a non-empty list of positive sizes");
  }
  if (window_len == 0 || window_len % 8 != 0) invalid("window_len " + std::to_string(window_len) + " is not a multiple of 8");
  if (train_stride == 0 || train_stride > window_len) invalid("train_stride must lie in (0, window_len]");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) invalid("dropout_rate must lie in [0, 1)");
  if (l2_lambda < 0.0 || lr < 0.0) invalid("l2_lambda and lr must be non-negative");
  if (batch_size == 0 || max_epochs == 0) invalid("batch_size and max_epochs must be positive");
  if (kind == ModelKind::LSTM_UNET) {
    if (encoder_filters.empty() || std::find(encoder_filters.begin(), encoder_filters.end(), 0u) != encoder_filters.end()) {
      invalid("encoder_filters must be a non-empty list of positive sizes");
    }
    if (!std::equal(encoder_filters.rbegin(), encoder_filters.rend(), decoder_filters.begin(), decoder_filters.end())) {
      invalid("decoder_filters must be the reverse of encoder_filters");
    }
    const std::size_t factor = std::size_t{1} << encoder_filters.size();
    if (window_len % factor != 0) {
      invalid("window_len " + std::to_string(window_len) + " is not divisible by " + std::to_string(factor));
    }
    if (conv_kernel == 0) invalid("conv_kernel must be positive");
  }
}

std::string spec_to_json(const NetworkSpec& s) {
  nlohmann::json j;
  j["model_kind"] = std::string(to_string(s.kind));
  j["lstm_units"] = s.lstm_units;
  j["encoder_filters"] = s.encoder_filters;
  j["decoder_filters"] = s.decoder_filters;
  j["conv_kernel"] = s.conv_kernel;
  j["dropout_rate"] = s.dropout_rate;
  j["l2_lambda"] = s.l2_lambda;
  j["lr"] = s.lr;
  j["batch_size"] = s.batch_size;
  j["max_epochs"] = s.max_epochs;
  j["patience"] = s.patience;
  j["window_len"] = s.window_len;
  j["train_stride"] = s.train_stride;
  j["seed"] = s.seed;
  return j.dump(2) + "\n";
}

NetworkSpec spec_from_json(std::string_view text) {
  NetworkSpec s;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto kind = j.at("model_kind").get<std::string>();
    if (kind != "LSTM" && kind != "LSTM_UNET") throw Error(ErrorCode::InvalidSpec, "unknown model_kind " + kind);
    s.kind = kind == "LSTM" ? ModelKind::LSTM : ModelKind::LSTM_UNET;
    s.lstm_units = j.at("lstm_units").get<std::vector<std::size_t>>();
    s.encoder_filters = j.at("encoder_filters").get<std::vector<std::size_t>>();
    s.decoder_filters = j.at("decoder_filters").get<std::vector<std::size_t>>();
    s.conv_kernel = j.at("conv_kernel").get<std::size_t>();
    s.dropout_rate = j.at("dropout_rate").get<double>();
    s.l2_lambda = j.at("l2_lambda").get<double>();
    s.lr = j.at("lr").get<double>();
    s.batch_size = j.at("batch_size").get<std::size_t>();
    s.max_epochs = j.at("max_epochs").get<std::size_t>();
    s.patience = j.at("patience").get<std::size_t>();
    s.window_len = j.at("window_len").get<std::size_t>();
    s.train_stride = j.at("train_stride").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("invalid network spec JSON: ") + e.what());
  }
  s.validate();
  return s;
}

NodeId lstm_layer(Graph& g, NodeId inputs, Parameter& w_input, Parameter& w_recurrent, Parameter& bias) {
  const Shape in_shape = g.value(inputs).shape();
  if (in_shape.size() != 3) throw Error(ErrorCode::ShapeMismatch, "lstm input must be [B, T, d_in]");
  const std::size_t batch = in_shape[0], steps = in_shape[1], d_in = in_shape[2];
  const std::size_t units = w_recurrent.value.rank() == 2 ? w_recurrent.value.dim(0) : 0;
  if (w_input.value.shape() != Shape{d_in, 4 * units} || w_recurrent.value.shape() != Shape{units, 4 * units} ||
      bias.value.shape() != Shape{4 * units}) {
    throw Error(ErrorCode::ShapeMismatch, "lstm weights " + ad::shape_string(w_input.value.shape()) + ", " +
                                              ad::shape_string(w_recurrent.value.shape()) + ", " +
                                              ad::shape_string(bias.value.shape()) + " do not fit input width " +
                                              std::to_string(d_in));
  }

  const NodeId wx = g.parameter(w_input);
  const NodeId wh = g.parameter(w_recurrent);
  const NodeId b = g.parameter(bias);
  // Input projections for every step at once.
  const NodeId flat = g.reshape(inputs, {batch * steps, d_in});
  const NodeId projected = g.reshape(g.add_bias(g.matmul(flat, wx), b), {batch, steps, 4 * units});

  std::vector<NodeId> outputs;
  outputs.reserve(steps);
  NodeId h{}, c{};
  for (std::size_t t = 0; t < steps; ++t) {
    NodeId z = g.time_step(projected, t);
    if (t > 0) z = g.add(z, g.matmul(h, wh));
    const NodeId in_gate = g.sigmoid(g.slice_last(z, 0, units));
    const NodeId forget_gate = g.sigmoid(g.slice_last(z, units, 2 * units));
    const NodeId candidate = g.tanh(g.slice_last(z, 2 * units, 3 * units));
    const NodeId out_gate = g.sigmoid(g.slice_last(z, 3 * units, 4 * units));
    const NodeId fresh = g.mul(in_gate, candidate);
    c = t == 0 ? fresh : g.add(g.mul(forget_gate, c), fresh);
    h = g.mul(out_gate, g.tanh(c));
    outputs.push_back(h);
  }
  return g.relu(g.stack_time(outputs));
}

Tensor lstm_layer_forward(const Tensor& inputs, const LstmWeights& weights) {
  if (inputs.rank() != 2) throw Error(ErrorCode::ShapeMismatch, "lstm_layer_forward expects [T, d_in]");
  Parameter wx("w_input", weights.w_input);
  Parameter wh("w_recurrent", weights.w_recurrent);
  Parameter b("bias", weights.bias);
  Graph g(ad::Mode::Eval);
  Tensor x = inputs;
  x.reshape({1, inputs.dim(0), inputs.dim(1)});
  Tensor out = g.value(lstm_layer(g, g.constant(std::move(x)), wx, wh, b));
  out.reshape({out.dim(1), out.dim(2)});
  return out;
}

namespace {

Tensor uniform_tensor(RandomStream& rng, Shape shape, double limit) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

// [units, 4 * units] with each gate block an orthogonal [units, units] matrix.
Tensor orthogonal_recurrent(RandomStream& rng, std::size_t units) {
  Tensor t({units, 4 * units});
  for (std::size_t gate = 0; gate < 4; ++gate) {
    Eigen::MatrixXd a(units, units);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(units, units);
    // Sign fix makes the factorization unique.
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      if (r(j, j) < 0) q.col(j) *= -1.0;
    }
    for (std::size_t i = 0; i < units; ++i) {
      for (std::size_t j = 0; j < units; ++j) {
        t[i * 4 * units + gate * units + j] = q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  }
  return t;
}

}  // namespace

std::size_t Network::add_param(std::string name, Tensor value, bool decay) {
  params_.emplace_back(std::move(name), std::move(value), decay);
  return params_.size() - 1;
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  RandomStream rng = RandomStream::derive(spec_.seed, "init");

  std::size_t width = kInputChannels;
  for (std::size_t l = 0; l < spec_.lstm_units.size(); ++l) {
    const std::size_t units = spec_.lstm_units[l];
    const std::string prefix = "lstm" + std::to_string(l) + ".";
    LstmLayer layer{};
    layer.in = width;
    layer.units = units;
    layer.w_input = add_param(prefix + "w_input", uniform_tensor(rng, {width, 4 * units}, std::sqrt(3.0 / width)), true);
    layer.w_recurrent = add_param(prefix + "w_recurrent", orthogonal_recurrent(rng, units), true);
    Tensor bias({4 * units});
    for (std::size_t j = units; j < 2 * units; ++j) bias[j] = 1.0;  // forget gate
    layer.bias = add_param(prefix + "bias", std::move(bias), false);
    lstm_.push_back(layer);
    width = units;
  }

  if (spec_.kind == ModelKind::LSTM_UNET) {
    const std::size_t k = spec_.conv_kernel;
    std::vector<std::size_t> skip_widths;
    for (std::size_t l = 0; l < spec_.encoder_filters.size(); ++l) {
      const std::size_t out = spec_.encoder_filters[l];
      const std::string prefix = "enc" + std::to_string(l) + ".";
      ConvLayer layer{};
      layer.in = width;
      layer.out = out;
      layer.kernel = add_param(prefix + "kernel", uniform_tensor(rng, {k, width, out}, std::sqrt(6.0 / (k * width))), false);
      layer.bias = add_param(prefix + "bias", Tensor({out}), false);
      encoder_.push_back(layer);
      skip_widths.push_back(out);
      width = out;
    }
    for (std::size_t l = 0; l < spec_.decoder_filters.size(); ++l) {
      const std::size_t out = spec_.decoder_filters[l];
      const std::size_t in = width + skip_widths[skip_widths.size() - 1 - l];
      const std::string prefix = "dec" + std::to_string(l) + ".";
      ConvLayer layer{};
      layer.in = in;
      layer.out = out;
      layer.kernel = add_param(prefix + "kernel", uniform_tensor(rng, {k, in, out}, std::sqrt(6.0 / (k * in))), false);
      layer.bias = add_param(prefix + "bias", Tensor({out}), false);
      decoder_.push_back(layer);
      width = out;
    }
  }

  dense_in_ = width;
  dense_weight_ = add_param("dense.weight", uniform_tensor(rng, {width, kOutputChannels}, std::sqrt(3.0 / width)), false);
  dense_bias_ = add_param("dense.bias", Tensor({kOutputChannels}), false);
}

NodeId Network::forward(Graph& g, NodeId inputs) {
  const Shape shape = g.value(inputs).shape();
  if (shape.size() != 3 || shape[2] != kInputChannels) {
    throw Error(ErrorCode::ShapeMismatch, "network input must be [B, T, 3], got " + ad::shape_string(shape));
  }
  const std::size_t batch = shape[0], steps = shape[1];
  if (spec_.kind == ModelKind::LSTM_UNET && steps % (std::size_t{1} << encoder_.size()) != 0) {
    throw Error(ErrorCode::ShapeMismatch, "window length " + std::to_string(steps) + " does not survive pooling");
  }

  NodeId h = inputs;
  for (const auto& layer : lstm_) {
    h = lstm_layer(g, h, params_[layer.w_input], params_[layer.w_recurrent], params_[layer.bias]);
    h = g.dropout(h, spec_.dropout_rate);
  }

  if (spec_.kind == ModelKind::LSTM_UNET) {
    std::vector<NodeId> skips;
    for (const auto& layer : encoder_) {
      h = g.leaky_relu(g.conv1d(h, g.parameter(params_[layer.kernel]), g.parameter(params_[layer.bias])));
      skips.push_back(h);
      h = g.maxpool1d(h);
    }
    for (std::size_t l = 0; l < decoder_.size(); ++l) {
      const auto& layer = decoder_[l];
      h = g.concat(g.upsample1d(h), skips[skips.size() - 1 - l]);
      h = g.leaky_relu(g.conv1d(h, g.parameter(params_[layer.kernel]), g.parameter(params_[layer.bias])));
    }
  }

  const NodeId flat = g.reshape(h, {batch * steps, dense_in_});
  const NodeId out = g.add_bias(g.matmul(flat, g.parameter(params_[dense_weight_])), g.parameter(params_[dense_bias_]));
  return g.reshape(out, {batch, steps, kOutputChannels});
}

Tensor Network::predict(const Tensor& inputs) {
  Graph g(ad::Mode::Eval);
  return g.value(forward(g, g.constant(inputs)));
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<Parameter*> Network::decayed_parameters() {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (p.decay) out.push_back(&p);
  }
  return out;
}

std::size_t Network::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::vector<std::string> Network::layer_listing() const {
  std::vector<std::string> out;
  for (const auto& l : lstm_) out.push_back("LSTM(" + std::to_string(l.in) + "->" + std::to_string(l.units) + ")");
  if (!encoder_.empty()) {
    std::string enc = "enc(";
    for (std::size_t i = 0; i < encoder_.size(); ++i) enc += (i ? "," : "") + std::to_string(encoder_[i].out);
    out.push_back(enc + ")");
    std::string dec = "dec(";
    for (std::size_t i = 0; i < decoder_.size(); ++i) dec += (i ? "," : "") + std::to_string(decoder_[i].out);
    out.push_back(dec + ")");
  }
  out.push_back("dense(" + std::to_string(dense_in_) + "->" + std::to_string(kOutputChannels) + ")");
  return out;
}

namespace {

Tensor random_tensor(RandomStream& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace

ad::GradCheckReport check_dense_layer(std::uint64_t seed, const ad::GradCheckOptions& options) {
  RandomStream rng = RandomStream::derive(seed, "gradcheck-dense");
  const Tensor x = random_tensor(rng, {5, 4});
  const Tensor target = random_tensor(rng, {5, 3});
  Parameter w("weight", random_tensor(rng, {4, 3}));
  Parameter b("bias", random_tensor(rng, {3}));
  std::vector<Parameter*> params{&w, &b};
  return ad::gradient_check(
      "dense+mse",
      [&](Graph& g) {
        const NodeId y = g.add_bias(g.matmul(g.constant(x), g.parameter(w)), g.parameter(b));
        return g.mse_loss(y, g.constant(target));
      },
      params, options);
}

ad::GradCheckReport check_lstm_cell(std::uint64_t seed, const ad::GradCheckOptions& options) {
  RandomStream rng = RandomStream::derive(seed, "gradcheck-lstm");
  const std::size_t batch = 2, steps = 3, d_in = 3, units = 4;
  const Tensor x = random_tensor(rng, {batch, steps, d_in});
  const Tensor target = random_tensor(rng, {batch, steps, units});
  Parameter wx("w_input", random_tensor(rng, {d_in, 4 * units}));
  Parameter wh("w_recurrent", random_tensor(rng, {units, 4 * units}));
  Parameter b("bias", random_tensor(rng, {4 * units}));
  std::vector<Parameter*> params{&wx, &wh, &b};
  return ad::gradient_check(
      "lstm_cell",
      [&](Graph& g) { return g.mse_loss(lstm_layer(g, g.constant(x), wx, wh, b), g.constant(target)); }, params,
      options);
}

constexpr double kKinkMarginSteps = 10.0;
constexpr std::size_t kKinkSearchAttempts = 256;

ad::GradCheckReport check_small_model(ModelKind kind, std::uint64_t seed, const ad::GradCheckOptions& options,
                                      std::size_t window_len) {
  NetworkSpec spec = NetworkSpec::small(kind);
  spec.window_len = window_len;
  spec.train_stride = window_len;
  spec.seed = seed;
  Network net(spec);
  const std::size_t batch = 2;

  // Central differences straddling a ReLU or max-pool kink measure a one-sided
  // mix of slopes, so draw inputs until every kink sits well outside the step.
  const double wanted = kKinkMarginSteps * options.step;
  Tensor x, target;
  double best_margin = -1.0;
  for (std::size_t attempt = 0; attempt < kKinkSearchAttempts && best_margin < wanted; ++attempt) {
    RandomStream rng = RandomStream::derive(seed, "gradcheck-model", attempt);
    Tensor xa = random_tensor(rng, {batch, window_len, kInputChannels});
    Tensor ta = random_tensor(rng, {batch, window_len, kOutputChannels});
    Graph probe(ad::Mode::Eval);
    net.forward(probe, probe.constant(xa));
    const double margin = ad::kink_margin(probe);
    if (margin > best_margin) {
      best_margin = margin;
      x = std::move(xa);
      target = std::move(ta);
    }
  }
  auto params = net.parameters();
  auto decayed = net.decayed_parameters();
  return ad::gradient_check(
      std::string("small_") + std::string(to_string(kind)),
      [&](Graph& g) {
        NodeId loss = g.mse_loss(net.forward(g, g.constant(x)), g.constant(target));
        for (Parameter* p : decayed) loss = g.add(loss, g.l2_penalty(g.parameter(*p), spec.l2_lambda));
        return loss;
      },
      params, options);
}

}  // namespace ecg12r::nn
