#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecg12r/gradcheck.hpp"
#include "ecg12r/tensor.hpp"

namespace ecg12r::nn {

enum class ModelKind { LSTM, LSTM_UNET };
enum class Profile { Paper, Small };

std::string_view to_string(ModelKind kind) noexcept;
std::string_view to_string(Profile profile) noexcept;
std::optional<Profile> parse_profile(std::string_view text) noexcept;

/// Architecture and training hyperparameters of one personalized model.
struct NetworkSpec {
  ModelKind kind = ModelKind::LSTM_UNET;
  std::vector<std::size_t> lstm_units{256, 128, 64};
  std::vector<std::size_t> encoder_filters{64, 128, 256};
  std::vector<std::size_t> decoder_filters{256, 128, 64};
  std::size_t conv_kernel = 3;
  double dropout_rate = 0.2;
  double l2_lambda = 0.001;
  double lr = 0.001;
  std::size_t batch_size = 100;
  std::size_t max_epochs = 400;
  std::size_t patience = 20;
  std::size_t window_len = 1024;
  std::size_t train_stride = 512;
  std::uint64_t seed = 0;

  static NetworkSpec paper(ModelKind kind);
  /// Reduced sizes for desk-scale runs.
  static NetworkSpec small(ModelKind kind);
  static NetworkSpec for_profile(Profile profile, ModelKind kind);

  /// Throws InvalidSpec.
  void validate() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

std::string spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(std::string_view text);

inline constexpr std::size_t kInputChannels = 3;
inline constexpr std::size_t kOutputChannels = 9;

/// One unidirectional LSTM layer over [B, T, d_in] with zero initial state,
/// gate order (input, forget, cell, output) in the packed weight columns,
/// followed by a ReLU on the output sequence. Returns [B, T, units].
ad::NodeId lstm_layer(ad::Graph& g, ad::NodeId inputs, ad::Parameter& w_input, ad::Parameter& w_recurrent,
                      ad::Parameter& bias);

struct LstmWeights {
  ad::Tensor w_input;      // [d_in, 4 * units]
  ad::Tensor w_recurrent;  // [units, 4 * units]
  ad::Tensor bias;         // [4 * units]
};

/// Unbatched evaluation of lstm_layer: [T, d_in] -> [T, units].
ad::Tensor lstm_layer_forward(const ad::Tensor& inputs, const LstmWeights& weights);

/// Parameters plus wiring for either model kind. Parameter storage is fixed
/// at construction, so references handed to a Graph stay valid.
class Network {
 public:
  /// Builds and initializes the parameters from spec.seed. Throws InvalidSpec.
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const noexcept { return spec_; }

  /// inputs [B, T, 3] -> [B, T, 9]. Dropout is active only in Train graphs.
  ad::NodeId forward(ad::Graph& g, ad::NodeId inputs);

  /// Eval-mode forward for a batch of windows given as [B, T, 3].
  ad::Tensor predict(const ad::Tensor& inputs);

  std::vector<ad::Parameter*> parameters();
  /// Weight matrices that carry the L2 penalty (LSTM input and recurrent kernels).
  std::vector<ad::Parameter*> decayed_parameters();
  std::vector<ad::Parameter>& parameter_storage() noexcept { return params_; }
  const std::vector<ad::Parameter>& parameter_storage() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept;

  /// Human-readable layer list, e.g. "LSTM(3->256)".
  std::vector<std::string> layer_listing() const;

 private:
  struct LstmLayer {
    std::size_t w_input, w_recurrent, bias, in, units;
  };
  struct ConvLayer {
    std::size_t kernel, bias, in, out;
  };

  std::size_t add_param(std::string name, ad::Tensor value, bool decay);

  NetworkSpec spec_;
  std::vector<ad::Parameter> params_;
  std::vector<LstmLayer> lstm_;
  std::vector<ConvLayer> encoder_;
  std::vector<ConvLayer> decoder_;
  std::size_t dense_weight_ = 0;
  std::size_t dense_bias_ = 0;
  std::size_t dense_in_ = 0;
};

/// Gradient checks for a single LSTM cell (one step), a dense layer with MSE,
/// and the small-profile model of the given kind on a short window.
ad::GradCheckReport check_dense_layer(std::uint64_t seed, const ad::GradCheckOptions& options);
ad::GradCheckReport check_lstm_cell(std::uint64_t seed, const ad::GradCheckOptions& options);
ad::GradCheckReport check_small_model(ModelKind kind, std::uint64_t seed, const ad::GradCheckOptions& options,
                                      std::size_t window_len = 16);

}  // namespace ecg12r::nn
