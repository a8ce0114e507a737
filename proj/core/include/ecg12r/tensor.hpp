#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecg12r/random.hpp"

/// Minimal reverse-mode automatic differentiation over dense double tensors.
///
/// Graphs are define-by-run: every op call computes its forward value
/// immediately and appends a node to the tape, so the node list is always in
/// topological order. backward() walks the tape in reverse.
///
/// Layout conventions: sequences are [batch, time, channels], row-major.
/// matmul works on rank-2 tensors; conv1d, maxpool1d and upsample1d work on
/// rank-3 tensors along the time axis.
namespace ecg12r::ad {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape) noexcept;

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(Shape{1}, std::vector<double>{v}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const noexcept { return shape_[axis]; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double item() const;
  void fill(double v);
  /// Same data, new shape of equal size.
  void reshape(Shape shape);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// A trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool decay = false;  // included in the L2 penalty

  Parameter() = default;
  Parameter(std::string n, Tensor v, bool l2 = false)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()), decay(l2) {}

  void zero_grad() { grad = Tensor(value.shape()); }
};

enum class OpKind {
  Constant,
  Variable,
  Param,
  MatMul,
  Add,
  AddBias,
  Mul,
  Scale,
  Sigmoid,
  Tanh,
  Relu,
  LeakyRelu,
  Conv1d,
  MaxPool1d,
  Upsample1d,
  Concat,
  Dropout,
  MseLoss,
  L2Penalty,
  Sum,
  SliceLast,
  TimeStep,
  StackTime,
  Reshape,
};

std::string_view to_string(OpKind kind) noexcept;

struct NodeId {
  std::uint32_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

enum class Mode { Train, Eval };

inline constexpr double kLeakySlope = 0.01;

class Graph {
 public:
  explicit Graph(Mode mode = Mode::Eval, RandomStream rng = RandomStream(0));

  Mode mode() const noexcept { return mode_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Leaves.
  NodeId constant(Tensor value);
  /// Leaf whose gradient is kept on the node (see grad()).
  NodeId variable(Tensor value);
  /// Leaf bound to a Parameter; backward() adds into parameter.grad.
  NodeId parameter(Parameter& parameter);

  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  /// x[..., n] + bias[n].
  NodeId add_bias(NodeId x, NodeId bias);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId x, double factor);
  NodeId sigmoid(NodeId x);
  NodeId tanh(NodeId x);
  NodeId relu(NodeId x);
  NodeId leaky_relu(NodeId x, double slope = kLeakySlope);
  /// x [B, T, Cin], kernel [K, Cin, Cout], bias [Cout]; stride 1, zero "same" padding.
  NodeId conv1d(NodeId x, NodeId kernel, NodeId bias);
  /// Width 2, stride 2 along time; odd trailing samples are dropped.
  NodeId maxpool1d(NodeId x);
  /// Nearest-neighbour, factor 2 along time.
  NodeId upsample1d(NodeId x);
  /// Concatenation along the last axis.
  NodeId concat(NodeId a, NodeId b);
  /// Inverted dropout in Train mode, identity in Eval mode.
  NodeId dropout(NodeId x, double rate);
  /// Mean squared error. With a mask, only entries with nonzero weight count
  /// and the mean is taken over the mask sum.
  NodeId mse_loss(NodeId prediction, NodeId target, const Tensor* mask = nullptr);
  /// lambda * sum(w^2).
  NodeId l2_penalty(NodeId w, double lambda);
  NodeId sum(NodeId x);
  /// x[..., begin:end].
  NodeId slice_last(NodeId x, std::size_t begin, std::size_t end);
  /// x[:, t, :] of a [B, T, C] tensor.
  NodeId time_step(NodeId x, std::size_t t);
  /// Stacks T tensors of shape [B, C] into [B, T, C].
  NodeId stack_time(std::span<const NodeId> steps);
  NodeId reshape(NodeId x, Shape shape);

  const Tensor& value(NodeId id) const;
  /// Gradient of the last backward() loss with respect to this node.
  const Tensor& grad(NodeId id) const;
  bool requires_grad(NodeId id) const;
  OpKind kind(NodeId id) const;
  std::span<const std::uint32_t> inputs(NodeId id) const;

  /// Reverse-mode sweep from a scalar loss. Node gradients are reset first;
  /// parameter gradients accumulate. Throws NotScalarLoss.
  void backward(NodeId loss);

 private:
  struct Node {
    OpKind kind = OpKind::Constant;
    std::vector<std::uint32_t> inputs;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    double scalar = 0.0;
    std::size_t a = 0;
    std::size_t b = 0;
    std::vector<double> saved;            // dropout mask, mse weights
    std::vector<std::size_t> saved_index;  // maxpool argmax
  };

  NodeId push(Node node);
  const Node& node(NodeId id) const;
  void propagate(const Node& n, const Tensor& g);
  Tensor& grad_slot(std::uint32_t index);

  Mode mode_;
  RandomStream rng_;
  std::vector<Node> nodes_;
};

}  // namespace ecg12r::ad
