#include "ecg12r/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "ecg12r/error.hpp"

namespace ecg12r::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

ConstMapMat view(const Tensor& t, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
  return {t.data().data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

MapMat view(Tensor& t, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
  return {t.data().data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

[[noreturn]] void shape_error(OpKind op, const std::string& detail) {
  throw Error(ErrorCode::ShapeMismatch, std::string(to_string(op)) + ": " + detail);
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw Error(ErrorCode::ShapeMismatch, "tensor data length " + std::to_string(data_.size()) +
                                              " does not match shape " + shape_string(shape_));
  }
}

double Tensor::item() const {
  if (data_.size() != 1) throw Error(ErrorCode::NotScalarLoss, "item() on shape " + shape_string(shape_));
  return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::reshape(Shape shape) {
  if (shape_size(shape) != data_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  shape_ = std::move(shape);
}

std::string_view to_string(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Constant: return "constant";
    case OpKind::Variable: return "variable";
    case OpKind::Param: return "parameter";
    case OpKind::MatMul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::AddBias: return "add_bias";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Tanh: return "tanh";
    case OpKind::Relu: return "relu";
    case OpKind::LeakyRelu: return "leaky_relu";
    case OpKind::Conv1d: return "conv1d";
    case OpKind::MaxPool1d: return "maxpool1d";
    case OpKind::Upsample1d: return "upsample1d";
    case OpKind::Concat: return "concat";
    case OpKind::Dropout: return "dropout";
    case OpKind::MseLoss: return "mse_loss";
    case OpKind::L2Penalty: return "l2_penalty";
    case OpKind::Sum: return "sum";
    case OpKind::SliceLast: return "slice_last";
    case OpKind::TimeStep: return "time_step";
    case OpKind::StackTime: return "stack_time";
    case OpKind::Reshape: return "reshape";
  }
  return "?";
}

Graph::Graph(Mode mode, RandomStream rng) : mode_(mode), rng_(rng) { nodes_.reserve(256); }

NodeId Graph::push(Node n) {
  for (auto in : n.inputs) n.requires_grad = n.requires_grad || nodes_[in].requires_grad;
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Graph::Node& Graph::node(NodeId id) const {
  if (id.index >= nodes_.size()) throw Error(ErrorCode::ShapeMismatch, "node id out of range");
  return nodes_[id.index];
}

const Tensor& Graph::value(NodeId id) const { return node(id).value; }

const Tensor& Graph::grad(NodeId id) const {
  const Node& n = node(id);
  static const Tensor kEmpty;
  return n.grad.empty() ? kEmpty : n.grad;
}

bool Graph::requires_grad(NodeId id) const { return node(id).requires_grad; }
OpKind Graph::kind(NodeId id) const { return node(id).kind; }

std::span<const std::uint32_t> Graph::inputs(NodeId id) const { return node(id).inputs; }

NodeId Graph::constant(Tensor value) {
  Node n;
  n.kind = OpKind::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::variable(Tensor value) {
  Node n;
  n.kind = OpKind::Variable;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

NodeId Graph::parameter(Parameter& p) {
  Node n;
  n.kind = OpKind::Param;
  n.value = p.value;
  n.requires_grad = true;
  n.param = &p;
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.rank() != 2 || y.rank() != 2 || x.dim(1) != y.dim(0)) {
    shape_error(OpKind::MatMul, shape_string(x.shape()) + " x " + shape_string(y.shape()));
  }
  Node n;
  n.kind = OpKind::MatMul;
  n.inputs = {a.index, b.index};
  n.value = Tensor({x.dim(0), y.dim(1)});
  view(n.value, x.dim(0), y.dim(1)).noalias() = view(x, x.dim(0), x.dim(1)) * view(y, y.dim(0), y.dim(1));
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.shape() != y.shape()) shape_error(OpKind::Add, shape_string(x.shape()) + " + " + shape_string(y.shape()));
  Node n;
  n.kind = OpKind::Add;
  n.inputs = {a.index, b.index};
  n.value = x;
  for (std::size_t i = 0; i < y.size(); ++i) n.value[i] += y[i];
  return push(std::move(n));
}

NodeId Graph::add_bias(NodeId xid, NodeId bid) {
  const Tensor& x = value(xid);
  const Tensor& b = value(bid);
  if (x.rank() == 0 || b.rank() != 1 || x.shape().back() != b.dim(0)) {
    shape_error(OpKind::AddBias, shape_string(x.shape()) + " + bias " + shape_string(b.shape()));
  }
  Node n;
  n.kind = OpKind::AddBias;
  n.inputs = {xid.index, bid.index};
  n.value = x;
  const std::size_t width = b.size();
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] += b[i % width];
  return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.shape() != y.shape()) shape_error(OpKind::Mul, shape_string(x.shape()) + " * " + shape_string(y.shape()));
  Node n;
  n.kind = OpKind::Mul;
  n.inputs = {a.index, b.index};
  n.value = x;
  for (std::size_t i = 0; i < y.size(); ++i) n.value[i] *= y[i];
  return push(std::move(n));
}

NodeId Graph::scale(NodeId x, double factor) {
  Node n;
  n.kind = OpKind::Scale;
  n.inputs = {x.index};
  n.scalar = factor;
  n.value = value(x);
  for (auto& v : n.value.data()) v *= factor;
  return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId x) {
  Node n;
  n.kind = OpKind::Sigmoid;
  n.inputs = {x.index};
  n.value = value(x);
  for (auto& v : n.value.data()) v = sigmoid_scalar(v);
  return push(std::move(n));
}

NodeId Graph::tanh(NodeId x) {
  Node n;
  n.kind = OpKind::Tanh;
  n.inputs = {x.index};
  n.value = value(x);
  for (auto& v : n.value.data()) v = std::tanh(v);
  return push(std::move(n));
}

NodeId Graph::relu(NodeId x) {
  Node n;
  n.kind = OpKind::Relu;
  n.inputs = {x.index};
  n.value = value(x);
  for (auto& v : n.value.data()) v = v > 0.0 ? v : 0.0;
  return push(std::move(n));
}

NodeId Graph::leaky_relu(NodeId x, double slope) {
  Node n;
  n.kind = OpKind::LeakyRelu;
  n.inputs = {x.index};
  n.scalar = slope;
  n.value = value(x);
  for (auto& v : n.value.data()) v = v > 0.0 ? v : slope * v;
  return push(std::move(n));
}

NodeId Graph::conv1d(NodeId xid, NodeId kid, NodeId bid) {
  const Tensor& x = value(xid);
  const Tensor& k = value(kid);
  const Tensor& b = value(bid);
  if (x.rank() != 3 || k.rank() != 3 || b.rank() != 1 || k.dim(1) != x.dim(2) || b.dim(0) != k.dim(2)) {
    shape_error(OpKind::Conv1d, "input " + shape_string(x.shape()) + ", kernel " + shape_string(k.shape()) +
                                    ", bias " + shape_string(b.shape()));
  }
  const std::size_t batch = x.dim(0), steps = x.dim(1), cin = x.dim(2);
  const std::size_t width = k.dim(0), cout = k.dim(2);
  const std::size_t pad = (width - 1) / 2;

  Node n;
  n.kind = OpKind::Conv1d;
  n.inputs = {xid.index, kid.index, bid.index};
  n.value = Tensor({batch, steps, cout});
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = b[i % cout];
  for (std::size_t bb = 0; bb < batch; ++bb) {
    for (std::size_t tap = 0; tap < width; ++tap) {
      // y[t] += x[t + tap - pad] * W_tap for t with a valid source row.
      const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(tap) - static_cast<std::ptrdiff_t>(pad);
      const std::size_t t0 = shift < 0 ? static_cast<std::size_t>(-shift) : 0;
      const std::size_t t1 = shift > 0 ? (steps > static_cast<std::size_t>(shift) ? steps - shift : 0) : steps;
      if (t1 <= t0) continue;
      const std::size_t rows = t1 - t0;
      auto out = view(n.value, rows, cout, (bb * steps + t0) * cout);
      const auto in = view(x, rows, cin, (bb * steps + t0 + shift) * cin);
      out.noalias() += in * view(k, cin, cout, tap * cin * cout);
    }
  }
  return push(std::move(n));
}

NodeId Graph::maxpool1d(NodeId xid) {
  const Tensor& x = value(xid);
  if (x.rank() != 3 || x.dim(1) < 2) shape_error(OpKind::MaxPool1d, "input " + shape_string(x.shape()));
  const std::size_t batch = x.dim(0), steps = x.dim(1), ch = x.dim(2), half = steps / 2;
  Node n;
  n.kind = OpKind::MaxPool1d;
  n.inputs = {xid.index};
  n.value = Tensor({batch, half, ch});
  n.saved_index.resize(n.value.size());
  for (std::size_t bb = 0; bb < batch; ++bb) {
    for (std::size_t i = 0; i < half; ++i) {
      for (std::size_t c = 0; c < ch; ++c) {
        const std::size_t first = (bb * steps + 2 * i) * ch + c;
        const std::size_t second = first + ch;
        const std::size_t pick = x[second] > x[first] ? second : first;
        const std::size_t o = (bb * half + i) * ch + c;
        n.value[o] = x[pick];
        n.saved_index[o] = pick;
      }
    }
  }
  return push(std::move(n));
}

NodeId Graph::upsample1d(NodeId xid) {
  const Tensor& x = value(xid);
  if (x.rank() != 3) shape_error(OpKind::Upsample1d, "input " + shape_string(x.shape()));
  const std::size_t batch = x.dim(0), steps = x.dim(1), ch = x.dim(2);
  Node n;
  n.kind = OpKind::Upsample1d;
  n.inputs = {xid.index};
  n.value = Tensor({batch, 2 * steps, ch});
  for (std::size_t bb = 0; bb < batch; ++bb) {
    for (std::size_t t = 0; t < 2 * steps; ++t) {
      const double* src = x.data().data() + (bb * steps + t / 2) * ch;
      std::copy_n(src, ch, n.value.data().data() + (bb * 2 * steps + t) * ch);
    }
  }
  return push(std::move(n));
}

NodeId Graph::concat(NodeId aid, NodeId bid) {
  const Tensor& a = value(aid);
  const Tensor& b = value(bid);
  if (a.rank() == 0 || a.rank() != b.rank() ||
      !std::equal(a.shape().begin(), a.shape().end() - 1, b.shape().begin())) {
    shape_error(OpKind::Concat, shape_string(a.shape()) + " ++ " + shape_string(b.shape()));
  }
  const std::size_t ca = a.shape().back(), cb = b.shape().back();
  const std::size_t outer = ca ? a.size() / ca : b.size() / cb;
  Shape shape = a.shape();
  shape.back() = ca + cb;
  Node n;
  n.kind = OpKind::Concat;
  n.inputs = {aid.index, bid.index};
  n.value = Tensor(shape);
  for (std::size_t r = 0; r < outer; ++r) {
    double* dst = n.value.data().data() + r * (ca + cb);
    std::copy_n(a.data().data() + r * ca, ca, dst);
    std::copy_n(b.data().data() + r * cb, cb, dst + ca);
  }
  return push(std::move(n));
}

NodeId Graph::dropout(NodeId xid, double rate) {
  if (rate < 0.0 || rate >= 1.0) shape_error(OpKind::Dropout, "rate must lie in [0, 1)");
  if (mode_ == Mode::Eval) return xid;
  const Tensor& x = value(xid);
  Node n;
  n.kind = OpKind::Dropout;
  n.inputs = {xid.index};
  n.value = x;
  n.saved.resize(x.size());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < x.size(); ++i) {
    n.saved[i] = rng_.uniform() < rate ? 0.0 : keep_scale;
    n.value[i] *= n.saved[i];
  }
  return push(std::move(n));
}

NodeId Graph::mse_loss(NodeId pid, NodeId tid, const Tensor* mask) {
  const Tensor& p = value(pid);
  const Tensor& t = value(tid);
  if (p.shape() != t.shape()) shape_error(OpKind::MseLoss, shape_string(p.shape()) + " vs " + shape_string(t.shape()));
  if (mask && mask->size() != p.size()) shape_error(OpKind::MseLoss, "mask " + shape_string(mask->shape()));
  Node n;
  n.kind = OpKind::MseLoss;
  n.inputs = {pid.index, tid.index};
  n.saved = mask ? std::vector<double>(mask->data().begin(), mask->data().end()) : std::vector<double>(p.size(), 1.0);
  double total_weight = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    acc += n.saved[i] * d * d;
    total_weight += n.saved[i];
  }
  n.scalar = total_weight > 0.0 ? total_weight : 1.0;
  n.value = Tensor::scalar(acc / n.scalar);
  return push(std::move(n));
}

NodeId Graph::l2_penalty(NodeId wid, double lambda) {
  Node n;
  n.kind = OpKind::L2Penalty;
  n.inputs = {wid.index};
  n.scalar = lambda;
  double acc = 0.0;
  for (double v : value(wid).data()) acc += v * v;
  n.value = Tensor::scalar(lambda * acc);
  return push(std::move(n));
}

NodeId Graph::sum(NodeId xid) {
  Node n;
  n.kind = OpKind::Sum;
  n.inputs = {xid.index};
  double acc = 0.0;
  for (double v : value(xid).data()) acc += v;
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

NodeId Graph::slice_last(NodeId xid, std::size_t begin, std::size_t end) {
  const Tensor& x = value(xid);
  if (x.rank() == 0 || begin >= end || end > x.shape().back()) {
    shape_error(OpKind::SliceLast, shape_string(x.shape()) + " [" + std::to_string(begin) + ":" + std::to_string(end) + "]");
  }
  const std::size_t width = x.shape().back(), out_w = end - begin, outer = x.size() / width;
  Shape shape = x.shape();
  shape.back() = out_w;
  Node n;
  n.kind = OpKind::SliceLast;
  n.inputs = {xid.index};
  n.a = begin;
  n.b = end;
  n.value = Tensor(shape);
  for (std::size_t r = 0; r < outer; ++r) {
    std::copy_n(x.data().data() + r * width + begin, out_w, n.value.data().data() + r * out_w);
  }
  return push(std::move(n));
}

NodeId Graph::time_step(NodeId xid, std::size_t t) {
  const Tensor& x = value(xid);
  if (x.rank() != 3 || t >= x.dim(1)) {
    shape_error(OpKind::TimeStep, shape_string(x.shape()) + " at t=" + std::to_string(t));
  }
  const std::size_t batch = x.dim(0), steps = x.dim(1), ch = x.dim(2);
  Node n;
  n.kind = OpKind::TimeStep;
  n.inputs = {xid.index};
  n.a = t;
  n.value = Tensor({batch, ch});
  for (std::size_t bb = 0; bb < batch; ++bb) {
    std::copy_n(x.data().data() + (bb * steps + t) * ch, ch, n.value.data().data() + bb * ch);
  }
  return push(std::move(n));
}

NodeId Graph::stack_time(std::span<const NodeId> steps) {
  if (steps.empty()) shape_error(OpKind::StackTime, "no steps");
  const Shape& first = value(steps.front()).shape();
  if (first.size() != 2) shape_error(OpKind::StackTime, "step shape " + shape_string(first));
  const std::size_t batch = first[0], ch = first[1], count = steps.size();
  Node n;
  n.kind = OpKind::StackTime;
  n.value = Tensor({batch, count, ch});
  n.inputs.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    const Tensor& s = value(steps[t]);
    if (s.shape() != first) shape_error(OpKind::StackTime, "step shapes " + shape_string(first) + " and " + shape_string(s.shape()));
    n.inputs.push_back(steps[t].index);
    for (std::size_t bb = 0; bb < batch; ++bb) {
      std::copy_n(s.data().data() + bb * ch, ch, n.value.data().data() + (bb * count + t) * ch);
    }
  }
  return push(std::move(n));
}

NodeId Graph::reshape(NodeId xid, Shape shape) {
  Node n;
  n.kind = OpKind::Reshape;
  n.inputs = {xid.index};
  n.value = value(xid);
  try {
    n.value.reshape(std::move(shape));
  } catch (const Error& e) {
    shape_error(OpKind::Reshape, e.what());
  }
  return push(std::move(n));
}

Tensor& Graph::grad_slot(std::uint32_t index) {
  Node& n = nodes_[index];
  if (n.grad.empty() && !n.value.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Graph::backward(NodeId loss) {
  const Node& root = node(loss);
  if (root.value.size() != 1) {
    throw Error(ErrorCode::NotScalarLoss, "loss has shape " + shape_string(root.value.shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor();
  if (!root.requires_grad) return;
  grad_slot(loss.index)[0] = 1.0;

  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.kind == OpKind::Param) {
      if (n.param->grad.shape() != n.value.shape()) n.param->zero_grad();
      for (std::size_t k = 0; k < n.grad.size(); ++k) n.param->grad[k] += n.grad[k];
      continue;
    }
    propagate(n, n.grad);
  }
}

void Graph::propagate(const Node& n, const Tensor& g) {
  auto wants = [&](std::size_t k) { return nodes_[n.inputs[k]].requires_grad; };
  auto in_value = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k]].value; };

  switch (n.kind) {
    case OpKind::Constant:
    case OpKind::Variable:
    case OpKind::Param:
      return;

    case OpKind::MatMul: {
      const Tensor& a = in_value(0);
      const Tensor& b = in_value(1);
      const std::size_t m = a.dim(0), k = a.dim(1), cols = b.dim(1);
      const auto gy = view(g, m, cols);
      if (wants(0)) view(grad_slot(n.inputs[0]), m, k).noalias() += gy * view(b, k, cols).transpose();
      if (wants(1)) view(grad_slot(n.inputs[1]), k, cols).noalias() += view(a, m, k).transpose() * gy;
      return;
    }

    case OpKind::Add:
      for (std::size_t s = 0; s < 2; ++s) {
        if (!wants(s)) continue;
        Tensor& gi = grad_slot(n.inputs[s]);
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
      }
      return;

    case OpKind::AddBias: {
      if (wants(0)) {
        Tensor& gx = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (wants(1)) {
        Tensor& gb = grad_slot(n.inputs[1]);
        const std::size_t width = gb.size();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i % width] += g[i];
      }
      return;
    }

    case OpKind::Mul: {
      const Tensor& a = in_value(0);
      const Tensor& b = in_value(1);
      if (wants(0)) {
        Tensor& ga = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
      }
      if (wants(1)) {
        Tensor& gb = grad_slot(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
      }
      return;
    }

    case OpKind::Scale: {
      Tensor& gx = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += n.scalar * g[i];
      return;
    }

    case OpKind::Sigmoid: {
      Tensor& gx = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
      return;
    }

    case OpKind::Tanh: {
      Tensor& gx = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
      return;
    }

    case OpKind::Relu: {
      const Tensor& x = in_value(0);
      Tensor& gx = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += x[i] > 0.0 ? g[i] : 0.0;
      return;
    }

    case OpKind::LeakyRelu: {
      const Tensor& x = in_value(0);
      Tensor& gx = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += x[i] > 0.0 ? g[i] : n.scalar * g[i];
      return;
    }

    case OpKind::Conv1d: {
      const Tensor& x = in_value(0);
      const Tensor& k = in_value(1);
      const std::size_t batch = x.dim(0), steps = x.dim(1), cin = x.dim(2);
      const std::size_t width = k.dim(0), cout = k.dim(2);
      const std::size_t pad = (width - 1) / 2;
      Tensor* gx = wants(0) ? &grad_slot(n.inputs[0]) : nullptr;
      Tensor* gk = wants(1) ? &grad_slot(n.inputs[1]) : nullptr;
      for (std::size_t bb = 0; bb < batch; ++bb) {
        for (std::size_t tap = 0; tap < width; ++tap) {
          const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(tap) - static_cast<std::ptrdiff_t>(pad);
          const std::size_t t0 = shift < 0 ? static_cast<std::size_t>(-shift) : 0;
          const std::size_t t1 = shift > 0 ? (steps > static_cast<std::size_t>(shift) ? steps - shift : 0) : steps;
          if (t1 <= t0) continue;
          const std::size_t rows = t1 - t0;
          const auto gy = view(g, rows, cout, (bb * steps + t0) * cout);
          const std::size_t src = (bb * steps + t0 + shift) * cin;
          if (gx) view(*gx, rows, cin, src).noalias() += gy * view(k, cin, cout, tap * cin * cout).transpose();
          if (gk) view(*gk, cin, cout, tap * cin * cout).noalias() += view(x, rows, cin, src).transpose() * gy;
        }
      }
      if (wants(2)) {
        Tensor& gb = grad_slot(n.inputs[2]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i % cout] += g[i];
      }
      return;
    }

    case OpKind::MaxPool1d: {
      Tensor& gx = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[n.saved_index[i]] += g[i];
      return;
    }

    case OpKind::Upsample1d: {
      const Tensor& x = in_value(0);
      Tensor& gx = grad_slot(n.inputs[0]);
      const std::size_t batch = x.dim(0), steps = x.dim(1), ch = x.dim(2);
      for (std::size_t bb = 0; bb < batch; ++bb) {
        for (std::size_t t = 0; t < 2 * steps; ++t) {
          const std::size_t dst = (bb * steps + t / 2) * ch;
          const std::size_t src = (bb * 2 * steps + t) * ch;
          for (std::size_t c = 0; c < ch; ++c) gx[dst + c] += g[src + c];
        }
      }
      return;
    }

    case OpKind::Concat: {
      const std::size_t ca = in_value(0).shape().back(), cb = in_value(1).shape().back();
      const std::size_t outer = g.size() / (ca + cb);
      Tensor* ga = wants(0) ? &grad_slot(n.inputs[0]) : nullptr;
      Tensor* gb = wants(1) ? &grad_slot(n.inputs[1]) : nullptr;
      for (std::size_t r = 0; r < outer; ++r) {
        const double* src = g.data().data() + r * (ca + cb);
        if (ga) for (std::size_t c = 0; c < ca; ++c) (*ga)[r * ca + c] += src[c];
        if (gb) for (std::size_t c = 0; c < cb; ++c) (*gb)[r * cb + c] += src[ca + c];
      }
      return;
    }

    case OpKind::Dropout: {
      Tensor& gx = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.saved[i];
      return;
    }

    case OpKind::MseLoss: {
      const Tensor& p = in_value(0);
      const Tensor& t = in_value(1);
      const double coeff = 2.0 * g[0] / n.scalar;
      if (wants(0)) {
        Tensor& gp = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < p.size(); ++i) gp[i] += coeff * n.saved[i] * (p[i] - t[i]);
      }
      if (wants(1)) {
        Tensor& gt = grad_slot(n.inputs[1]);
        for (std::size_t i = 0; i < p.size(); ++i) gt[i] -= coeff * n.saved[i] * (p[i] - t[i]);
      }
      return;
    }

    case OpKind::L2Penalty: {
      const Tensor& w = in_value(0);
      Tensor& gw = grad_slot(n.inputs[0]);
      const double coeff = 2.0 * n.scalar * g[0];
      for (std::size_t i = 0; i < w.size(); ++i) gw[i] += coeff * w[i];
      return;
    }

    case OpKind::Sum: {
      Tensor& gx = grad_slot(n.inputs[0]);
      for (auto& v : gx.data()) v += g[0];
      return;
    }

    case OpKind::SliceLast: {
      Tensor& gx = grad_slot(n.inputs[0]);
      const std::size_t width = gx.shape().back(), out_w = n.b - n.a, outer = g.size() / out_w;
      for (std::size_t r = 0; r < outer; ++r) {
        for (std::size_t c = 0; c < out_w; ++c) gx[r * width + n.a + c] += g[r * out_w + c];
      }
      return;
    }

    case OpKind::TimeStep: {
      Tensor& gx = grad_slot(n.inputs[0]);
      const std::size_t batch = gx.dim(0), steps = gx.dim(1), ch = gx.dim(2);
      for (std::size_t bb = 0; bb < batch; ++bb) {
        for (std::size_t c = 0; c < ch; ++c) gx[(bb * steps + n.a) * ch + c] += g[bb * ch + c];
      }
      return;
    }

    case OpKind::StackTime: {
      const std::size_t batch = n.value.dim(0), count = n.value.dim(1), ch = n.value.dim(2);
      for (std::size_t t = 0; t < count; ++t) {
        if (!wants(t)) continue;
        Tensor& gs = grad_slot(n.inputs[t]);
        for (std::size_t bb = 0; bb < batch; ++bb) {
          for (std::size_t c = 0; c < ch; ++c) gs[bb * ch + c] += g[(bb * count + t) * ch + c];
        }
      }
      return;
    }

    case OpKind::Reshape: {
      Tensor& gx = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      return;
    }
  }
}

}  // namespace ecg12r::ad
