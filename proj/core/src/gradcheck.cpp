#include "ecg12r/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ecg12r::ad {

double relative_error(double analytic, double numeric, double floor) noexcept {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport gradient_check(const std::string& label, const LossBuilder& build,
                               std::span<Parameter* const> params, const GradCheckOptions& options) {
  GradCheckReport report;
  report.label = label;

  for (Parameter* p : params) p->zero_grad();
  {
    Graph g(Mode::Eval);
    g.backward(build(g));
  }
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  auto loss_at = [&]() {
    Graph g(Mode::Eval);
    return g.value(build(g)).item();
  };

  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double original = p.value[i];
      p.value[i] = original + options.step;
      const double up = loss_at();
      p.value[i] = original - options.step;
      const double down = loss_at();
      p.value[i] = original;

      const double numeric = (up - down) / (2.0 * options.step);
      const double err = relative_error(analytic[k][i], numeric, options.scale_floor);
      ++report.entries_checked;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_parameter = p.name;
        report.worst_index = i;
      }
    }
  }
  report.passed = report.max_relative_error < options.tolerance;
  return report;
}

double kink_margin(const Graph& graph) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::uint32_t k = 0; k < graph.size(); ++k) {
    const NodeId id{k};
    const OpKind kind = graph.kind(id);
    if (kind == OpKind::Relu || kind == OpKind::LeakyRelu) {
      for (double v : graph.value(NodeId{graph.inputs(id)[0]}).data()) margin = std::min(margin, std::abs(v));
    } else if (kind == OpKind::MaxPool1d) {
      const Tensor& x = graph.value(NodeId{graph.inputs(id)[0]});
      const std::size_t batch = x.dim(0), steps = x.dim(1) / 2, channels = x.dim(2);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t t = 0; t < steps; ++t) {
          for (std::size_t c = 0; c < channels; ++c) {
            const double first = x[(b * x.dim(1) + 2 * t) * channels + c];
            const double second = x[(b * x.dim(1) + 2 * t + 1) * channels + c];
            margin = std::min(margin, std::abs(first - second));
          }
        }
      }
    }
  }
  return margin;
}

namespace {

Tensor random_tensor(RandomStream& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero so piecewise-linear ops are differentiable at
// every sample and stay so under a finite-difference step.
Tensor kink_free_tensor(RandomStream& rng, Shape shape) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) {
    const double mag = rng.uniform(0.1, 1.0);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

// Weighted sum so every output entry carries a distinct upstream gradient.
NodeId project(Graph& g, NodeId out, const Tensor& weights) {
  return g.sum(g.mul(out, g.constant(weights)));
}

struct OpCase {
  std::string label;
  std::vector<Parameter> params;
  std::function<NodeId(Graph&, std::vector<Parameter>&)> body;
  Shape out_shape;  // for the projection weights; empty for scalar-valued ops
};

}  // namespace

std::vector<GradCheckReport> check_all_ops(std::uint64_t seed, const GradCheckOptions& options) {
  RandomStream rng = RandomStream::derive(seed, "gradcheck-ops");
  std::vector<OpCase> cases;

  auto add_case = [&](std::string label, std::vector<Parameter> params, Shape out_shape,
                      std::function<NodeId(Graph&, std::vector<Parameter>&)> body) {
    cases.push_back(OpCase{std::move(label), std::move(params), std::move(body), std::move(out_shape)});
  };

  add_case("matmul", {{"a", random_tensor(rng, {3, 4})}, {"b", random_tensor(rng, {4, 2})}}, {3, 2},
           [](Graph& g, auto& p) { return g.matmul(g.parameter(p[0]), g.parameter(p[1])); });
  add_case("add", {{"a", random_tensor(rng, {2, 3})}, {"b", random_tensor(rng, {2, 3})}}, {2, 3},
           [](Graph& g, auto& p) { return g.add(g.parameter(p[0]), g.parameter(p[1])); });
  add_case("add_bias", {{"x", random_tensor(rng, {2, 3, 4})}, {"b", random_tensor(rng, {4})}}, {2, 3, 4},
           [](Graph& g, auto& p) { return g.add_bias(g.parameter(p[0]), g.parameter(p[1])); });
  add_case("mul", {{"a", random_tensor(rng, {2, 3})}, {"b", random_tensor(rng, {2, 3})}}, {2, 3},
           [](Graph& g, auto& p) { return g.mul(g.parameter(p[0]), g.parameter(p[1])); });
  add_case("scale", {{"x", random_tensor(rng, {5})}}, {5},
           [](Graph& g, auto& p) { return g.scale(g.parameter(p[0]), -1.7); });
  add_case("sigmoid", {{"x", random_tensor(rng, {6}, -3.0, 3.0)}}, {6},
           [](Graph& g, auto& p) { return g.sigmoid(g.parameter(p[0])); });
  add_case("tanh", {{"x", random_tensor(rng, {6}, -2.0, 2.0)}}, {6},
           [](Graph& g, auto& p) { return g.tanh(g.parameter(p[0])); });
  add_case("relu", {{"x", kink_free_tensor(rng, {8})}}, {8},
           [](Graph& g, auto& p) { return g.relu(g.parameter(p[0])); });
  add_case("leaky_relu", {{"x", kink_free_tensor(rng, {8})}}, {8},
           [](Graph& g, auto& p) { return g.leaky_relu(g.parameter(p[0])); });
  add_case("conv1d_k3",
           {{"x", random_tensor(rng, {2, 7, 3})}, {"w", random_tensor(rng, {3, 3, 4})}, {"b", random_tensor(rng, {4})}},
           {2, 7, 4}, [](Graph& g, auto& p) {
             return g.conv1d(g.parameter(p[0]), g.parameter(p[1]), g.parameter(p[2]));
           });
  add_case("conv1d_k4",
           {{"x", random_tensor(rng, {1, 6, 2})}, {"w", random_tensor(rng, {4, 2, 3})}, {"b", random_tensor(rng, {3})}},
           {1, 6, 3}, [](Graph& g, auto& p) {
             return g.conv1d(g.parameter(p[0]), g.parameter(p[1]), g.parameter(p[2]));
           });
  {
    // Distinct values within each pooling pair, separated by more than the step.
    Tensor x({2, 8, 3});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 1.0) + 0.05 * static_cast<double>(i % 2 ? 1 : -1);
    add_case("maxpool1d", {{"x", x}}, {2, 4, 3}, [](Graph& g, auto& p) { return g.maxpool1d(g.parameter(p[0])); });
  }
  add_case("upsample1d", {{"x", random_tensor(rng, {2, 3, 2})}}, {2, 6, 2},
           [](Graph& g, auto& p) { return g.upsample1d(g.parameter(p[0])); });
  add_case("concat", {{"a", random_tensor(rng, {2, 3, 2})}, {"b", random_tensor(rng, {2, 3, 4})}}, {2, 3, 6},
           [](Graph& g, auto& p) { return g.concat(g.parameter(p[0]), g.parameter(p[1])); });
  add_case("slice_last", {{"x", random_tensor(rng, {3, 5})}}, {3, 2},
           [](Graph& g, auto& p) { return g.slice_last(g.parameter(p[0]), 1, 3); });
  add_case("time_step", {{"x", random_tensor(rng, {2, 4, 3})}}, {2, 3},
           [](Graph& g, auto& p) { return g.time_step(g.parameter(p[0]), 2); });
  add_case("stack_time", {{"a", random_tensor(rng, {2, 3})}, {"b", random_tensor(rng, {2, 3})}}, {2, 2, 3},
           [](Graph& g, auto& p) {
             const NodeId steps[] = {g.parameter(p[0]), g.parameter(p[1])};
             return g.stack_time(steps);
           });
  add_case("reshape", {{"x", random_tensor(rng, {2, 6})}}, {3, 4},
           [](Graph& g, auto& p) { return g.reshape(g.parameter(p[0]), {3, 4}); });
  add_case("mse_loss", {{"p", random_tensor(rng, {3, 4})}, {"t", random_tensor(rng, {3, 4})}}, {},
           [](Graph& g, auto& p) { return g.mse_loss(g.parameter(p[0]), g.parameter(p[1])); });
  {
    Tensor mask({3, 4}, 1.0);
    mask[5] = 0.0;
    mask[11] = 0.0;
    add_case("mse_loss_masked", {{"p", random_tensor(rng, {3, 4})}, {"t", random_tensor(rng, {3, 4})}}, {},
             [mask](Graph& g, auto& p) { return g.mse_loss(g.parameter(p[0]), g.parameter(p[1]), &mask); });
  }
  add_case("l2_penalty", {{"w", random_tensor(rng, {4, 3})}}, {},
           [](Graph& g, auto& p) { return g.l2_penalty(g.parameter(p[0]), 0.001); });
  add_case("sum", {{"x", random_tensor(rng, {2, 5})}}, {}, [](Graph& g, auto& p) { return g.sum(g.parameter(p[0])); });

  std::vector<GradCheckReport> reports;
  const std::uint64_t dropout_key = rng.next_u64();
  {
    // Train-mode dropout with a fixed stream: every rebuild draws the same mask.
    std::vector<Parameter> params{{"x", random_tensor(rng, {4, 5})}};
    const Tensor weights = random_tensor(rng, {4, 5});
    Parameter& x = params[0];
    auto loss_value = [&](Tensor* grad_out) {
      Graph g(Mode::Train, RandomStream(dropout_key));
      const NodeId loss = project(g, g.dropout(g.parameter(x), 0.2), weights);
      if (grad_out) {
        x.zero_grad();
        g.backward(loss);
        *grad_out = x.grad;
      }
      return g.value(loss).item();
    };
    Tensor analytic;
    loss_value(&analytic);
    GradCheckReport r;
    r.label = "dropout";
    for (std::size_t i = 0; i < x.value.size(); ++i) {
      const double orig = x.value[i];
      x.value[i] = orig + options.step;
      const double up = loss_value(nullptr);
      x.value[i] = orig - options.step;
      const double down = loss_value(nullptr);
      x.value[i] = orig;
      const double err = relative_error(analytic[i], (up - down) / (2 * options.step), options.scale_floor);
      ++r.entries_checked;
      if (err > r.max_relative_error) {
        r.max_relative_error = err;
        r.worst_parameter = "x";
        r.worst_index = i;
      }
    }
    r.passed = r.max_relative_error < options.tolerance;
    reports.push_back(r);
  }

  for (auto& c : cases) {
    std::vector<Parameter*> ptrs;
    for (auto& p : c.params) {
      p.zero_grad();
      ptrs.push_back(&p);
    }
    const Tensor weights = c.out_shape.empty() ? Tensor() : random_tensor(rng, c.out_shape);
    auto& params = c.params;
    auto& body = c.body;
    const bool scalar_op = c.out_shape.empty();
    reports.push_back(gradient_check(
        c.label,
        [&](Graph& g) {
          const NodeId out = body(g, params);
          return scalar_op ? out : project(g, out, weights);
        },
        ptrs, options));
  }
  return reports;
}

}  // namespace ecg12r::ad
