#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ecg12r/tensor.hpp"

namespace ecg12r::ad {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor for the relative error, so entries whose analytic and
  /// numeric gradients are both ~0 compare on an absolute scale.
  double scale_floor = 1e-6;
};

struct GradCheckReport {
  std::string label;
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t entries_checked = 0;
  bool passed = true;
};

/// Builds a scalar loss from the given parameters on a fresh graph. Must be
/// deterministic; dropout should be disabled (Eval mode).
using LossBuilder = std::function<NodeId(Graph&)>;

double relative_error(double analytic, double numeric, double floor) noexcept;

/// Compares backward() against central differences for every entry of every
/// parameter.
GradCheckReport gradient_check(const std::string& label, const LossBuilder& build,
                               std::span<Parameter* const> params, const GradCheckOptions& options = {});

/// One report per autodiff op kind on random inputs, plus composite cases.
/// Smallest distance of any ReLU or leaky-ReLU input from zero, or between
/// the two candidates of any max-pool pair, in a built graph. Central
/// differences are only meaningful when the step stays well inside it.
double kink_margin(const Graph& graph);

std::vector<GradCheckReport> check_all_ops(std::uint64_t seed, const GradCheckOptions& options = {});

}  // namespace ecg12r::ad
