#pragma once

#include <span>
#include <vector>

#include "ecg12r/tensor.hpp"

namespace ecg12r::ad {

struct AdamHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long step = 0;

  AdamState() = default;
  explicit AdamState(AdamHyper h) : hyper(h) {}
};

/// One bias-corrected Adam update using each parameter's accumulated grad.
/// Moment buffers are created (zeroed) on the first call.
void adam_step(std::span<Parameter* const> params, AdamState& state);

}  // namespace ecg12r::ad
