#include "ecg12r/adam.hpp"

#include <cmath>

#include "ecg12r/error.hpp"

namespace ecg12r::ad {

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  if (state.m.empty()) {
    for (const Parameter* p : params) {
      state.m.emplace_back(p->value.shape());
      state.v.emplace_back(p->value.shape());
    }
  }
  if (state.m.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "Adam state was created for a different parameter list");
  }

  ++state.step;
  const auto& h = state.hyper;
  const double correction1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    if (p.grad.shape() != p.value.shape() || state.m[k].shape() != p.value.shape()) {
      throw Error(ErrorCode::ShapeMismatch, "Adam: parameter " + p.name + " shape changed");
    }
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p.value[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  }
}

}  // namespace ecg12r::ad
