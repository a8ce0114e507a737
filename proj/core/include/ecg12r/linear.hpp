#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecg12r/matrix.hpp"

namespace ecg12r::linear {

struct LimbLeads {
  std::vector<double> iii;
  std::vector<double> avr;
  std::vector<double> avl;
  std::vector<double> avf;
};

/// Einthoven and Goldberger identities. Throws LengthMismatch.
LimbLeads derive_limb_leads(std::span<const double> lead_i, std::span<const double> lead_ii);

/// Affine map from (I, II, V2, 1) to (V1, V3, V4, V5, V6).
struct LTModel {
  static constexpr std::size_t kRegressors = 4;
  static constexpr std::size_t kTargets = 5;
  static constexpr std::array<std::string_view, kRegressors> kRowLabels = {"I", "II", "V2", "intercept"};
  static constexpr std::array<std::string_view, kTargets> kColLabels = {"V1", "V3", "V4", "V5", "V6"};

  Matrix coeffs{kRegressors, kTargets};
};

/// Least-squares fit via complete orthogonal decomposition of [I II V2 1].
/// Rank-deficient designs are solved in the minimum-norm sense.
/// Throws DegenerateInputs when every regressor column is constant, and
/// LengthMismatch / InvalidSpec for shape problems.
LTModel fit_lt(const Matrix& train_inputs, const Matrix& train_targets);

/// [inputs 1] * coeffs.
Matrix predict_lt(const LTModel& model, const Matrix& inputs);

/// Residual sum of squares of `model` on the given data.
double residual_sum_of_squares(const LTModel& model, const Matrix& inputs, const Matrix& targets);

std::string lt_to_json(const LTModel& model);
LTModel lt_from_json(std::string_view text);

}  // namespace ecg12r::linear
