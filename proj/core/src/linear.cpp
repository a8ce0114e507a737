#include "ecg12r/linear.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "ecg12r/error.hpp"
#include "json.hpp"

namespace ecg12r::linear {

LimbLeads derive_limb_leads(std::span<const double> lead_i, std::span<const double> lead_ii) {
  if (lead_i.size() != lead_ii.size()) {
    throw Error(ErrorCode::LengthMismatch, "leads I and II differ in length");
  }
  const std::size_t n = lead_i.size();
  LimbLeads out{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t t = 0; t < n; ++t) {
    const double a = lead_i[t];
    const double b = lead_ii[t];
    out.iii[t] = b - a;
    out.avr[t] = -(a + b) / 2.0;
    out.avl[t] = a - b / 2.0;
    out.avf[t] = b - a / 2.0;
  }
  return out;
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMatrix design_matrix(const Matrix& inputs) {
  RowMatrix a(inputs.rows(), LTModel::kRegressors);
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    for (std::size_t c = 0; c < 3; ++c) a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = inputs(r, c);
    a(static_cast<Eigen::Index>(r), 3) = 1.0;
  }
  return a;
}

}  // namespace

LTModel fit_lt(const Matrix& train_inputs, const Matrix& train_targets) {
  if (train_inputs.cols() != 3 || train_targets.cols() != LTModel::kTargets) {
    throw Error(ErrorCode::InvalidSpec, "fit_lt expects [n x 3] inputs and [n x 5] targets");
  }
  if (train_inputs.rows() != train_targets.rows()) {
    throw Error(ErrorCode::LengthMismatch, "input and target row counts differ");
  }
  if (train_inputs.rows() < 8) throw Error(ErrorCode::DegenerateInputs, "fit_lt needs at least 8 samples");

  bool all_constant = true;
  for (std::size_t c = 0; c < 3 && all_constant; ++c) {
    for (std::size_t r = 1; r < train_inputs.rows(); ++r) {
      if (train_inputs(r, c) != train_inputs(0, c)) {
        all_constant = false;
        break;
      }
    }
  }
  if (all_constant) throw Error(ErrorCode::DegenerateInputs, "every regressor column is constant");

  const RowMatrix a = design_matrix(train_inputs);
  const Eigen::Map<const RowMatrix> y(train_targets.data().data(), static_cast<Eigen::Index>(train_targets.rows()),
                                      static_cast<Eigen::Index>(train_targets.cols()));
  Eigen::CompleteOrthogonalDecomposition<RowMatrix> cod(a);
  const RowMatrix solution = cod.solve(RowMatrix(y));

  LTModel model;
  for (std::size_t r = 0; r < LTModel::kRegressors; ++r) {
    for (std::size_t c = 0; c < LTModel::kTargets; ++c) {
      model.coeffs(r, c) = solution(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return model;
}

Matrix predict_lt(const LTModel& model, const Matrix& inputs) {
  if (inputs.cols() != 3) throw Error(ErrorCode::InvalidSpec, "predict_lt expects [m x 3] inputs");
  Matrix out(inputs.rows(), LTModel::kTargets);
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    for (std::size_t c = 0; c < LTModel::kTargets; ++c) {
      out(r, c) = inputs(r, 0) * model.coeffs(0, c) + inputs(r, 1) * model.coeffs(1, c) +
                  inputs(r, 2) * model.coeffs(2, c) + model.coeffs(3, c);
    }
  }
  return out;
}

double residual_sum_of_squares(const LTModel& model, const Matrix& inputs, const Matrix& targets) {
  const Matrix pred = predict_lt(model, inputs);
  double rss = 0.0;
  for (std::size_t i = 0; i < pred.data().size(); ++i) {
    const double d = pred.data()[i] - targets.data()[i];
    rss += d * d;
  }
  return rss;
}

std::string lt_to_json(const LTModel& model) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < LTModel::kRegressors; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < LTModel::kTargets; ++c) row.push_back(model.coeffs(r, c));
    rows.push_back(row);
  }
  nlohmann::json doc;
  doc["rows"] = LTModel::kRowLabels;
  doc["columns"] = LTModel::kColLabels;
  doc["coeffs"] = rows;
  return doc.dump(2) + "\n";
}

LTModel lt_from_json(std::string_view text) {
  LTModel model;
  try {
    const auto doc = nlohmann::json::parse(text);
    const auto& rows = doc.at("coeffs");
    if (rows.size() != LTModel::kRegressors) throw Error(ErrorCode::InvalidSpec, "LT model needs 4 coefficient rows");
    for (std::size_t r = 0; r < LTModel::kRegressors; ++r) {
      if (rows[r].size() != LTModel::kTargets) throw Error(ErrorCode::InvalidSpec, "LT model needs 5 columns");
      for (std::size_t c = 0; c < LTModel::kTargets; ++c) model.coeffs(r, c) = rows[r][c].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("invalid LT model JSON: ") + e.what());
  }
  return model;
}

}  // namespace ecg12r::linear
