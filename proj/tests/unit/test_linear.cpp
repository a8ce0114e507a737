#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "ecg12r/error.hpp"
#include "ecg12r/linear.hpp"
#include "ecg12r/random.hpp"

using namespace ecg12r;
using namespace ecg12r::linear;

namespace {

Matrix random_inputs(RandomStream& rng, std::size_t n) {
  Matrix a(n, 3);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t c = 0; c < 3; ++c) a(k, c) = rng.normal();
  }
  return a;
}

Matrix apply_coeffs(const Matrix& inputs, const Matrix& coeffs) {
  Matrix out(inputs.rows(), coeffs.cols());
  for (std::size_t k = 0; k < inputs.rows(); ++k) {
    for (std::size_t j = 0; j < coeffs.cols(); ++j) {
      double v = coeffs(3, j);
      for (std::size_t c = 0; c < 3; ++c) v += inputs(k, c) * coeffs(c, j);
      out(k, j) = v;
    }
  }
  return out;
}

// Minimum-norm least squares through an SVD pseudo-inverse, independent of the
// decomposition used by fit_lt.
Eigen::MatrixXd pinv_solution(const Matrix& inputs, const Matrix& targets) {
  const auto n = static_cast<Eigen::Index>(inputs.rows());
  Eigen::MatrixXd a(n, 4);
  Eigen::MatrixXd y(n, static_cast<Eigen::Index>(targets.cols()));
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index c = 0; c < 3; ++c) a(k, c) = inputs(k, c);
    a(k, 3) = 1.0;
    for (Eigen::Index j = 0; j < y.cols(); ++j) y(k, j) = targets(k, j);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Eigen::VectorXd inv(s.size());
  const double cutoff = 1e-12 * s(0);
  for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) > cutoff ? 1.0 / s(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * y;
}

double r2(const std::vector<double>& x, const std::vector<double>& y) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double sse = 0.0, sst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sse += (x[k] - y[k]) * (x[k] - y[k]);
    sst += (x[k] - mean) * (x[k] - mean);
  }
  return 1.0 - sse / sst;
}

}  // namespace

TEST_SUITE("linear") {
  TEST_CASE("limb lead identities") {
    auto one = [](double i, double ii) {
      const std::vector<double> a = {i}, b = {ii};
      return derive_limb_leads(a, b);
    };
    const auto x = one(0.5, 1.0);
    CHECK(x.iii[0] == 0.5);
    CHECK(x.avr[0] == -0.75);
    CHECK(x.avl[0] == 0.0);
    CHECK(x.avf[0] == 0.75);
    const auto z = one(0, 0);
    CHECK(z.iii[0] == 0.0);
    CHECK(z.avr[0] == 0.0);
    CHECK(z.avl[0] == 0.0);
    CHECK(z.avf[0] == 0.0);
    const auto u = one(1, 1);
    CHECK(u.iii[0] == 0.0);
    CHECK(u.avr[0] == -1.0);
    CHECK(u.avl[0] == 0.5);
    CHECK(u.avf[0] == 0.5);
    CHECK_THROWS_AS(derive_limb_leads(std::vector<double>{1, 2}, std::vector<double>{1}), Error);
  }

  TEST_CASE("Einthoven and Goldberger closure on random pairs") {
    RandomStream rng(17);
    std::vector<double> i(100), ii(100);
    for (std::size_t k = 0; k < 100; ++k) i[k] = rng.uniform(-3, 3), ii[k] = rng.uniform(-3, 3);
    const auto limb = derive_limb_leads(i, ii);
    for (std::size_t k = 0; k < 100; ++k) {
      CHECK(i[k] + limb.iii[k] == doctest::Approx(ii[k]).epsilon(1e-15));
      CHECK(std::abs(limb.avr[k] + limb.avl[k] + limb.avf[k]) <= 1e-15 * (std::abs(i[k]) + std::abs(ii[k])) * 4);
    }
  }

  TEST_CASE("exact affine targets are recovered") {
    RandomStream rng(1);
    const Matrix inputs = random_inputs(rng, 200);
    Matrix truth(4, 5);
    const double rows[4][5] = {{2, 0.3, -1, 0.1, 0}, {-1, 1.2, 0.4, 0, 2}, {0.5, -0.7, 0, 3, 1}, {0, 0.05, 1, -2, 0.2}};
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 5; ++c) truth(r, c) = rows[r][c];
    }
    const Matrix targets = apply_coeffs(inputs, truth);
    const LTModel model = fit_lt(inputs, targets);
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 5; ++c) CHECK(std::abs(model.coeffs(r, c) - truth(r, c)) < 1e-9);
    }
    const Matrix pred = predict_lt(model, inputs);
    for (std::size_t k = 0; k < inputs.rows(); ++k) {
      for (std::size_t c = 0; c < 5; ++c) REQUIRE(std::abs(pred(k, c) - targets(k, c)) < 1e-9);
    }
  }

  TEST_CASE("constant targets fit the intercept only") {
    RandomStream rng(2);
    const Matrix inputs = random_inputs(rng, 60);
    const Matrix targets(60, 5, 0.3);
    const LTModel model = fit_lt(inputs, targets);
    for (std::size_t c = 0; c < 5; ++c) {
      for (std::size_t r = 0; r < 3; ++r) CHECK(std::abs(model.coeffs(r, c)) < 1e-9);
      CHECK(std::abs(model.coeffs(3, c) - 0.3) < 1e-9);
    }
  }

  TEST_CASE("noisy fit matches the SVD oracle") {
    RandomStream rng(3);
    const Matrix inputs = random_inputs(rng, 50);
    Matrix truth(4, 5);
    for (auto& v : truth.data()) v = rng.normal();
    Matrix targets = apply_coeffs(inputs, truth);
    for (auto& v : targets.data()) v += 0.01 * rng.normal();
    const LTModel model = fit_lt(inputs, targets);
    const Eigen::MatrixXd oracle = pinv_solution(inputs, targets);
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 5; ++c) {
        CHECK(std::abs(model.coeffs(r, c) - oracle(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))) <
              1e-8);
      }
    }
  }

  TEST_CASE("rank-deficient designs take the minimum-norm solution") {
    RandomStream rng(4);
    Matrix inputs = random_inputs(rng, 40);
    for (std::size_t k = 0; k < 40; ++k) inputs(k, 2) = inputs(k, 0);
    Matrix targets(40, 5);
    for (auto& v : targets.data()) v = rng.normal();
    const LTModel model = fit_lt(inputs, targets);
    const Eigen::MatrixXd oracle = pinv_solution(inputs, targets);
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 5; ++c) {
        CHECK(std::abs(model.coeffs(r, c) - oracle(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))) <
              1e-8);
      }
    }
  }

  TEST_CASE("degenerate and mis-shaped inputs") {
    const Matrix flat(10, 3, 1.0);
    const Matrix targets(10, 5, 0.0);
    try {
      fit_lt(flat, targets);
      FAIL("expected DegenerateInputs");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateInputs);
    }
    CHECK_THROWS_AS(fit_lt(Matrix(10, 3), Matrix(9, 5)), Error);
    CHECK_THROWS_AS(fit_lt(Matrix(10, 2), Matrix(10, 5)), Error);
  }

  TEST_CASE("zero model predicts zeros") {
    const LTModel model;
    RandomStream rng(5);
    const Matrix pred = predict_lt(model, random_inputs(rng, 7));
    for (double v : pred.data()) CHECK(v == 0.0);
  }

  TEST_CASE("least-squares optimality against perturbations") {
    RandomStream rng(6);
    for (int problem = 0; problem < 100; ++problem) {
      const Matrix inputs = random_inputs(rng, 30);
      Matrix targets(30, 5);
      for (auto& v : targets.data()) v = rng.normal();
      const LTModel fitted = fit_lt(inputs, targets);
      const double best = residual_sum_of_squares(fitted, inputs, targets);
      for (int trial = 0; trial < 100; ++trial) {
        LTModel moved = fitted;
        double norm = 0.0;
        std::vector<double> delta(20);
        for (auto& d : delta) d = rng.normal(), norm += d * d;
        norm = std::sqrt(norm);
        for (std::size_t k = 0; k < 20; ++k) moved.coeffs.data()[k] += 1e-3 * delta[k] / norm;
        REQUIRE(best <= residual_sum_of_squares(moved, inputs, targets));
      }
    }
  }

  TEST_CASE("scaling equivariance") {
    RandomStream rng(7);
    const Matrix inputs = random_inputs(rng, 80);
    Matrix targets(80, 5);
    for (auto& v : targets.data()) v = rng.normal() + 0.5;
    const double s = 3.7;
    Matrix si = inputs, st = targets;
    for (auto& v : si.data()) v *= s;
    for (auto& v : st.data()) v *= s;
    const LTModel a = fit_lt(inputs, targets);
    const LTModel b = fit_lt(si, st);
    for (std::size_t c = 0; c < 5; ++c) {
      for (std::size_t r = 0; r < 3; ++r) CHECK(std::abs(a.coeffs(r, c) - b.coeffs(r, c)) < 1e-9);
      CHECK(std::abs(s * a.coeffs(3, c) - b.coeffs(3, c)) < 1e-9);
    }
  }

  TEST_CASE("exact targets give test R2 of one") {
    RandomStream rng(8);
    const Matrix train = random_inputs(rng, 100);
    const Matrix test = random_inputs(rng, 100);
    Matrix truth(4, 5);
    for (auto& v : truth.data()) v = rng.normal();
    const LTModel model = fit_lt(train, apply_coeffs(train, truth));
    const Matrix expected = apply_coeffs(test, truth);
    const Matrix pred = predict_lt(model, test);
    for (std::size_t c = 0; c < 5; ++c) CHECK(std::abs(r2(expected.column(c), pred.column(c)) - 1.0) < 1e-9);
  }

  TEST_CASE("JSON round trip keeps labels and coefficients") {
    RandomStream rng(9);
    LTModel m;
    for (auto& v : m.coeffs.data()) v = rng.normal();
    const std::string json = lt_to_json(m);
    CHECK(json.find("intercept") != std::string::npos);
    CHECK(json.find("V6") != std::string::npos);
    CHECK(lt_from_json(json).coeffs == m.coeffs);
  }
}
