#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "ecg12r/error.hpp"
#include "ecg12r/metrics.hpp"
#include "ecg12r/random.hpp"

using namespace ecg12r;
using namespace ecg12r::metrics;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

// Minimum over every monotone path from (0,0) to (n-1,m-1), enumerated by
// plain recursion without memoization.
double enumerate_paths(const std::vector<double>& x, const std::vector<double>& y, std::size_t i, std::size_t j) {
  const double here = (x[i] - y[j]) * (x[i] - y[j]);
  if (i + 1 == x.size() && j + 1 == y.size()) return here;
  double best = std::numeric_limits<double>::infinity();
  if (i + 1 < x.size()) best = std::min(best, enumerate_paths(x, y, i + 1, j));
  if (j + 1 < y.size()) best = std::min(best, enumerate_paths(x, y, i, j + 1));
  if (i + 1 < x.size() && j + 1 < y.size()) best = std::min(best, enumerate_paths(x, y, i + 1, j + 1));
  return here + best;
}

std::vector<double> random_series(RandomStream& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& e : v) e = rng.normal();
  return v;
}

double path_cost(const std::vector<double>& x, const std::vector<double>& y, const AlignmentPath& path) {
  double c = 0.0;
  for (auto [i, j] : path) c += (x[i] - y[j]) * (x[i] - y[j]);
  return c;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("r_squared fixtures") {
    const std::vector<double> x = {0, 1, 2};
    CHECK(r_squared(x, x) == 1.0);
    CHECK(r_squared(x, std::vector<double>{1, 1, 1}) == 0.0);
    CHECK(r_squared(x, std::vector<double>{2, 1, 0}) == doctest::Approx(-3.0).epsilon(1e-15));
    CHECK(code_of([] { r_squared(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}); }) ==
          ErrorCode::ConstantReference);
    CHECK(code_of([&] { r_squared(x, std::vector<double>{1, 2}); }) == ErrorCode::LengthMismatch);
    CHECK(code_of([] { r_squared(std::vector<double>{1}, std::vector<double>{1}); }) == ErrorCode::EmptySignal);
  }

  TEST_CASE("literal R2 variant") {
    // 1 - sum (x - mean y)^2 / sum (y - mean y)^2 with x=[0,1,2], y=[1,2,3]:
    // mean y = 2, numerator 4+1+0 = 5, denominator 2.
    const std::vector<double> x = {0, 1, 2}, y = {1, 2, 3};
    CHECK(r_squared(x, y, R2Variant::Literal) == doctest::Approx(1.0 - 5.0 / 2.0).epsilon(1e-15));
    // With y = x the numerator equals the denominator, so a perfect match scores 0.
    CHECK(r_squared(x, x, R2Variant::Literal) == 0.0);
  }

  TEST_CASE("r_squared is at most one and invariant to a shared affine map") {
    RandomStream rng(1);
    for (int trial = 0; trial < 100; ++trial) {
      const auto x = random_series(rng, 50);
      const auto y = random_series(rng, 50);
      const double r = r_squared(x, y);
      CHECK(r <= 1.0);
      const double a = rng.uniform(-5, 5), b = rng.uniform(0.1, 10) * (rng.below(2) ? 1 : -1);
      std::vector<double> xs(50), ys(50);
      for (std::size_t k = 0; k < 50; ++k) xs[k] = a + b * x[k], ys[k] = a + b * y[k];
      CHECK(std::abs(r_squared(xs, ys) - r) < 1e-12);
    }
  }

  TEST_CASE("pearson fixtures") {
    const std::vector<double> x = {1, 2, 3, 4};
    std::vector<double> affine, neg;
    for (double v : x) affine.push_back(2 * v + 1), neg.push_back(-v);
    CHECK(pearson_r(x, affine) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pearson_r(x, neg) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(std::abs(pearson_r(x, std::vector<double>{1, 2, 3, 5}) - 0.9827) < 1e-4);
    CHECK(code_of([&] { pearson_r(x, std::vector<double>{3, 3, 3, 3}); }) == ErrorCode::ConstantSeries);
  }

  TEST_CASE("pearson range and positive affine invariance") {
    RandomStream rng(2);
    for (int trial = 0; trial < 100; ++trial) {
      const auto x = random_series(rng, 40);
      const auto y = random_series(rng, 40);
      const double r = pearson_r(x, y);
      CHECK(r >= -1.0);
      CHECK(r <= 1.0);
      const double a = rng.uniform(-5, 5), b = rng.uniform(0.1, 10);
      std::vector<double> ys(40);
      for (std::size_t k = 0; k < 40; ++k) ys[k] = a + b * y[k];
      CHECK(std::abs(pearson_r(x, ys) - r) < 1e-12);
    }
  }

  TEST_CASE("dtw fixtures") {
    const std::vector<double> x = {0.3, -1, 2, 5};
    CHECK(dtw_cost(x, x) == 0.0);
    CHECK(dtw_cost(std::vector<double>{0, 0}, std::vector<double>{1}) == 2.0);
    CHECK(dtw_cost(std::vector<double>{0, 1}, std::vector<double>{1, 2}) == 2.0);
    const DtwResult r = dtw_align(std::vector<double>{0, 1}, std::vector<double>{1, 2});
    CHECK(r.cost == 2.0);
    CHECK(r.path.front() == std::pair<std::size_t, std::size_t>{0, 0});
    CHECK(r.path.back() == std::pair<std::size_t, std::size_t>{1, 1});
    CHECK(code_of([] { dtw_cost(std::vector<double>{}, std::vector<double>{1}); }) == ErrorCode::EmptySignal);
    CHECK(code_of([] { dtw_cost(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1}, std::size_t{2}); }) ==
          ErrorCode::BandTooNarrow);
  }

  TEST_CASE("unbanded dtw equals exhaustive path enumeration") {
    RandomStream rng(3);
    const double alphabet[3] = {-1.0, 0.5, 2.0};
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> x(1 + rng.below(8)), y(1 + rng.below(8));
      for (auto& v : x) v = alphabet[rng.below(3)];
      for (auto& v : y) v = alphabet[rng.below(3)];
      const double oracle = enumerate_paths(x, y, 0, 0);
      REQUIRE(dtw_cost(x, y) == oracle);
      const DtwResult aligned = dtw_align(x, y);
      REQUIRE(aligned.cost == oracle);
      REQUIRE(path_cost(x, y, aligned.path) == oracle);
    }
  }

  TEST_CASE("alignment paths are monotone and connected") {
    RandomStream rng(4);
    for (int trial = 0; trial < 100; ++trial) {
      const auto x = random_series(rng, 2 + rng.below(30));
      const auto y = random_series(rng, 2 + rng.below(30));
      const DtwResult r = dtw_align(x, y);
      REQUIRE(r.path.front() == std::pair<std::size_t, std::size_t>{0, 0});
      REQUIRE(r.path.back() == std::pair<std::size_t, std::size_t>{x.size() - 1, y.size() - 1});
      for (std::size_t k = 1; k < r.path.size(); ++k) {
        const auto di = r.path[k].first - r.path[k - 1].first;
        const auto dj = r.path[k].second - r.path[k - 1].second;
        REQUIRE(di <= 1);
        REQUIRE(dj <= 1);
        REQUIRE(di + dj >= 1);
      }
      CHECK(std::abs(path_cost(x, y, r.path) - r.cost) < 1e-9);
    }
  }

  TEST_CASE("dtw symmetry, diagonal bound and band monotonicity") {
    RandomStream rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 5 + rng.below(40);
      const auto x = random_series(rng, n);
      const auto y = random_series(rng, n);
      const double full = dtw_cost(x, y);
      CHECK(full == doctest::Approx(dtw_cost(y, x)).epsilon(1e-12));
      double sse = 0.0;
      for (std::size_t k = 0; k < n; ++k) sse += (x[k] - y[k]) * (x[k] - y[k]);
      CHECK(full <= sse + 1e-12);
      CHECK(dtw_cost(x, y, std::size_t{0}) == doctest::Approx(sse).epsilon(1e-12));
      double previous = std::numeric_limits<double>::infinity();
      for (std::size_t band = 0; band <= n; ++band) {
        const double c = dtw_cost(x, y, band);
        REQUIRE(c <= previous);
        previous = c;
      }
      CHECK(dtw_cost(x, y, n) == full);
      CHECK(dtw_align(x, y, std::size_t{3}).cost == dtw_cost(x, y, std::size_t{3}));
    }
  }

  TEST_CASE("ndtw fixtures") {
    const std::vector<double> x = {0, 1, 3, 2};
    CHECK(ndtw(x, x, 1000) == 0.0);
    NdtwSettings whole{0.0, std::nullopt};
    CHECK(std::abs(ndtw(std::vector<double>{0, 1}, std::vector<double>{1, 2}, 1000, whole) - std::sqrt(2.0)) <
          1e-9);
    CHECK(code_of([] { ndtw(std::vector<double>{}, std::vector<double>{}, 1000); }) == ErrorCode::EmptySignal);
  }

  TEST_CASE("ndtw averages windows and includes the short tail") {
    RandomStream rng(6);
    const auto x = random_series(rng, 25);
    const auto y = random_series(rng, 25);
    // 10 Hz, 1 s windows: [0,10), [10,20), [20,25).
    const NdtwSettings s{1.0, std::nullopt};
    double expected = 0.0;
    for (std::size_t lo : {0, 10, 20}) {
      const std::size_t hi = std::min<std::size_t>(25, lo + 10);
      const std::vector<double> xa(x.begin() + lo, x.begin() + hi), ya(y.begin() + lo, y.begin() + hi);
      double sse = 0.0;
      for (std::size_t k = 0; k < xa.size(); ++k) sse += (xa[k] - ya[k]) * (xa[k] - ya[k]);
      expected += dtw_cost(xa, ya) / std::sqrt(sse);
    }
    CHECK(ndtw(x, y, 10, s) == doctest::Approx(expected / 3).epsilon(1e-12));
  }

  TEST_CASE("ndtw is non-negative and bounded by the per-window residual norm") {
    RandomStream rng(7);
    for (int trial = 0; trial < 50; ++trial) {
      const auto x = random_series(rng, 300);
      const auto y = random_series(rng, 300);
      double sse = 0.0;
      for (std::size_t k = 0; k < 300; ++k) sse += (x[k] - y[k]) * (x[k] - y[k]);
      const double v = ndtw(x, y, 100, NdtwSettings{0.0, std::size_t{20}});
      CHECK(v >= 0.0);
      CHECK(v <= std::sqrt(sse) + 1e-12);
    }
  }

  TEST_CASE("perfect reconstruction scores one, one and zero on every lead") {
    RandomStream rng(8);
    Matrix m(3000, 9);
    for (auto& v : m.data()) v = rng.normal();
    const MetricsReport r = evaluate_record("p", m, m);
    REQUIRE(r.leads.size() == 9);
    for (std::size_t k = 0; k < 9; ++k) {
      CHECK(r.leads[k].lead == kOutputLeads[k]);
      CHECK(*r.leads[k].r2 == 1.0);
      CHECK(*r.leads[k].rx == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(*r.leads[k].ndtw == 0.0);
      CHECK(r.leads[k].n == 3000);
      CHECK_FALSE(r.leads[k].flag.has_value());
    }
    CHECK(*r.means.r2 == 1.0);
    CHECK(*r.means.ndtw == 0.0);
  }

  TEST_CASE("a constant original lead is flagged and the rest are scored") {
    RandomStream rng(9);
    Matrix orig(500, 9), recon(500, 9);
    for (auto& v : orig.data()) v = rng.normal();
    for (std::size_t k = 0; k < orig.data().size(); ++k) recon.data()[k] = orig.data()[k] + 0.1 * rng.normal();
    for (std::size_t k = 0; k < 500; ++k) orig(k, 4) = 0.7;
    const MetricsReport r = evaluate_record("c", orig, recon);
    CHECK(r.leads[4].flag == ErrorCode::ConstantReference);
    CHECK_FALSE(r.leads[4].r2.has_value());
    double sum = 0.0;
    for (std::size_t k = 0; k < 9; ++k) {
      if (k == 4) continue;
      CHECK_FALSE(r.leads[k].flag.has_value());
      sum += *r.leads[k].r2;
    }
    CHECK(*r.means.r2 == doctest::Approx(sum / 8).epsilon(1e-14));
    CHECK_THROWS_AS(evaluate_record("bad", orig, Matrix(499, 9)), Error);
  }

  TEST_CASE("report JSON and CSV") {
    RandomStream rng(10);
    Matrix orig(400, 9), recon(400, 9);
    for (auto& v : orig.data()) v = rng.normal();
    for (std::size_t k = 0; k < orig.data().size(); ++k) recon.data()[k] = 0.5 * orig.data()[k];
    for (std::size_t k = 0; k < 400; ++k) orig(k, 0) = 1.0;
    const MetricsReport r = evaluate_record("s0010", orig, recon);
    const MetricsReport back = report_from_json(report_to_json(r));
    CHECK(back.record_id == "s0010");
    REQUIRE(back.leads.size() == 9);
    CHECK(back.leads[0].flag == ErrorCode::ConstantReference);
    CHECK_FALSE(back.leads[0].r2.has_value());
    CHECK(*back.leads[5].r2 == *r.leads[5].r2);
    CHECK(*back.means.rx == *r.means.rx);

    const std::string csv = report_to_csv_rows(r);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
    CHECK(csv.rfind("s0010,III,,", 0) == 0);
    CHECK(csv.find("ConstantReference") != std::string::npos);
    CHECK(format_metric(0.123456) == "0.1235");
    CHECK(format_metric(-0.00001) == "0.0000");
    CHECK(format_metric(std::nullopt).empty());
  }
}
