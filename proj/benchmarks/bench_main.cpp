#include <benchmark/benchmark.h>

#include "ecg12r/linear.hpp"
#include "ecg12r/metrics.hpp"
#include "ecg12r/network.hpp"
#include "ecg12r/random.hpp"

using namespace ecg12r;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

void BM_DtwBanded(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = noise(n, 1), y = noise(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::dtw_cost(x, y, std::size_t{100}));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DtwBanded)->Arg(500)->Arg(2000)->Arg(8000)->Complexity();

void BM_Ndtw(benchmark::State& state) {
  const auto x = noise(25000, 3), y = noise(25000, 4);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::ndtw(x, y, 1000.0));
}
BENCHMARK(BM_Ndtw)->Unit(benchmark::kMillisecond);

void BM_FitLt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RandomStream rng(5);
  Matrix x(n, 3), y(n, 5);
  for (auto& v : x.data()) v = rng.normal();
  for (auto& v : y.data()) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(linear::fit_lt(x, y));
}
BENCHMARK(BM_FitLt)->Arg(5000)->Arg(50000);

void BM_Predict(benchmark::State& state) {
  const auto kind = state.range(0) == 0 ? nn::ModelKind::LSTM : nn::ModelKind::LSTM_UNET;
  const nn::NetworkSpec spec = nn::NetworkSpec::small(kind);
  nn::Network net(spec);
  RandomStream rng(6);
  ad::Tensor x({4, spec.window_len, nn::kInputChannels});
  for (auto& v : x.data()) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(net.predict(x));
  state.SetLabel(state.range(0) == 0 ? "LSTM" : "LSTM-UNet");
}
BENCHMARK(BM_Predict)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
