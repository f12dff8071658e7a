#include <benchmark/benchmark.h>

#include "qcal/calib.hpp"
#include "qcal/linalg.hpp"
#include "qcal/qat.hpp"
#include "qcal/quant.hpp"
#include "qcal/random.hpp"
#include "qcal/synth.hpp"

namespace {

qcal::Matrix gaussian(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  qcal::Rng rng(seed);
  qcal::Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

void BM_Svd(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const qcal::Matrix a = gaussian(n, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(qcal::svd(a));
}
BENCHMARK(BM_Svd)->RangeMultiplier(2)->Range(8, 128)->Unit(benchmark::kMicrosecond);

void BM_RidgeSolve(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const qcal::Matrix x = gaussian(4 * d, d, 2);
  const qcal::Matrix y = gaussian(4 * d, d / 2, 3);
  for (auto _ : state) benchmark::DoNotOptimize(qcal::ridge_solve(x, y, 1e-3));
}
BENCHMARK(BM_RidgeSolve)->RangeMultiplier(2)->Range(8, 64)->Unit(benchmark::kMicrosecond);

void BM_RidgeSweepReusingSvd(benchmark::State& state) {
  const qcal::Matrix x = gaussian(256, 64, 4);
  const qcal::Matrix y = gaussian(256, 32, 5);
  const qcal::SvdResult f = qcal::svd(x);
  for (auto _ : state) {
    for (double lambda = 1e-8; lambda <= 1e3; lambda *= 10) benchmark::DoNotOptimize(qcal::ridge_solve(f, y, lambda));
  }
}
BENCHMARK(BM_RidgeSweepReusingSvd)->Unit(benchmark::kMicrosecond);

void BM_FakeQuantize(benchmark::State& state) {
  const qcal::Matrix w = qcal::make_fig2_weights({}, 0);
  const bool sigma = state.range(0) != 0;
  const qcal::QuantSpec spec{3, true, qcal::PerAxis{0}};
  const qcal::SigmaObservation s = qcal::sigma_observe(w, spec, 3.0);
  const qcal::QuantParams mm = qcal::minmax_observe(w, spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sigma ? qcal::fake_quantize(w, s.params, &s.clip) : qcal::fake_quantize(w, mm));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.size()));
}
BENCHMARK(BM_FakeQuantize)->Arg(0)->Arg(1);

void BM_QatStep(benchmark::State& state) {
  const qcal::TeacherFixture f = qcal::make_teacher({}, 0);
  const qcal::Matrix target = qcal::forward(f.teacher, f.inputs);
  qcal::ToyModel m = qcal::ToyModel::with_config(f.teacher, qcal::make_wa_config(2, 4));
  const qcal::TrainConfig cfg;
  int step = 0;
  for (auto _ : state) benchmark::DoNotOptimize(qcal::qat_step(m, f.inputs, target, cfg, step++));
}
BENCHMARK(BM_QatStep)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
