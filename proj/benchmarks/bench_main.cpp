#include <benchmark/benchmark.h>

#include "shortvid/dashlet_scheduler.hpp"
#include "shortvid/experiment.hpp"
#include "shortvid/rebuffer_forecast.hpp"

namespace {

using namespace shortvid;

const Workload& workload() {
  static const Workload w = [] {
    WorkloadParams p;
    p.sessions = 2;
    return make_workload(p);
  }();
  return w;
}

void BM_Convolve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> a(n, 1.0 / static_cast<double>(n));
  std::vector<double> b(n, 1.0 / static_cast<double>(n));
  for (auto _ : state) benchmark::DoNotOptimize(convolve(a, b));
}
BENCHMARK(BM_Convolve)->RangeMultiplier(4)->Range(8, 512);

void BM_FirstChunkDist(benchmark::State& state) {
  const auto& w = workload();
  const auto pmfs = profile_pmfs(w.manifest, w.profiles);
  const int i = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(first_chunk_dist(i, pmfs));
}
BENCHMARK(BM_FirstChunkDist)->Arg(5)->Arg(20)->Arg(50);

void BM_PlayStartPdf(benchmark::State& state) {
  const auto& w = workload();
  std::vector<SwipePdf> pdfs;
  for (const auto& p : w.profiles) pdfs.push_back(p.pdf(0.1));
  const int i = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(play_start_pdf_first(i, pdfs));
}
BENCHMARK(BM_PlayStartPdf)->Arg(3)->Arg(6);

void BM_CurveEval(benchmark::State& state) {
  const auto& w = workload();
  const auto pmfs = profile_pmfs(w.manifest, w.profiles);
  const auto curve = curve_from_watchcount(first_chunk_dist(10, pmfs), 5.0);
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(curve.eval(t));
    t = t > 200.0 ? 0.0 : t + 0.7;
  }
}
BENCHMARK(BM_CurveEval);

void BM_Schedule(benchmark::State& state) {
  const auto& w = workload();
  const auto model = SwipeModel::from_pmfs(profile_pmfs(w.manifest, w.profiles), w.manifest);
  SchedulerConfig cfg;
  cfg.forecast = state.range(0) == 0 ? ForecastMode::Discrete : ForecastMode::Continuous;
  PlayerState ps(w.manifest.num_videos());
  ps.rtt_s = 0.006;
  for (auto _ : state) benchmark::DoNotOptimize(schedule(ps, w.manifest, model, cfg));
}
BENCHMARK(BM_Schedule)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_Session(benchmark::State& state) {
  const auto inputs = workload_inputs(workload());
  const std::string system = known_systems()[static_cast<std::size_t>(state.range(0))];
  state.SetLabel(system);
  for (auto _ : state) benchmark::DoNotOptimize(run_system(system, inputs, {0, 0}, {}));
}
BENCHMARK(BM_Session)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
