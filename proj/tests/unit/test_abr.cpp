#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "shortvid/abr.hpp"

namespace shortvid {
namespace {

ThroughputEstimator with_window(std::initializer_list<double> mbps, double factor = 1.0) {
  ThroughputEstimator est(0.5, factor);
  for (double x : mbps) est.observe_mbps(x);
  return est;
}

TEST(ThroughputEstimate, ConstantWindow) {
  EXPECT_DOUBLE_EQ(throughput_estimate(with_window({1, 1, 1, 1, 1})), 1.0);
}

TEST(ThroughputEstimate, HarmonicMeanOfTwo) {
  EXPECT_DOUBLE_EQ(throughput_estimate(with_window({1, 2})), 4.0 / 3.0);
}

TEST(ThroughputEstimate, FactorMultiplies) {
  EXPECT_NEAR(throughput_estimate(with_window({1, 2, 4}, 1.5)), 1.5 * 3.0 / 1.75, 1e-12);
  EXPECT_NEAR(throughput_estimate(with_window({1, 2, 4}, 1.5)), 2.571, 1e-3);
}

TEST(ThroughputEstimate, EmptyWindowUsesBootstrap) {
  EXPECT_DOUBLE_EQ(throughput_estimate(ThroughputEstimator(0.6)), 0.6);
}

TEST(ThroughputEstimate, KeepsLastFive) {
  auto est = with_window({100, 1, 1, 1, 1, 1});
  EXPECT_EQ(est.window().size(), 5u);
  EXPECT_DOUBLE_EQ(est.estimate(), 1.0);
}

TEST(ThroughputEstimate, FromHistoryUsesBytesOverSeconds) {
  const std::vector<DownloadRecord> h{{250'000, 0.0, 1.0}, {250'000, 1.0, 2.0}};
  EXPECT_DOUBLE_EQ(ThroughputEstimator::from_history(h, 1.0).estimate(), 2.0);
}

TEST(ThroughputEstimate, HarmonicNeverExceedsArithmetic) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    ThroughputEstimator est(1.0);
    std::vector<double> xs;
    for (int k = 0; k < 1 + trial % 5; ++k) {
      xs.push_back(u(rng));
      est.observe_mbps(xs.back());
    }
    const double am = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    EXPECT_LE(est.harmonic_mean(), am * (1 + 1e-12));
  }
  EXPECT_DOUBLE_EQ(with_window({3, 3, 3}).harmonic_mean(), 3.0);
}

TEST(ThroughputEstimate, RobustDiscount) {
  ThroughputEstimator est(1.0, 1.0, true);
  est.observe_mbps(2.0);
  est.observe_mbps(1.0);  // predicted 2, error 1
  const double hm = 2.0 / (0.5 + 1.0);
  EXPECT_NEAR(est.estimate(), hm / 2.0, 1e-12);
}

struct Fixture {
  Manifest manifest;
  ForecastMap forecasts;
  BufferSequence seq;
  PlayerState state;
};

// Sequence over video 1 chunks 1..n with curves whose hinges sit at the
// chunks' nominal play starts.
Fixture sequential_fixture(int n, std::vector<double> ladder) {
  Fixture f;
  f.manifest = testing::make_manifest({5.0 * n}, 5.0, std::move(ladder));
  f.state = PlayerState(1);
  for (int j = 1; j <= n; ++j) {
    ChunkForecast fc;
    fc.chunk = {1, j};
    fc.reach = 1.0;
    fc.seconds = 5.0;
    fc.curve = RebufferCurve::from_hinges({1, j}, {{5.0 * (j - 1), 1.0}});
    f.forecasts[{1, j}] = fc;
    f.seq.slots.push_back({{1, j}, 0, 0.0, 0.0});
  }
  return f;
}

std::vector<int> levels_of(const BufferSequence& s) {
  std::vector<int> out;
  for (const auto& slot : s.slots) out.push_back(slot.level);
  return out;
}

TEST(SelectBitrates, AmpleBandwidthPicksTop) {
  auto f = sequential_fixture(3, {1, 2, 4});
  const auto out = select_bitrates(f.seq, 1000.0, {}, f.forecasts, f.state, f.manifest, {});
  EXPECT_EQ(levels_of(out), (std::vector<int>{2, 2, 2}));
}

TEST(SelectBitrates, StarvedBandwidthPicksLowest) {
  auto f = sequential_fixture(3, {1, 2, 4});
  const auto out = select_bitrates(f.seq, 0.05, {}, f.forecasts, f.state, f.manifest, {});
  EXPECT_EQ(levels_of(out), (std::vector<int>{0, 0, 0}));
}

TEST(SelectBitrates, TwoChunksMatchEnumeration) {
  auto f = sequential_fixture(2, {1, 2});
  AbrOptions opt;
  const auto problem = build_mpc_problem(f.seq, 2, 2.0, {}, f.forecasts, f.state, f.manifest, opt);
  const auto best = testing::exhaustive_mpc(problem);
  const auto out = select_bitrates(f.seq, 2.0, {}, f.forecasts, f.state, f.manifest, opt);
  EXPECT_EQ(levels_of(out), best.levels);
  // Chunk 1 is due at once, so every second of download is a stall second.
  EXPECT_EQ(best.levels, (std::vector<int>{0, 0}));
}

TEST(SelectBitrates, ProjectedTimesAreContiguous) {
  auto f = sequential_fixture(4, {1, 2, 4});
  AbrOptions opt;
  opt.start_s = 3.0;
  opt.rtt_s = 0.006;
  const auto out = select_bitrates(f.seq, 2.0, {}, f.forecasts, f.state, f.manifest, opt);
  double t = 3.0;
  for (const auto& s : out.slots) {
    EXPECT_DOUBLE_EQ(s.start_s, t);
    const auto bytes = chunk_bytes(f.manifest.video(1), s.chunk.chunk, s.level, f.manifest.ladder);
    EXPECT_NEAR(s.finish_s - s.start_s, 0.006 + bytes * 8.0 / 1e6 / 2.0, 1e-12);
    t = s.finish_s;
  }
}

TEST(SelectBitrates, TailUsesTailLevel) {
  auto f = sequential_fixture(7, {1, 2, 4});
  AbrOptions opt;
  opt.mpc_max_chunks = 3;
  opt.tail_level = 1;
  const auto out = select_bitrates(f.seq, 3.0, {}, f.forecasts, f.state, f.manifest, opt);
  for (std::size_t k = 3; k < out.size(); ++k) EXPECT_EQ(out.slots[k].level, 1);
}

TEST(SelectBitrates, MonotoneInEstimateOnFixtures) {
  for (int n : {1, 2, 3, 4}) {
    auto f = sequential_fixture(n, {0.6, 1.0, 1.5, 2.5});
    std::vector<int> prev(static_cast<std::size_t>(n), 0);
    for (double est = 0.2; est < 20.0; est *= 1.25) {
      const auto lv = levels_of(select_bitrates(f.seq, est, {}, f.forecasts, f.state, f.manifest, {}));
      for (std::size_t k = 0; k < lv.size(); ++k) EXPECT_GE(lv[k], prev[k]) << "n=" << n << " est=" << est;
      prev = lv;
    }
  }
}

TEST(SelectBitrates, LockLevelPerVideoFollowsBufferedPredecessor) {
  auto f = sequential_fixture(3, {1, 2, 4});
  f.state.buffers[0].push_back({2, 1, 0.0, 5.0});
  f.seq.slots.erase(f.seq.slots.begin());
  AbrOptions opt;
  opt.lock_level_per_video = true;
  const auto out = select_bitrates(f.seq, 0.1, {}, f.forecasts, f.state, f.manifest, opt);
  EXPECT_EQ(levels_of(out), (std::vector<int>{2, 2}));
}

TEST(SolveMpc, LockedSlotRejectsOtherLevels) {
  MpcProblem p;
  p.ladder_mbps = {1.0, 3.0};
  p.est_mbps = 1000.0;
  for (int v = 1; v <= 2; ++v) {
    MpcSlot s;
    s.chunk = {v, 1};
    s.bytes_per_level = {10, 30};
    s.seconds = 1.0;
    s.reach = 1.0;
    p.slots.push_back(s);
  }
  p.slots[0].locked_level = 0;
  const auto a = evaluate_assignment(p, std::vector<int>{0, 1});
  ASSERT_TRUE(a.has_value());
  EXPECT_DOUBLE_EQ(a->objective, 1.0 + 3.0);
  EXPECT_FALSE(evaluate_assignment(p, std::vector<int>{1, 1}).has_value());
}

TEST(SolveMpc, PruningIsLosslessOnRandomProblems) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<RebufferCurve> curves;
  curves.reserve(64);
  for (int trial = 0; trial < 300; ++trial) {
    curves.clear();
    MpcProblem p;
    p.ladder_mbps = {0.6, 1.0, 1.5, 2.5};
    p.est_mbps = 0.5 + 3.0 * u(rng);
    p.rtt_s = 0.006;
    p.start_s = 10.0 * u(rng);
    const int n = 1 + trial % 4;
    for (int k = 0; k < n; ++k) {
      MpcSlot s;
      s.chunk = {1 + static_cast<int>(u(rng) * 2), k + 1};
      s.seconds = 5.0 * (0.2 + 0.8 * u(rng));
      for (double r : p.ladder_mbps) s.bytes_per_level.push_back(static_cast<std::uint64_t>(r * 1e6 * s.seconds / 8.0));
      s.reach = u(rng);
      curves.push_back(RebufferCurve::from_hinges(s.chunk, {{p.start_s + 20.0 * u(rng), s.reach * u(rng)},
                                                            {p.start_s + 20.0 * u(rng), s.reach * u(rng)}}));
      s.curve = &curves.back();
      if (k > 0 && u(rng) < 0.5) s.prev_slot = static_cast<int>(u(rng) * k);
      else if (u(rng) < 0.3) s.prev_level = static_cast<int>(u(rng) * 4);
      p.slots.push_back(s);
    }
    const auto got = solve_mpc(p);
    const auto want = testing::exhaustive_mpc(p);
    EXPECT_EQ(got.levels, want.levels) << "trial " << trial;
    EXPECT_EQ(got.objective, want.objective) << "trial " << trial;
  }
}

}  // namespace
}  // namespace shortvid
