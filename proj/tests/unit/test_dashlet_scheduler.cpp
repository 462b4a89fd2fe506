#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "shortvid/dashlet_scheduler.hpp"

namespace shortvid {
namespace {

using testing::make_manifest;

PlayerState cold_start(const Manifest& m) {
  PlayerState s(m.num_videos());
  s.rtt_s = 0.006;
  return s;
}

void buffer_chunks(PlayerState& s, const Manifest& m, int video, int count, int level = 0) {
  const auto& v = m.video(video);
  for (int j = s.buffered_count(video) + 1; j <= count; ++j) {
    s.buffers[static_cast<std::size_t>(video - 1)].push_back(
        {level, chunk_bytes(v, j, level, m.ladder), v.chunk_start_s(j), v.chunk_start_s(j) + v.chunk_seconds(j)});
  }
}

std::vector<ChunkId> chunks_of(const BufferSequence& seq) {
  std::vector<ChunkId> out;
  for (const auto& s : seq.slots) out.push_back(s.chunk);
  return out;
}

TEST(CandidateSet, CertainViewerTakesChunksDueInsideHorizon) {
  const auto m = make_manifest({10, 10, 10, 10}, 5.0);
  const auto model = SwipeModel::from_pmfs(testing::completing_pmfs(m), m);
  const SchedulerConfig cfg;
  const auto state = cold_start(m);
  const auto cands = candidate_set(state, forecast_chunks(state, m, model, cfg), cfg);
  const std::set<ChunkId> want{{1, 1}, {1, 2}, {2, 1}, {2, 2}, {3, 1}};
  EXPECT_EQ(cands, want);
}

TEST(CandidateSet, UnreachableChunkExcluded) {
  const auto m = make_manifest({10, 10}, 5.0);
  const auto model = SwipeModel::from_pmfs({testing::pmf(1, {1.0, 0.0}), testing::pmf(2, {0.0, 1.0})}, m);
  const SchedulerConfig cfg;
  const auto state = cold_start(m);
  const auto forecasts = forecast_chunks(state, m, model, cfg);
  const auto cands = candidate_set(state, forecasts, cfg);
  EXPECT_EQ(cands.count({1, 2}), 0u);
  EXPECT_EQ(cands.count({1, 1}), 1u);
  EXPECT_EQ(cands.count({2, 1}), 1u);
  if (auto it = forecasts.find({1, 2}); it != forecasts.end()) EXPECT_EQ(it->second.reach, 0.0);
}

TEST(CandidateSet, ClosedUnderPrerequisites) {
  const auto m = make_manifest({30}, 5.0);
  ForecastMap f;
  ChunkForecast fc;
  fc.chunk = {1, 4};
  fc.reach = 1.0;
  fc.seconds = 5.0;
  fc.curve = RebufferCurve::from_hinges({1, 4}, {{0.0, 1.0}});
  f[{1, 4}] = fc;
  auto state = cold_start(m);
  buffer_chunks(state, m, 1, 1);
  const std::set<ChunkId> want{{1, 2}, {1, 3}, {1, 4}};
  EXPECT_EQ(candidate_set(state, f, {}), want);
}

TEST(UniformFeasibleBitrate, Examples) {
  const auto m = make_manifest({10}, 5.0, {1, 2, 4});
  const std::set<ChunkId> two{{1, 1}, {1, 2}};
  SchedulerConfig cfg;
  EXPECT_EQ(uniform_feasible_bitrate(two, 4.0, m, cfg), 2);
  EXPECT_EQ(uniform_feasible_bitrate(two, 0.4, m, cfg), 0);
  cfg.horizon_s = 8.0;
  EXPECT_EQ(uniform_feasible_bitrate(two, 4.0, m, cfg), 1);
  EXPECT_EQ(uniform_feasible_bitrate({}, 4.0, m, cfg), 0);
}

TEST(UniformFeasibleBitrate, TinyChunkGetsTop) {
  const auto m = make_manifest({0.2}, 5.0, {1, 2, 4});
  EXPECT_EQ(uniform_feasible_bitrate({{1, 1}}, 0.5, m, {}), 2);
}

TEST(GreedyOrder, SingleCandidate) {
  const auto m = make_manifest({10, 10}, 5.0);
  const auto model = SwipeModel::from_pmfs(testing::completing_pmfs(m), m);
  const auto state = cold_start(m);
  const auto f = forecast_chunks(state, m, model, {});
  const auto seq = greedy_order({{1, 1}}, f, 1, 2.0, state, m, {});
  ASSERT_EQ(seq.size(), 1u);
  EXPECT_EQ(seq.front().chunk, (ChunkId{1, 1}));
  EXPECT_DOUBLE_EQ(seq.front().start_s, 0.0);
  EXPECT_DOUBLE_EQ(seq.front().finish_s, 0.006 + 5.0);
}

TEST(GreedyOrder, CertainViewerGetsPlaybackOrder) {
  const auto m = make_manifest({10, 10, 10, 10}, 5.0);
  const auto model = SwipeModel::from_pmfs(testing::completing_pmfs(m), m);
  const auto state = cold_start(m);
  const auto seq = schedule(state, m, model, {});
  EXPECT_EQ(chunks_of(seq), (std::vector<ChunkId>{{1, 1}, {1, 2}, {2, 1}, {2, 2}, {3, 1}}));
}

TEST(GreedyOrder, EachSlotMaximizesMarginal) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    auto pl = testing::random_playlist(rng, 4, 4);
    const auto model = SwipeModel::from_pmfs(pl.pmfs, pl.manifest);
    const auto state = cold_start(pl.manifest);
    const SchedulerConfig cfg;
    const auto f = forecast_chunks(state, pl.manifest, model, cfg);
    const auto cands = candidate_set(state, f, cfg);
    const double est = 1.5;
    const int level = 0;
    const auto seq = greedy_order(cands, f, level, est, state, pl.manifest, cfg);
    ASSERT_EQ(seq.size(), cands.size());

    std::set<ChunkId> pending = cands;
    std::set<ChunkId> placed;
    for (const auto& slot : seq.slots) {
      double delay = 0.0;
      for (const auto& c : pending) delay += projected_chunk_download_s(c, level, est, pl.manifest, state.rtt_s);
      delay /= static_cast<double>(pending.size());
      const double chosen =
          greedy_marginal(slot.chunk, slot.start_s, delay, level, est, f, pl.manifest, state.rtt_s);
      for (const auto& c : pending) {
        if (c.chunk > 1 && !placed.count({c.video, c.chunk - 1}) && !state.is_secured({c.video, c.chunk - 1})) continue;
        EXPECT_LE(greedy_marginal(c, slot.start_s, delay, level, est, f, pl.manifest, state.rtt_s), chosen + 1e-12);
      }
      pending.erase(slot.chunk);
      placed.insert(slot.chunk);
    }
  }
}

TEST(Schedule, ColdStartFetchesFirstChunk) {
  const auto m = make_manifest({12, 20, 7}, 5.0);
  const auto model = SwipeModel::from_pmfs(
      {testing::pmf(1, {0.5, 0.3, 0.2}), testing::pmf(2, {0.2, 0.2, 0.2, 0.4}), testing::pmf(3, {0.5, 0.5})}, m);
  for (auto mode : {ForecastMode::Discrete, ForecastMode::Continuous}) {
    SchedulerConfig cfg;
    cfg.forecast = mode;
    DashletScheduler sched(m, model, cfg);
    const auto action = sched.decide(cold_start(m), Trigger::SessionStart);
    ASSERT_TRUE(std::holds_alternative<DownloadRequest>(action));
    const auto& req = std::get<DownloadRequest>(action);
    EXPECT_EQ(req.chunk, (ChunkId{1, 1}));
    EXPECT_EQ(req.bytes, chunk_bytes(m.video(1), 1, req.level, m.ladder));
    EXPECT_DOUBLE_EQ(req.media_start_s, 0.0);
    EXPECT_DOUBLE_EQ(req.media_end_s, 5.0);
  }
}

TEST(Schedule, FullBufferIdles) {
  const auto m = make_manifest({10, 10}, 5.0);
  const auto model = SwipeModel::from_pmfs(testing::completing_pmfs(m), m);
  auto state = cold_start(m);
  buffer_chunks(state, m, 1, 2);
  buffer_chunks(state, m, 2, 2);
  EXPECT_TRUE(schedule(state, m, model, {}).empty());
  DashletScheduler sched(m, model);
  const auto action = sched.decide(state, Trigger::DownloadComplete);
  ASSERT_TRUE(std::holds_alternative<Idle>(action));
  EXPECT_EQ(std::get<Idle>(action).reason, IdleReason::Exhausted);
}

TEST(Schedule, ChunksBeyondHorizonWait) {
  const auto m = make_manifest({60, 60}, 5.0);
  const auto model = SwipeModel::from_pmfs(testing::completing_pmfs(m), m);
  auto state = cold_start(m);
  buffer_chunks(state, m, 1, 7);
  state.started = true;
  state.rebuffering = false;
  const auto action = DashletScheduler(m, model).decide(state, Trigger::DownloadComplete);
  ASSERT_TRUE(std::holds_alternative<Idle>(action));
  EXPECT_EQ(std::get<Idle>(action).reason, IdleReason::BufferFull);
}

PlayerState random_state(std::mt19937_64& rng, const Manifest& m) {
  auto s = cold_start(m);
  std::uniform_int_distribution<int> pick_video(1, m.num_videos());
  const int playing = pick_video(rng);
  for (int i = 1; i <= m.num_videos(); ++i) {
    std::uniform_int_distribution<int> count(i == playing ? 1 : 0, m.video(i).num_chunks());
    buffer_chunks(s, m, i, count(rng));
  }
  s.playing = {playing, 1};
  s.started = true;
  s.rebuffering = false;
  s.now_s = std::uniform_real_distribution<double>(0.0, 30.0)(rng);
  for (int k = 0; k < 3; ++k) s.download_history.push_back({200'000, 0.0, 0.5 + 0.3 * k});
  return s;
}

TEST(Schedule, PrerequisitesPrecedeEverySlot) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto pl = testing::random_playlist(rng, 4, 4);
    const auto model = SwipeModel::from_pmfs(pl.pmfs, pl.manifest);
    const auto state = random_state(rng, pl.manifest);
    const auto seq = schedule(state, pl.manifest, model, {});
    std::set<ChunkId> seen;
    for (const auto& slot : seq.slots) {
      EXPECT_FALSE(state.is_secured(slot.chunk));
      if (slot.chunk.chunk > 1) {
        const ChunkId prev{slot.chunk.video, slot.chunk.chunk - 1};
        EXPECT_TRUE(state.is_secured(prev) || seen.count(prev)) << to_string(slot.chunk);
      }
      EXPECT_TRUE(seen.insert(slot.chunk).second);
    }
  }
}

TEST(Schedule, Idempotent) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    auto pl = testing::random_playlist(rng, 4, 4);
    const auto model = SwipeModel::from_pmfs(pl.pmfs, pl.manifest);
    const auto state = random_state(rng, pl.manifest);
    const auto a = schedule(state, pl.manifest, model, {});
    const auto b = schedule(state, pl.manifest, model, {});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_EQ(a.slots[k].chunk, b.slots[k].chunk);
      EXPECT_EQ(a.slots[k].level, b.slots[k].level);
      EXPECT_EQ(a.slots[k].finish_s, b.slots[k].finish_s);
    }
  }
}

TEST(SwipeModelInput, RejectsModelOfWrongSize) {
  const auto m = make_manifest({10, 10}, 5.0);
  auto model = SwipeModel::from_pmfs({testing::pmf(1, {0.5, 0.5})}, make_manifest({10}, 5.0));
  EXPECT_THROW(DashletScheduler(m, model), std::invalid_argument);
}

TEST(SwipeModelInput, UnitPerturbationKeepsMeans) {
  const auto m = make_manifest({20, 15}, 5.0);
  const auto model = SwipeModel::from_pmfs({testing::pmf(1, {0.4, 0.3, 0.2, 0.1}), testing::pmf(2, {0.2, 0.3, 0.5})}, m);
  const auto p = model.perturbed(1.0, m);
  for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(p.pdfs[k].mean(), model.pdfs[k].mean(), 1e-3);
}

}  // namespace
}  // namespace shortvid
