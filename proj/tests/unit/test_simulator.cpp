#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "shortvid/baselines.hpp"
#include "shortvid/dashlet_scheduler.hpp"
#include "shortvid/simulator.hpp"
#include "shortvid/traceio.hpp"

namespace shortvid {
namespace {

using testing::make_manifest;
using Step = testing::ScriptedScheduler::Step;

SwipeTrace full_views(const Manifest& m) {
  SwipeTrace t;
  for (const auto& v : m.videos) t.push_back({v.id, v.duration_s});
  return t;
}

const ChunkRecord& record_of(const SessionLog& log, ChunkId c) {
  auto it = std::find_if(log.chunks.begin(), log.chunks.end(), [&](const ChunkRecord& r) { return r.chunk == c; });
  if (it == log.chunks.end()) throw std::out_of_range("no record for " + to_string(c));
  return *it;
}

TEST(Simulator, StartupWaitCountsAsStall) {
  const auto m = make_manifest({10}, 5.0);
  testing::ScriptedScheduler s(m, {{{1, 1}, 0}, {{1, 2}, 0}});
  const auto log = run_session(s, m, NetworkTrace::constant(2.0, 0.0), full_views(m));
  EXPECT_DOUBLE_EQ(log.stall_s, 2.5);
  EXPECT_DOUBLE_EQ(log.watch_s, 10.0);
  EXPECT_DOUBLE_EQ(log.session_s, 12.5);
  EXPECT_DOUBLE_EQ(record_of(log, {1, 1}).rebuffer_s, 2.5);
  EXPECT_DOUBLE_EQ(record_of(log, {1, 2}).rebuffer_s, 0.0);
  EXPECT_DOUBLE_EQ(*record_of(log, {1, 2}).play_start_s, 7.5);
}

TEST(Simulator, MidPlayStallAttributedToLateChunk) {
  const auto m = make_manifest({10}, 5.0);
  testing::ScriptedScheduler s(m, {{{1, 1}, 0}, {{1, 2}, 2}});
  const auto log = run_session(s, m, NetworkTrace::constant(2.0, 0.0), full_views(m));
  EXPECT_DOUBLE_EQ(record_of(log, {1, 2}).download_finish_s, 12.5);
  EXPECT_DOUBLE_EQ(record_of(log, {1, 2}).rebuffer_s, 5.0);
  EXPECT_DOUBLE_EQ(log.stall_s, 7.5);
  EXPECT_DOUBLE_EQ(log.session_s, 17.5);
}

TEST(Simulator, InfiniteBandwidthHasNoRebuffer) {
  const auto m = make_manifest({12, 7, 20}, 5.0);
  DashletScheduler s(m, SwipeModel::from_pmfs(testing::completing_pmfs(m), m));
  const auto log = run_session(s, m, NetworkTrace::constant(1e9, 0.0), full_views(m));
  EXPECT_NEAR(log.stall_s, 0.0, 1e-6);
  EXPECT_NEAR(log.watch_s, 39.0, 1e-9);
}

TEST(Simulator, ZeroViewClampedToTick) {
  const auto m = make_manifest({10, 10}, 5.0);
  SimulatorConfig cfg;
  const auto v = effective_viewing(m, {{"v1", 0.0}, {"v2", 50.0}}, cfg);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_DOUBLE_EQ(v[0], cfg.tick_s);
  EXPECT_DOUBLE_EQ(v[1], 10.0);
}

TEST(Simulator, ViewingCutAtMaxView) {
  const auto m = make_manifest({10, 10, 10}, 5.0);
  SimulatorConfig cfg;
  cfg.max_view_s = 15.0;
  const auto v = effective_viewing(m, full_views(m), cfg);
  EXPECT_EQ(v, (std::vector<double>{10.0, 5.0}));
}

TEST(Simulator, SwipeLeavesLaterChunksUnwatched) {
  const auto m = make_manifest({10, 5}, 5.0);
  testing::ScriptedScheduler s(m, {{{1, 1}, 0}, {{1, 2}, 0}, {{2, 1}, 0}});
  const auto log = run_session(s, m, NetworkTrace::constant(2.0, 0.0), {{"v1", 3.0}, {"v2", 5.0}});
  EXPECT_FALSE(record_of(log, {1, 2}).watched);
  EXPECT_DOUBLE_EQ(record_of(log, {1, 1}).watch_s, 3.0);
  EXPECT_EQ(log.wasted_bytes(), record_of(log, {1, 2}).bytes);
  EXPECT_TRUE(conservation_violations(log).empty());
}

TEST(Simulator, RejectsOutOfOrderDownload) {
  const auto m = make_manifest({10}, 5.0);
  testing::ScriptedScheduler s(m, {{{1, 2}, 0}});
  EXPECT_THROW(run_session(s, m, NetworkTrace::constant(2.0), full_views(m)), std::logic_error);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Simulator, GoldenDashletSession) {
  const auto m = make_manifest({12, 20, 8}, 5.0);
  const auto model = SwipeModel::from_pmfs(
      {testing::pmf(1, {0.4, 0.3, 0.3}), testing::pmf(2, {0.1, 0.2, 0.3, 0.4}), testing::pmf(3, {0.5, 0.5})}, m);
  DashletScheduler s(m, model);
  const SwipeTrace swipes{{"v1", 3.0}, {"v2", 20.0}, {"v3", 2.0}};
  const auto log = run_session(s, m, NetworkTrace::constant(2.0), swipes);
  const auto json = session_log_to_json(log);

  const std::string path = std::string(SHORTVID_GOLDEN_DIR) + "/dashlet_session.json";
  if (std::getenv("SHORTVID_UPDATE_GOLDEN")) {
    write_text_file(path, json);
    GTEST_SKIP() << "golden updated";
  }
  EXPECT_EQ(json, read_file(path));

  EXPECT_NEAR(log.watch_s, 3.0 + 20.0 + 2.0, 1e-9);
  ASSERT_EQ(log.videos.size(), 3u);
  EXPECT_NEAR(log.videos[0].view_s, 3.0, 1e-12);
  EXPECT_EQ(log.chunks.front().chunk, (ChunkId{1, 1}));
  EXPECT_NEAR(log.session_s, log.watch_s + log.stall_s, 1e-9);
}

struct Session {
  Manifest manifest;
  SwipeModel model;
  NetworkTrace trace;
  SwipeTrace swipes;
};

Session random_session(std::mt19937_64& rng) {
  auto pl = testing::random_playlist(rng, 5, 4);
  Session s{pl.manifest, SwipeModel::from_pmfs(pl.pmfs, pl.manifest), {}, {}};
  std::uniform_real_distribution<double> rate(0.3, 6.0);
  std::vector<NetworkTrace::Segment> segs;
  for (int k = 0; k < 8; ++k) segs.push_back({2.0 * k, rate(rng)});
  s.trace = NetworkTrace(segs);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& v : s.manifest.videos) s.swipes.push_back({v.id, u(rng) * 1.2 * v.duration_s});
  return s;
}

TEST(Simulator, ConservationDeterminismAndSingleFlight) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const auto s = random_session(rng);
    DashletScheduler dashlet(s.manifest, s.model);
    TikTokScheduler tiktok(s.manifest);
    OracleScheduler oracle(s.manifest, make_oracle_knowledge(s.manifest, s.swipes, s.trace));
    for (Scheduler* sched : std::initializer_list<Scheduler*>{&dashlet, &tiktok, &oracle}) {
      const auto a = run_session(*sched, s.manifest, s.trace, s.swipes);
      const auto b = run_session(*sched, s.manifest, s.trace, s.swipes);
      EXPECT_TRUE(conservation_violations(a).empty()) << sched->name();
      EXPECT_EQ(session_log_to_json(a), session_log_to_json(b)) << sched->name();

      auto chunks = a.chunks;
      std::sort(chunks.begin(), chunks.end(),
                [](const ChunkRecord& x, const ChunkRecord& y) { return x.download_start_s < y.download_start_s; });
      for (std::size_t k = 1; k < chunks.size(); ++k) {
        EXPECT_GE(chunks[k].download_start_s, chunks[k - 1].download_finish_s - 1e-12) << sched->name();
      }
      EXPECT_EQ(a.downloaded_bytes(), a.watched_bytes() + a.wasted_bytes());
    }
  }
}

TEST(Simulator, RecordsDecisionsOnRequest) {
  std::mt19937_64 rng(8);
  const auto s = random_session(rng);
  DashletScheduler dashlet(s.manifest, s.model);
  SimulatorConfig cfg;
  cfg.record_decisions = true;
  const auto log = run_session(dashlet, s.manifest, s.trace, s.swipes, cfg);
  ASSERT_FALSE(log.decisions.empty());
  EXPECT_EQ(log.decisions.front().trigger, Trigger::SessionStart);
  for (const auto& d : log.decisions) {
    if (d.chosen) EXPECT_GE(d.level, 0);
  }
  EXPECT_TRUE(run_session(dashlet, s.manifest, s.trace, s.swipes).decisions.empty());
}

}  // namespace
}  // namespace shortvid
