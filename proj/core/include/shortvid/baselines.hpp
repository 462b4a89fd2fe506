#pragma once

#include <optional>
#include <span>
#include <vector>

#include "shortvid/abr.hpp"
#include "shortvid/network_trace.hpp"
#include "shortvid/scheduler.hpp"
#include "shortvid/simulator.hpp"

namespace shortvid {

// ---------------------------------------------------------------------------
// TikTok-style state machine

enum class TikTokPhase { RampingUp, Maintaining, PrebufferIdling };

std::string to_string(TikTokPhase p);

struct TikTokConfig {
  std::uint64_t first_chunk_bytes = 1'000'000;
  int prebuffer_target = 5;
  // Threshold for level l (l >= 1) is threshold_factor * rate_l, unless
  // explicit thresholds are given.
  double threshold_factor = 1.5;
  std::vector<double> thresholds_mbps;
  double throughput_window_s = 1.0;
};

/// Byte-based split of one video at one level: the first chunk is the first
/// min(first_chunk_bytes, total) bytes, the second chunk the rest.
struct TikTokChunking {
  std::uint64_t first_bytes = 0;
  std::uint64_t second_bytes = 0;
  double first_media_end_s = 0.0;
  double duration_s = 0.0;

  int num_chunks() const { return second_bytes > 0 ? 2 : 1; }
};

TikTokChunking tiktok_chunking(const VideoSpec& video, int level, const BitrateLadder& ladder,
                               std::uint64_t first_chunk_bytes = 1'000'000);

/// Default thresholds: factor * rate for every level above the lowest.
std::vector<double> tiktok_thresholds(const BitrateLadder& ladder, double factor = 1.5);

/// Highest level whose threshold is at or below the throughput.
int tiktok_bitrate(double throughput_mbps, const BitrateLadder& ladder, std::span<const double> thresholds);

/// Throughput over the last `window_s` seconds of download activity,
/// falling back to the latest download, then to `fallback_mbps`.
double recent_throughput(std::span<const DownloadRecord> history, double now_s, double window_s,
                         double fallback_mbps);

struct TikTokState {
  TikTokPhase phase = TikTokPhase::RampingUp;
  int group_start = 1;  // first video of the current group
  std::vector<std::optional<int>> locked_level;  // per video

  struct Transition {
    double t_s = 0.0;
    TikTokPhase phase = TikTokPhase::RampingUp;
    int group_start = 1;
  };
  std::vector<Transition> history;
};

/// Unwatched videos (after the playing one, or from it before playback
/// starts) inside the group whose first chunk is buffered.
int tiktok_prebuffered_count(const TikTokState& s, const PlayerState& state, const Manifest& manifest);

/// Advances the machine on the current player state and returns its action.
Action tiktok_step(TikTokState& s, const PlayerState& state, const Manifest& manifest, const TikTokConfig& cfg);

class TikTokScheduler : public Scheduler {
 public:
  TikTokScheduler(Manifest manifest, TikTokConfig cfg = {});

  std::string name() const override { return "tiktok"; }
  void reset() override;
  Action decide(const PlayerState& state, Trigger trigger) override;
  /// Playback waits for prebuffer_target first chunks, or all remaining.
  bool ready_to_play(const PlayerState& state) const override;

  const TikTokState& machine() const { return state_; }

 private:
  Manifest manifest_;
  TikTokConfig cfg_;
  TikTokState state_;
};

// ---------------------------------------------------------------------------
// Oracle

struct OracleKnowledge {
  std::vector<double> view_s;  // effective seconds watched per video
  NetworkTrace trace;
};

OracleKnowledge make_oracle_knowledge(const Manifest& manifest, const SwipeTrace& swipes, const NetworkTrace& trace,
                                      const SimulatorConfig& sim = {});

struct OracleConfig {
  std::size_t horizon_chunks = 5;
  QoeWeights weights;
};

/// Chunks the user will watch, in viewing order.
std::vector<ChunkId> oracle_viewing_chunks(const OracleKnowledge& k, const Manifest& manifest);

/// MPC with exact swipes and exact future throughput. Downloads exactly the
/// chunks that will be watched, in viewing order.
class OracleScheduler : public Scheduler {
 public:
  OracleScheduler(Manifest manifest, OracleKnowledge knowledge, OracleConfig cfg = {});

  std::string name() const override { return "oracle"; }
  Action decide(const PlayerState& state, Trigger trigger) override;

  /// Levels for the next chunks by exhaustive search, in the order
  /// (objective, earlier finish, lexicographic).
  std::vector<int> plan_levels(const PlayerState& state, std::span<const ChunkId> upcoming) const;

 private:
  Manifest manifest_;
  OracleKnowledge knowledge_;
  OracleConfig cfg_;
  std::vector<ChunkId> viewing_;
  std::vector<double> watch_before_;  // cumulative viewing seconds before each viewing chunk
};

struct PlannedDownload {
  ChunkId chunk;
  int level = 0;
  double start_s = 0.0;
  double finish_s = 0.0;
};

/// The oracle's complete download plan for a session.
std::vector<PlannedDownload> oracle_schedule(const OracleKnowledge& knowledge, const Manifest& manifest,
                                             const QoeWeights& weights, const SimulatorConfig& sim = {});

}  // namespace shortvid
