#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shortvid/domain.hpp"
#include "shortvid/network_trace.hpp"
#include "shortvid/scheduler.hpp"

namespace shortvid {

/// Ground-truth viewing of one video: how long the user stays before
/// swiping. Values at or past the duration mean the video played to the end.
struct SwipeTraceEntry {
  std::string video_id;
  double view_time_s = 0.0;
};

using SwipeTrace = std::vector<SwipeTraceEntry>;

struct SimulatorConfig {
  // Total viewing seconds after which the session stops.
  double max_view_s = 600.0;
  // Shortest possible view; zero-length entries are raised to it.
  double tick_s = 0.001;
  // Keep a PlayerState snapshot for every decision.
  bool record_decisions = false;
  // Throw when the accounting invariants fail at session end.
  bool check_invariants = true;
};

/// Seconds actually watched per video, in playlist order: each entry clamped
/// to [tick, duration] and the list cut at max_view_s total.
std::vector<double> effective_viewing(const Manifest& manifest, const SwipeTrace& trace, const SimulatorConfig& cfg);

struct ChunkRecord {
  ChunkId chunk;
  int level = 0;
  double mbps = 0.0;
  std::uint64_t bytes = 0;
  double media_start_s = 0.0;
  double media_end_s = 0.0;
  double download_start_s = 0.0;
  double download_finish_s = 0.0;
  std::optional<double> play_start_s;
  double watch_s = 0.0;
  double rebuffer_s = 0.0;
  bool watched = false;
};

struct IdleInterval {
  double start_s = 0.0;
  double end_s = 0.0;
  IdleReason reason = IdleReason::BufferFull;
};

struct VideoPlay {
  int video = 1;
  double play_start_s = 0.0;
  double view_s = 0.0;
};

struct DecisionPoint {
  PlayerState state;
  Trigger trigger = Trigger::SessionStart;
  std::optional<ChunkId> chosen;
  int level = -1;
};

struct SessionLog {
  std::string system;
  std::vector<ChunkRecord> chunks;  // in download-completion order
  std::vector<IdleInterval> idle;
  std::vector<VideoPlay> videos;
  std::vector<DecisionPoint> decisions;
  double session_s = 0.0;
  double watch_s = 0.0;
  double stall_s = 0.0;
  // Stall seconds spent waiting for a chunk that never arrived.
  double unattributed_stall_s = 0.0;
  std::size_t deadline_misses = 0;

  std::uint64_t downloaded_bytes() const;
  std::uint64_t watched_bytes() const;
  std::uint64_t wasted_bytes() const;
  double idle_s() const;
  double idle_s(IdleReason reason) const;
};

/// Every broken accounting invariant; empty for a consistent log.
std::vector<std::string> conservation_violations(const SessionLog& log);

/// Replays one session. Throws ValidationError on malformed inputs and
/// std::logic_error when the scheduler breaks the download contract.
SessionLog run_session(Scheduler& scheduler, const Manifest& manifest, const NetworkTrace& trace,
                       const SwipeTrace& swipes, const SimulatorConfig& cfg = {});

}  // namespace shortvid
