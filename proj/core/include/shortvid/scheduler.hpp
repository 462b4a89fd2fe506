#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "shortvid/domain.hpp"

namespace shortvid {

/// Why the simulator is asking for a decision.
enum class Trigger { SessionStart, DownloadComplete, Swipe, ChunkBoundary, Deadline };

std::string to_string(Trigger t);

struct DownloadRequest {
  ChunkId chunk;
  int level = 0;
  std::uint64_t bytes = 0;
  double media_start_s = 0.0;
  double media_end_s = 0.0;
  std::optional<double> target_finish_s;
};

enum class IdleReason {
  BufferFull,  // nothing worth fetching inside the horizon
  Policy,      // the policy chose to wait although useful chunks remain
  Exhausted,   // every chunk the session can still use is secured
};

std::string to_string(IdleReason r);

struct Idle {
  IdleReason reason = IdleReason::BufferFull;
};

using Action = std::variant<DownloadRequest, Idle>;

/// A download policy driven by the simulator. The simulator calls decide()
/// whenever the link is free after an event, and once per missed deadline.
class Scheduler {
 public:
  virtual ~Scheduler() = default;

  virtual std::string name() const = 0;
  /// Clears per-session state; called before the first decision of a run.
  virtual void reset() {}
  virtual Action decide(const PlayerState& state, Trigger trigger) = 0;
  /// Whether playback may begin. The default waits for the first chunk.
  virtual bool ready_to_play(const PlayerState& state) const;
};

}  // namespace shortvid
