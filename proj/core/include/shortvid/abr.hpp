#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "shortvid/domain.hpp"
#include "shortvid/sequence.hpp"

namespace shortvid {

struct QoeWeights {
  double mu = 4.3;   // rebuffer weight
  double eta = 1.0;  // smoothness weight
};

/// Harmonic mean of the last five per-download throughputs.
class ThroughputEstimator {
 public:
  static constexpr std::size_t kWindow = 5;

  explicit ThroughputEstimator(double bootstrap_mbps = 1.0, double factor = 1.0, bool robust = false);

  static ThroughputEstimator from_history(std::span<const DownloadRecord> history, double bootstrap_mbps,
                                          double factor = 1.0, bool robust = false);

  void observe(std::uint64_t bytes, double seconds);
  void observe_mbps(double mbps);

  /// Harmonic mean of the window times the perturbation factor, divided by
  /// 1 + max recent relative error when the robust discount is on.
  double estimate() const;
  double harmonic_mean() const;
  const std::deque<double>& window() const { return window_mbps_; }
  double factor() const { return factor_; }

 private:
  double bootstrap_mbps_;
  double factor_;
  bool robust_;
  std::deque<double> window_mbps_;
  std::deque<double> relative_errors_;
};

double throughput_estimate(const ThroughputEstimator& est);

/// One slot of a bitrate search. prev_slot points at the same video's
/// previous chunk inside the sequence; prev_level is used when that chunk is
/// already buffered instead.
struct MpcSlot {
  ChunkId chunk;
  std::vector<std::uint64_t> bytes_per_level;
  double seconds = 0.0;
  double reach = 0.0;
  const RebufferCurve* curve = nullptr;
  int prev_slot = -1;
  std::optional<int> prev_level;
  std::optional<int> locked_level;
};

struct MpcProblem {
  std::vector<MpcSlot> slots;
  std::vector<double> ladder_mbps;
  double start_s = 0.0;
  double est_mbps = 1.0;
  double rtt_s = 0.0;
  QoeWeights weights;
  // Force every chunk of a video onto the level of its predecessor.
  bool lock_level_per_video = false;
};

struct MpcAssignment {
  std::vector<int> levels;
  std::vector<double> finish_s;
  double objective = 0.0;

  double last_finish_s() const { return finish_s.empty() ? 0.0 : finish_s.back(); }
};

/// Levels a slot may take given the levels already chosen for earlier slots.
std::vector<int> allowed_levels(const MpcProblem& problem, std::size_t slot, std::span<const int> prefix);

/// Projected download seconds of one slot at one level.
double projected_download_s(const MpcProblem& problem, std::size_t slot, int level);

/// Expected horizon QoE of a full assignment, accumulated slot by slot:
/// reach * bitrate * seconds - mu * E(finish) - eta * |within-video switch|.
/// Returns nullopt when the assignment violates a lock.
std::optional<MpcAssignment> evaluate_assignment(const MpcProblem& problem, std::span<const int> levels);

/// True when `a` is preferred: higher objective, then earlier finish, then
/// lexicographically smaller levels.
bool better_assignment(const MpcAssignment& a, const MpcAssignment& b);

/// Best assignment by layered search that drops partial assignments
/// dominated in (finish time, objective) among those sharing every level a
/// later slot still depends on. Lossless with respect to better_assignment.
MpcAssignment solve_mpc(const MpcProblem& problem);

struct AbrOptions {
  std::size_t mpc_max_chunks = 5;
  bool lock_level_per_video = false;
  double rtt_s = 0.0;
  double start_s = 0.0;
  // Level for slots past the MPC prefix.
  int tail_level = 0;
};

/// Assigns ladder levels to a fixed-order buffer sequence. The first
/// mpc_max_chunks slots are searched; the rest keep tail_level. Projected
/// start and finish times are recomputed from `est_mbps`.
BufferSequence select_bitrates(const BufferSequence& seq, double est_mbps, const QoeWeights& weights,
                               const ForecastMap& forecasts, const PlayerState& state, const Manifest& manifest,
                               const AbrOptions& options);

/// The MPC problem select_bitrates solves for the first `count` slots.
MpcProblem build_mpc_problem(const BufferSequence& seq, std::size_t count, double est_mbps,
                             const QoeWeights& weights, const ForecastMap& forecasts, const PlayerState& state,
                             const Manifest& manifest, const AbrOptions& options);

}  // namespace shortvid
