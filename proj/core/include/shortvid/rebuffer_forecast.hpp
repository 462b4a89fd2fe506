#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "shortvid/domain.hpp"
#include "shortvid/swipe_model.hpp"

namespace shortvid {

/// Stall seconds of a chunk that finishes downloading at t_f and is due to
/// play at t_p.
double chunk_rebuffer_delay(double t_f_s, double t_p_s);

/// Expected rebuffering of one chunk as a function of its download-finish
/// time. The curve is a sum of hinges mass * max(t - t_hinge, 0), so it is
/// zero up to the earliest play start, nondecreasing and convex, with a
/// terminal slope equal to the chunk's reach probability.
class RebufferCurve {
 public:
  struct Breakpoint {
    double t_s = 0.0;
    double value_s = 0.0;
    double slope_after = 0.0;
  };
  struct Hinge {
    double t_s = 0.0;
    double mass = 0.0;
  };

  RebufferCurve() = default;
  explicit RebufferCurve(ChunkId target) : target_(target) {}

  /// Hinges need not be sorted; zero masses are dropped and equal times merged.
  static RebufferCurve from_hinges(ChunkId target, std::vector<Hinge> hinges);

  ChunkId target() const { return target_; }
  const std::vector<Breakpoint>& breakpoints() const { return breakpoints_; }
  double terminal_slope() const { return breakpoints_.empty() ? 0.0 : breakpoints_.back().slope_after; }
  /// Earliest time with nonzero slope; +inf for the zero curve.
  double earliest_play_start_s() const;
  double eval(double t_f_s) const;

 private:
  ChunkId target_{};
  std::vector<Breakpoint> breakpoints_;
};

/// E(t_f) = sum_n mass[n] * max(t_f - (origin + n*T), 0).
RebufferCurve curve_from_watchcount(const WatchCountDistribution& dist, double chunk_duration_s,
                                    double origin_s = 0.0);

/// E(x) = integral of f(t) (x - t) dt with f given as node masses, so the
/// result is exact between grid nodes.
RebufferCurve curve_from_playstart(const PlayStartPdf& pdf, double origin_s = 0.0);

double curve_eval(const RebufferCurve& curve, double t_f_s);

/// One way the user can watch videos 1..k: watched[l-1] = k_l chunks.
struct ViewingSequence {
  std::vector<int> watched;
  double probability = 1.0;

  /// Chunks played before c_ij in this sequence, or -1 if it is never played.
  int chunks_before(ChunkId c) const;
};

/// Enumerates every viewing sequence over videos 1..last_video, weighting
/// each by the product of per-video swipe probabilities. Zero-probability
/// sequences are skipped. Throws when more than `limit` sequences would be
/// visited.
void enumerate_viewing_sequences(std::span<const SwipePmf> pmfs, int last_video,
                                 const std::function<void(const ViewingSequence&)>& visit,
                                 std::uint64_t limit = 1'000'000);

/// Exact expectation of the target's stall by explicit enumeration of the
/// viewing sequences that reach it. Test oracle for the convolution path.
double brute_force_expected_rebuffer(const Manifest& manifest, std::span<const SwipePmf> pmfs, ChunkId target,
                                     double t_f_s);

}  // namespace shortvid
