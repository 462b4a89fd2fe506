#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "shortvid/domain.hpp"
#include "shortvid/network_trace.hpp"
#include "shortvid/simulator.hpp"
#include "shortvid/swipe_model.hpp"

namespace shortvid {

/// Seeded generator with platform-independent sampling (standard library
/// distributions differ between implementations).
class SyntheticRng {
 public:
  explicit SyntheticRng(std::uint64_t seed) : engine_(seed) {}

  double uniform01();  // [0, 1)
  double uniform(double lo, double hi);
  int uniform_int(int lo, int hi);  // inclusive
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

enum class SwipeMode { Early, Late, Bimodal };

std::string to_string(SwipeMode m);
SwipeMode swipe_mode_from_string(const std::string& s);

/// Parametric viewing-time model for one video: a mixture of an early
/// truncated exponential, a late uniform window over the final 20% of the
/// video, and an atom at completion.
struct SwipeProfile {
  SwipeMode mode = SwipeMode::Early;
  double duration_s = 10.0;
  double early_mean_s = 3.0;
  double w_early = 1.0;
  double w_late = 0.0;
  double w_complete = 0.0;

  static SwipeProfile random(SwipeMode mode, double duration_s, SyntheticRng& rng);

  /// Density on a grid over [0, duration]; the completion atom sits on the
  /// last node.
  SwipePdf pdf(double grid_step_s = 0.1) const;
  SwipePmf pmf(const VideoSpec& video) const;
  double sample(SyntheticRng& rng) const;
};

struct SyntheticParams {
  int num_videos = 200;
  double min_duration_s = 10.0;
  double max_duration_s = 40.0;
  double chunk_duration_s = 5.0;
  std::vector<double> ladder_mbps = {0.6, 1.0, 1.5, 2.5};
  std::vector<std::string> ladder_labels = {"480p", "560p-low", "560p-high", "720p"};
  int group_size = 10;
  // Fractions of early, late and bimodal videos.
  double frac_early = 1.0 / 3.0;
  double frac_late = 1.0 / 3.0;
};

/// Durations are drawn on a 0.1 s grid.
Manifest synthetic_manifest(const SyntheticParams& params, SyntheticRng& rng);
std::vector<SwipeProfile> synthetic_profiles(const Manifest& manifest, const SyntheticParams& params,
                                             SyntheticRng& rng);
SwipeTrace sample_swipe_trace(const Manifest& manifest, const std::vector<SwipeProfile>& profiles, SyntheticRng& rng);

NetworkTrace constant_trace(double mbps, double rtt_s = 0.006);
/// Alternates through `levels_mbps`, holding each for step_s, over duration_s.
NetworkTrace step_trace(const std::vector<double>& levels_mbps, double step_s, double duration_s,
                        double rtt_s = 0.006);
/// Bounded random walk with one row per step_s.
NetworkTrace random_walk_trace(double lo_mbps, double hi_mbps, double step_s, double duration_s, SyntheticRng& rng,
                               double max_delta_mbps = 0.3, double rtt_s = 0.006);

/// A playlist with known swipe behavior plus per-session network and swipe
/// traces drawn from it.
struct Workload {
  Manifest manifest;
  std::vector<SwipeProfile> profiles;
  std::vector<NetworkTrace> traces;
  std::vector<SwipeTrace> swipes;
};

struct WorkloadParams {
  std::uint64_t seed = 1;
  int sessions = 20;
  double trace_lo_mbps = 1.0;
  double trace_hi_mbps = 3.0;
  double trace_duration_s = 600.0;
  SyntheticParams synthetic;
};

Workload make_workload(const WorkloadParams& params);

/// Same playlist with every video re-chunked at chunk_duration_s.
Manifest with_chunk_duration(const Manifest& manifest, double chunk_duration_s);

/// Chunk PMFs implied by the profiles under the manifest's chunking.
std::vector<SwipePmf> profile_pmfs(const Manifest& manifest, const std::vector<SwipeProfile>& profiles);

}  // namespace shortvid
