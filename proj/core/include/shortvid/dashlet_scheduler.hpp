#pragma once

#include <set>
#include <vector>

#include "shortvid/abr.hpp"
#include "shortvid/scheduler.hpp"
#include "shortvid/sequence.hpp"
#include "shortvid/swipe_model.hpp"

namespace shortvid {

enum class ForecastMode { Discrete, Continuous };

struct SchedulerConfig {
  double horizon_s = 25.0;
  double candidate_threshold = 1.0 / 4.3;
  // A video is out of the lookahead once its first chunk starts inside the
  // horizon with probability below this.
  double lookahead_cutoff = 1e-3;
  ForecastMode forecast = ForecastMode::Discrete;
  double grid_step_s = 0.1;
  std::size_t mpc_max_chunks = 5;
  bool robust = false;
  bool lock_level_per_video = false;
  // Multiplies the throughput estimate.
  double network_factor = 1.0;
  QoeWeights weights;
};

/// Swipe knowledge handed to the scheduler; one entry per manifest video.
struct SwipeModel {
  std::vector<SwipePmf> pmfs;
  std::vector<SwipePdf> pdfs;

  static SwipeModel from_pmfs(std::vector<SwipePmf> pmfs, const Manifest& manifest, double grid_step_s = 0.1);
  static SwipeModel from_pdfs(std::vector<SwipePdf> pdfs, const Manifest& manifest);
  /// Every distribution replaced by its exponential perturbation.
  SwipeModel perturbed(double factor, const Manifest& manifest) const;
};

/// Expected-rebuffer curves in absolute session time for every unsecured
/// chunk of the videos in the lookahead, conditioned on the playback
/// position in `state`.
ForecastMap forecast_chunks(const PlayerState& state, const Manifest& manifest, const SwipeModel& model,
                            const SchedulerConfig& cfg);

/// Chunks whose expected rebuffer at now + horizon reaches the threshold,
/// closed under within-video prerequisites.
std::set<ChunkId> candidate_set(const PlayerState& state, const ForecastMap& forecasts, const SchedulerConfig& cfg);

/// Highest level at which every candidate downloads within the horizon.
int uniform_feasible_bitrate(const std::set<ChunkId>& candidates, double est_mbps, const Manifest& manifest,
                             const SchedulerConfig& cfg);

/// Greedy slot filling by largest marginal rebuffer penalty at the uniform
/// level. Slot k starts where slot k-1 is projected to finish.
BufferSequence greedy_order(const std::set<ChunkId>& candidates, const ForecastMap& forecasts, int level,
                            double est_mbps, const PlayerState& state, const Manifest& manifest,
                            const SchedulerConfig& cfg);

/// The marginal penalty greedy_order maximizes: the increase in c's expected
/// rebuffer when its download, started at slot_start_s, is pushed back by
/// delay_s.
double greedy_marginal(ChunkId c, double slot_start_s, double delay_s, int level, double est_mbps,
                       const ForecastMap& forecasts, const Manifest& manifest, double rtt_s);

/// Projected download seconds of chunk c at `level`.
double projected_chunk_download_s(ChunkId c, int level, double est_mbps, const Manifest& manifest, double rtt_s);

/// Throughput estimate from the state's download history.
double scheduler_estimate(const PlayerState& state, const Manifest& manifest, const SchedulerConfig& cfg);

/// Full pipeline: forecasts, candidates, uniform level, greedy order, bitrates.
BufferSequence schedule(const PlayerState& state, const Manifest& manifest, const SwipeModel& model,
                        const SchedulerConfig& cfg);

class DashletScheduler : public Scheduler {
 public:
  DashletScheduler(Manifest manifest, SwipeModel model, SchedulerConfig cfg = {});

  std::string name() const override { return "dashlet"; }
  Action decide(const PlayerState& state, Trigger trigger) override;

  const SchedulerConfig& config() const { return cfg_; }
  const SwipeModel& model() const { return model_; }

 private:
  Manifest manifest_;
  SwipeModel model_;
  SchedulerConfig cfg_;
};

}  // namespace shortvid
