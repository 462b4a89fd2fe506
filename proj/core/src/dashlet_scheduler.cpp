#include "shortvid/dashlet_scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shortvid {

SwipeModel SwipeModel::from_pmfs(std::vector<SwipePmf> pmfs, const Manifest& manifest, double grid_step_s) {
  if (static_cast<int>(pmfs.size()) != manifest.num_videos()) {
    throw std::invalid_argument("SwipeModel: need one PMF per manifest video");
  }
  SwipeModel model;
  for (int i = 1; i <= manifest.num_videos(); ++i) {
    auto& pmf = pmfs[static_cast<std::size_t>(i - 1)];
    pmf.video_index = i;
    model.pdfs.push_back(pdf_from_pmf(pmf, manifest.video(i), grid_step_s));
    model.pdfs.back().video_index = i;
  }
  model.pmfs = std::move(pmfs);
  return model;
}

SwipeModel SwipeModel::from_pdfs(std::vector<SwipePdf> pdfs, const Manifest& manifest) {
  if (static_cast<int>(pdfs.size()) != manifest.num_videos()) {
    throw std::invalid_argument("SwipeModel: need one density per manifest video");
  }
  SwipeModel model;
  for (int i = 1; i <= manifest.num_videos(); ++i) {
    auto& pdf = pdfs[static_cast<std::size_t>(i - 1)];
    pdf.video_index = i;
    model.pmfs.push_back(pmf_from_pdf(pdf, manifest.video(i)));
  }
  model.pdfs = std::move(pdfs);
  return model;
}

SwipeModel SwipeModel::perturbed(double factor, const Manifest& manifest) const {
  SwipeModel out;
  for (int i = 1; i <= manifest.num_videos(); ++i) {
    const auto k = static_cast<std::size_t>(i - 1);
    out.pmfs.push_back(perturb_exponential(pmfs[k], factor, manifest.video(i)));
    out.pmfs.back().video_index = i;
    out.pdfs.push_back(perturb_exponential(pdfs[k], factor));
    out.pdfs.back().video_index = i;
  }
  return out;
}

namespace {

struct Origin {
  int video = 1;
  int chunk = 1;
  double chunk_start_s = 0.0;  // session time at which the playing chunk started
};

Origin playback_origin(const PlayerState& state, const Manifest& manifest) {
  Origin o;
  o.video = std::clamp(state.playing.video, 1, manifest.num_videos());
  o.chunk = std::clamp(state.playing.chunk, 1, manifest.video(o.video).num_chunks());
  o.chunk_start_s = state.now_s - state.offset_s;
  return o;
}

bool common_chunk_duration(const Manifest& m) {
  for (const auto& v : m.videos) {
    if (std::abs(v.chunk_duration_s - m.videos.front().chunk_duration_s) > 1e-12) return false;
  }
  return true;
}

ChunkForecast make_forecast(const Manifest& manifest, ChunkId c, RebufferCurve curve, double reach) {
  return ChunkForecast{c, std::move(curve), reach, manifest.video(c.video).chunk_seconds(c.chunk)};
}

// Chunks of the playing video have deterministic play starts; only whether
// they are reached is uncertain.
void forecast_current_video(const PlayerState& state, const Manifest& manifest, const Origin& o,
                            const std::vector<double>& reach_by_chunk, ForecastMap& out) {
  const auto& video = manifest.video(o.video);
  for (int j = o.chunk; j <= video.num_chunks(); ++j) {
    const ChunkId c{o.video, j};
    if (state.is_secured(c)) continue;
    const double reach = reach_by_chunk[static_cast<std::size_t>(j)];
    auto curve = RebufferCurve::from_hinges(c, {{o.chunk_start_s + (j - o.chunk) * video.chunk_duration_s, reach}});
    out.emplace(c, make_forecast(manifest, c, std::move(curve), reach));
  }
}

ForecastMap forecast_discrete(const PlayerState& state, const Manifest& manifest, const SwipeModel& model,
                              const SchedulerConfig& cfg) {
  ForecastMap out;
  const Origin o = playback_origin(state, manifest);
  const double T = manifest.video(o.video).chunk_duration_s;
  const auto& pmf0 = model.pmfs[static_cast<std::size_t>(o.video - 1)];
  const int n0 = manifest.video(o.video).num_chunks();

  // Swipe chunk of the playing video given it has reached chunk j0.
  std::vector<double> q(static_cast<std::size_t>(n0) + 1, 0.0);
  const double s = pmf0.survival(o.chunk);
  if (s > 0.0) {
    for (int k = o.chunk; k <= n0; ++k) q[static_cast<std::size_t>(k)] = pmf0.at(k) / s;
  } else {
    q[static_cast<std::size_t>(o.chunk)] = 1.0;
  }
  std::vector<double> reach(static_cast<std::size_t>(n0) + 2, 0.0);
  for (int j = n0; j >= o.chunk; --j) {
    reach[static_cast<std::size_t>(j)] = reach[static_cast<std::size_t>(j) + 1] + q[static_cast<std::size_t>(j)];
  }
  forecast_current_video(state, manifest, o, reach, out);

  // Chunks played before the next video's first chunk, counted from the
  // start of the playing chunk.
  std::vector<double> first(static_cast<std::size_t>(n0 - o.chunk) + 2, 0.0);
  for (int k = o.chunk; k <= n0; ++k) first[static_cast<std::size_t>(k - o.chunk + 1)] = q[static_cast<std::size_t>(k)];

  const double horizon_end = state.now_s + cfg.horizon_s;
  for (int i = o.video + 1; i <= manifest.num_videos(); ++i) {
    double in_horizon = 0.0;
    for (std::size_t n = 0; n < first.size(); ++n) {
      if (o.chunk_start_s + static_cast<double>(n) * T < horizon_end) in_horizon += first[n];
    }
    if (in_horizon < cfg.lookahead_cutoff) break;

    const auto& pmf = model.pmfs[static_cast<std::size_t>(i - 1)];
    const WatchCountDistribution first_dist{{i, 1}, first};
    for (int j = 1; j <= manifest.video(i).num_chunks(); ++j) {
      const ChunkId c{i, j};
      if (state.is_secured(c)) continue;
      const auto dist = j == 1 ? first_dist : nonfirst_chunk_dist(first_dist, pmf, j);
      auto curve = curve_from_watchcount(dist, T, o.chunk_start_s);
      out.emplace(c, make_forecast(manifest, c, std::move(curve), dist.total()));
    }
    first = convolve(first, pmf.by_count());
  }
  return out;
}

ForecastMap forecast_continuous(const PlayerState& state, const Manifest& manifest, const SwipeModel& model,
                                const SchedulerConfig& cfg) {
  ForecastMap out;
  const Origin o = playback_origin(state, manifest);
  const auto& video0 = manifest.video(o.video);
  const auto& pdf0 = model.pdfs[static_cast<std::size_t>(o.video - 1)];
  const double h = pdf0.grid_step_s;
  const double z = pdf0.integral();
  const double w = std::clamp(state.position_s, 0.0, pdf0.extent_s());
  const double remaining_mass = z - pdf0.cdf(w);
  const bool degenerate = !(remaining_mass > 1e-12);

  std::vector<double> reach(static_cast<std::size_t>(video0.num_chunks()) + 2, 0.0);
  for (int j = o.chunk; j <= video0.num_chunks(); ++j) {
    double r = 0.0;
    if (j == o.chunk) {
      r = 1.0;
    } else if (!degenerate) {
      r = std::clamp((z - pdf0.cdf((j - 1) * video0.chunk_duration_s)) / remaining_mass, 0.0, 1.0);
    }
    reach[static_cast<std::size_t>(j)] = r;
  }
  forecast_current_video(state, manifest, o, reach, out);

  // Remaining viewing time of the playing video on the grid, from now.
  std::vector<double> first;
  if (degenerate) {
    first = {1.0};
  } else {
    const double extent = pdf0.extent_s();
    const auto nodes = static_cast<std::size_t>(std::ceil((extent - w) / h - 1e-9)) + 1;
    first.assign(nodes, 0.0);
    for (std::size_t m = 0; m < nodes; ++m) {
      const double lo = std::clamp(w + (static_cast<double>(m) - 0.5) * h, w, extent);
      const double hi = std::clamp(w + (static_cast<double>(m) + 0.5) * h, w, extent);
      first[m] = std::max(0.0, pdf0.cdf(hi) - pdf0.cdf(lo)) / remaining_mass;
    }
  }

  const double now = state.now_s;
  for (int i = o.video + 1; i <= manifest.num_videos(); ++i) {
    double in_horizon = 0.0;
    for (std::size_t m = 0; m < first.size(); ++m) {
      if (static_cast<double>(m) * h < cfg.horizon_s) in_horizon += first[m];
    }
    if (in_horizon < cfg.lookahead_cutoff) break;

    const auto& video = manifest.video(i);
    const auto& pdf = model.pdfs[static_cast<std::size_t>(i - 1)];
    const PlayStartPdf first_pdf{{i, 1}, h, first, 1.0};
    for (int j = 1; j <= video.num_chunks(); ++j) {
      const ChunkId c{i, j};
      if (state.is_secured(c)) continue;
      const auto ps = j == 1 ? first_pdf : play_start_pdf_nonfirst(first_pdf, pdf, j, video.chunk_duration_s);
      auto curve = curve_from_playstart(ps, now);
      out.emplace(c, make_forecast(manifest, c, std::move(curve), ps.total()));
    }
    first = convolve(first, pdf.node_masses());
  }
  return out;
}

bool all_secured_from(const PlayerState& state, const Manifest& manifest, int first_video) {
  for (int i = std::max(1, first_video); i <= manifest.num_videos(); ++i) {
    for (int j = 1; j <= manifest.video(i).num_chunks(); ++j) {
      if (!state.is_secured({i, j})) return false;
    }
  }
  return true;
}

}  // namespace

ForecastMap forecast_chunks(const PlayerState& state, const Manifest& manifest, const SwipeModel& model,
                            const SchedulerConfig& cfg) {
  if (static_cast<int>(model.pmfs.size()) != manifest.num_videos()) {
    throw std::invalid_argument("forecast_chunks: swipe model does not cover the manifest");
  }
  if (cfg.forecast == ForecastMode::Discrete && common_chunk_duration(manifest)) {
    return forecast_discrete(state, manifest, model, cfg);
  }
  return forecast_continuous(state, manifest, model, cfg);
}

std::set<ChunkId> candidate_set(const PlayerState& state, const ForecastMap& forecasts, const SchedulerConfig& cfg) {
  const double horizon_end = state.now_s + cfg.horizon_s;
  std::set<ChunkId> out;
  for (const auto& [c, f] : forecasts) {
    if (state.is_secured(c)) continue;
    const double e = f.curve.eval(horizon_end);
    if (e > 0.0 && e >= cfg.candidate_threshold) out.insert(c);
  }
  std::set<ChunkId> closure = out;
  for (const auto& c : out) {
    for (int j = c.chunk - 1; j >= 1 && !state.is_secured({c.video, j}); --j) closure.insert({c.video, j});
  }
  return closure;
}

double projected_chunk_download_s(ChunkId c, int level, double est_mbps, const Manifest& manifest, double rtt_s) {
  const auto bytes = chunk_bytes(manifest.video(c.video), c.chunk, level, manifest.ladder);
  return rtt_s + static_cast<double>(bytes) * 8.0 / 1e6 / est_mbps;
}

int uniform_feasible_bitrate(const std::set<ChunkId>& candidates, double est_mbps, const Manifest& manifest,
                             const SchedulerConfig& cfg) {
  if (!(est_mbps > 0.0)) throw std::invalid_argument("uniform_feasible_bitrate: estimate must be positive");
  if (candidates.empty()) return 0;
  for (int level = manifest.ladder.top(); level > 0; --level) {
    double seconds = 0.0;
    for (const auto& c : candidates) seconds += projected_chunk_download_s(c, level, est_mbps, manifest, 0.0);
    if (seconds <= cfg.horizon_s * (1.0 + 1e-12)) return level;
  }
  return 0;
}

double greedy_marginal(ChunkId c, double slot_start_s, double delay_s, int level, double est_mbps,
                       const ForecastMap& forecasts, const Manifest& manifest, double rtt_s) {
  auto it = forecasts.find(c);
  if (it == forecasts.end()) return 0.0;
  const double finish = slot_start_s + projected_chunk_download_s(c, level, est_mbps, manifest, rtt_s);
  return it->second.curve.eval(finish + delay_s) - it->second.curve.eval(finish);
}

BufferSequence greedy_order(const std::set<ChunkId>& candidates, const ForecastMap& forecasts, int level,
                            double est_mbps, const PlayerState& state, const Manifest& manifest,
                            const SchedulerConfig& /*cfg*/) {
  BufferSequence seq;
  std::vector<ChunkId> pending(candidates.begin(), candidates.end());
  std::set<ChunkId> placed;
  const double rtt = state.rtt_s;
  double t = state.now_s;

  while (!pending.empty()) {
    double delay = 0.0;
    for (const auto& c : pending) delay += projected_chunk_download_s(c, level, est_mbps, manifest, rtt);
    delay /= static_cast<double>(pending.size());

    std::size_t best_k = pending.size();
    double best = 0.0;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      const auto& c = pending[k];
      const bool eligible = c.chunk == 1 || state.is_secured({c.video, c.chunk - 1}) ||
                            placed.count({c.video, c.chunk - 1}) > 0;
      if (!eligible) continue;
      const double m = greedy_marginal(c, t, delay, level, est_mbps, forecasts, manifest, rtt);
      if (best_k == pending.size() || m > best + 1e-12) {
        best = m;
        best_k = k;
      }
    }
    if (best_k == pending.size()) throw std::logic_error("greedy_order: candidate set not closed under prerequisites");

    const ChunkId c = pending[best_k];
    const double finish = t + projected_chunk_download_s(c, level, est_mbps, manifest, rtt);
    seq.slots.push_back({c, level, t, finish});
    placed.insert(c);
    pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(best_k));
    t = finish;
  }
  return seq;
}

double scheduler_estimate(const PlayerState& state, const Manifest& manifest, const SchedulerConfig& cfg) {
  return ThroughputEstimator::from_history(state.download_history, manifest.ladder.mbps(0), cfg.network_factor,
                                           cfg.robust)
      .estimate();
}

BufferSequence schedule(const PlayerState& state, const Manifest& manifest, const SwipeModel& model,
                        const SchedulerConfig& cfg) {
  const auto forecasts = forecast_chunks(state, manifest, model, cfg);
  const auto candidates = candidate_set(state, forecasts, cfg);
  if (candidates.empty()) return {};
  const double est = scheduler_estimate(state, manifest, cfg);
  const int level = uniform_feasible_bitrate(candidates, est, manifest, cfg);
  const auto order = greedy_order(candidates, forecasts, level, est, state, manifest, cfg);

  AbrOptions options;
  options.mpc_max_chunks = cfg.mpc_max_chunks;
  options.lock_level_per_video = cfg.lock_level_per_video;
  options.rtt_s = state.rtt_s;
  options.start_s = state.now_s;
  options.tail_level = level;
  return select_bitrates(order, est, cfg.weights, forecasts, state, manifest, options);
}

DashletScheduler::DashletScheduler(Manifest manifest, SwipeModel model, SchedulerConfig cfg)
    : manifest_(std::move(manifest)), model_(std::move(model)), cfg_(cfg) {
  validate_manifest(manifest_);
  if (static_cast<int>(model_.pmfs.size()) != manifest_.num_videos() ||
      static_cast<int>(model_.pdfs.size()) != manifest_.num_videos()) {
    throw std::invalid_argument("DashletScheduler: swipe model does not cover the manifest");
  }
  if (!(cfg_.horizon_s > 0.0) || cfg_.candidate_threshold < 0.0) {
    throw std::invalid_argument("DashletScheduler: invalid horizon or threshold");
  }
}

Action DashletScheduler::decide(const PlayerState& state, Trigger) {
  const auto seq = schedule(state, manifest_, model_, cfg_);
  if (seq.empty()) {
    const int from = std::clamp(state.playing.video, 1, manifest_.num_videos());
    return Idle{all_secured_from(state, manifest_, from) ? IdleReason::Exhausted : IdleReason::BufferFull};
  }
  const auto& slot = seq.front();
  const auto& video = manifest_.video(slot.chunk.video);
  DownloadRequest req;
  req.chunk = slot.chunk;
  req.level = slot.level;
  req.bytes = chunk_bytes(video, slot.chunk.chunk, slot.level, manifest_.ladder);
  req.media_start_s = video.chunk_start_s(slot.chunk.chunk);
  req.media_end_s = req.media_start_s + video.chunk_seconds(slot.chunk.chunk);
  req.target_finish_s = slot.finish_s;
  return req;
}

}  // namespace shortvid
