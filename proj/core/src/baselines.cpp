#include "shortvid/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shortvid {

std::string to_string(TikTokPhase p) {
  switch (p) {
    case TikTokPhase::RampingUp: return "ramping_up";
    case TikTokPhase::Maintaining: return "maintaining";
    case TikTokPhase::PrebufferIdling: return "prebuffer_idling";
  }
  return "unknown";
}

TikTokChunking tiktok_chunking(const VideoSpec& video, int level, const BitrateLadder& ladder,
                               std::uint64_t first_chunk_bytes) {
  TikTokChunking out;
  out.duration_s = video.duration_s;
  const std::uint64_t total = video_bytes(video, level, ladder);
  if (total <= first_chunk_bytes) {
    out.first_bytes = total;
    out.first_media_end_s = video.duration_s;
    return out;
  }
  out.first_bytes = first_chunk_bytes;
  out.second_bytes = total - first_chunk_bytes;

  // Media time at which the cumulative byte count reaches the split.
  std::uint64_t before = 0;
  for (int j = 1; j <= video.num_chunks(); ++j) {
    const std::uint64_t b = chunk_bytes(video, j, level, ladder);
    if (before + b >= first_chunk_bytes) {
      const double frac = static_cast<double>(first_chunk_bytes - before) / static_cast<double>(b);
      out.first_media_end_s = video.chunk_start_s(j) + frac * video.chunk_seconds(j);
      break;
    }
    before += b;
  }
  return out;
}

std::vector<double> tiktok_thresholds(const BitrateLadder& ladder, double factor) {
  std::vector<double> out;
  for (int l = 1; l < ladder.size(); ++l) out.push_back(factor * ladder.mbps(l));
  return out;
}

int tiktok_bitrate(double throughput_mbps, const BitrateLadder& ladder, std::span<const double> thresholds) {
  if (static_cast<int>(thresholds.size()) != ladder.size() - 1) {
    throw std::invalid_argument("tiktok_bitrate: need one threshold per level above the lowest");
  }
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw std::invalid_argument("tiktok_bitrate: thresholds must ascend");
  }
  int level = 0;
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    if (thresholds[k] <= throughput_mbps) level = static_cast<int>(k) + 1;
  }
  return level;
}

double recent_throughput(std::span<const DownloadRecord> history, double now_s, double window_s,
                         double fallback_mbps) {
  const double from = now_s - window_s;
  double megabits = 0.0;
  double busy = 0.0;
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    if (it->finish_s <= from) break;
    const double span = it->finish_s - it->start_s;
    const double overlap = std::min(it->finish_s, now_s) - std::max(it->start_s, from);
    if (!(span > 0.0) || !(overlap > 0.0)) continue;
    megabits += static_cast<double>(it->bytes) * 8.0 / 1e6 * overlap / span;
    busy += overlap;
  }
  if (busy > 0.0) return megabits / busy;
  if (!history.empty() && history.back().finish_s > history.back().start_s) return history.back().mbps();
  return fallback_mbps;
}

// ---------------------------------------------------------------------------
// TikTok machine

namespace {

int group_end(const TikTokState& s, const Manifest& manifest) {
  return std::min(manifest.num_videos(), s.group_start + manifest.group_size - 1);
}

void enter(TikTokState& s, TikTokPhase phase, double now) {
  if (s.phase == phase && !s.history.empty()) return;
  s.phase = phase;
  s.history.push_back({now, phase, s.group_start});
}

DownloadRequest request_chunk(TikTokState& s, const PlayerState& state, const Manifest& manifest,
                              const TikTokConfig& cfg, int video, int chunk) {
  auto& locked = s.locked_level[static_cast<std::size_t>(video - 1)];
  if (!locked) {
    const auto thresholds = cfg.thresholds_mbps.empty() ? tiktok_thresholds(manifest.ladder, cfg.threshold_factor)
                                                        : cfg.thresholds_mbps;
    const double tput =
        recent_throughput(state.download_history, state.now_s, cfg.throughput_window_s, manifest.ladder.mbps(0));
    locked = tiktok_bitrate(tput, manifest.ladder, thresholds);
  }
  const auto split = tiktok_chunking(manifest.video(video), *locked, manifest.ladder, cfg.first_chunk_bytes);
  DownloadRequest req;
  req.chunk = {video, chunk};
  req.level = *locked;
  if (chunk == 1) {
    req.bytes = split.first_bytes;
    req.media_start_s = 0.0;
    req.media_end_s = split.first_media_end_s;
  } else {
    req.bytes = split.second_bytes;
    req.media_start_s = split.first_media_end_s;
    req.media_end_s = split.duration_s;
  }
  return req;
}

int chunks_of(const TikTokState& s, const Manifest& manifest, const TikTokConfig& cfg, int video) {
  const auto& locked = s.locked_level[static_cast<std::size_t>(video - 1)];
  return tiktok_chunking(manifest.video(video), locked.value_or(0), manifest.ladder, cfg.first_chunk_bytes)
      .num_chunks();
}

}  // namespace

int tiktok_prebuffered_count(const TikTokState& s, const PlayerState& state, const Manifest& manifest) {
  const int cur = std::clamp(state.playing.video, 1, manifest.num_videos());
  const int from = state.started ? cur + 1 : cur;
  int count = 0;
  for (int k = std::max(from, s.group_start); k <= group_end(s, manifest); ++k) {
    if (state.is_buffered({k, 1})) ++count;
  }
  return count;
}

Action tiktok_step(TikTokState& s, const PlayerState& state, const Manifest& manifest, const TikTokConfig& cfg) {
  const int nv = manifest.num_videos();
  if (static_cast<int>(s.locked_level.size()) != nv) s.locked_level.resize(static_cast<std::size_t>(nv));
  if (s.history.empty()) s.history.push_back({state.now_s, s.phase, s.group_start});
  const int cur = std::clamp(state.playing.video, 1, nv);

  // Nine of ten watched: fetch the next group.
  while (cur >= s.group_start + manifest.group_size - 1 && s.group_start + manifest.group_size <= nv) {
    s.group_start += manifest.group_size;
    s.phase = TikTokPhase::RampingUp;
    s.history.push_back({state.now_s, s.phase, s.group_start});
  }
  if (s.phase == TikTokPhase::RampingUp && state.started) enter(s, TikTokPhase::Maintaining, state.now_s);

  bool all_first = true;
  for (int k = s.group_start; k <= group_end(s, manifest); ++k) all_first = all_first && state.is_buffered({k, 1});
  if (all_first && s.phase != TikTokPhase::PrebufferIdling) enter(s, TikTokPhase::PrebufferIdling, state.now_s);

  if (!state.is_secured({cur, 1})) return request_chunk(s, state, manifest, cfg, cur, 1);
  if (state.started && state.is_buffered({cur, 1}) && chunks_of(s, manifest, cfg, cur) == 2 &&
      !state.is_secured({cur, 2})) {
    return request_chunk(s, state, manifest, cfg, cur, 2);
  }

  if (s.phase == TikTokPhase::PrebufferIdling) return Idle{IdleReason::Policy};
  if (tiktok_prebuffered_count(s, state, manifest) >= cfg.prebuffer_target) return Idle{IdleReason::BufferFull};
  for (int k = std::max(cur + 1, s.group_start); k <= group_end(s, manifest); ++k) {
    if (!state.is_secured({k, 1})) return request_chunk(s, state, manifest, cfg, k, 1);
  }
  return Idle{IdleReason::Exhausted};
}

TikTokScheduler::TikTokScheduler(Manifest manifest, TikTokConfig cfg) : manifest_(std::move(manifest)), cfg_(std::move(cfg)) {
  validate_manifest(manifest_);
  if (!cfg_.thresholds_mbps.empty() && static_cast<int>(cfg_.thresholds_mbps.size()) != manifest_.ladder.size() - 1) {
    throw std::invalid_argument("TikTokScheduler: need one threshold per level above the lowest");
  }
  reset();
}

void TikTokScheduler::reset() {
  state_ = TikTokState{};
  state_.locked_level.resize(static_cast<std::size_t>(manifest_.num_videos()));
}

Action TikTokScheduler::decide(const PlayerState& state, Trigger) { return tiktok_step(state_, state, manifest_, cfg_); }

bool TikTokScheduler::ready_to_play(const PlayerState& state) const {
  const int cur = std::clamp(state.playing.video, 1, manifest_.num_videos());
  const int need = std::min(cfg_.prebuffer_target, manifest_.num_videos() - cur + 1);
  for (int k = cur; k < cur + need; ++k) {
    if (!state.is_buffered({k, 1})) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Oracle

OracleKnowledge make_oracle_knowledge(const Manifest& manifest, const SwipeTrace& swipes, const NetworkTrace& trace,
                                      const SimulatorConfig& sim) {
  return OracleKnowledge{effective_viewing(manifest, swipes, sim), trace};
}

std::vector<ChunkId> oracle_viewing_chunks(const OracleKnowledge& k, const Manifest& manifest) {
  std::vector<ChunkId> out;
  for (std::size_t i = 0; i < k.view_s.size(); ++i) {
    const auto& video = manifest.videos[i];
    for (int j = 1; j <= video.num_chunks() && video.chunk_start_s(j) < k.view_s[i]; ++j) {
      out.push_back({static_cast<int>(i) + 1, j});
    }
  }
  return out;
}

OracleScheduler::OracleScheduler(Manifest manifest, OracleKnowledge knowledge, OracleConfig cfg)
    : manifest_(std::move(manifest)), knowledge_(std::move(knowledge)), cfg_(cfg) {
  validate_manifest(manifest_);
  if (static_cast<int>(knowledge_.view_s.size()) > manifest_.num_videos()) {
    throw std::invalid_argument("OracleScheduler: more views than videos");
  }
  viewing_ = oracle_viewing_chunks(knowledge_, manifest_);
  double before_video = 0.0;
  int video = 1;
  for (const auto& c : viewing_) {
    while (video < c.video) {
      before_video += knowledge_.view_s[static_cast<std::size_t>(video - 1)];
      ++video;
    }
    watch_before_.push_back(before_video + manifest_.video(c.video).chunk_start_s(c.chunk));
  }
}

std::vector<int> OracleScheduler::plan_levels(const PlayerState& state, std::span<const ChunkId> upcoming) const {
  const std::size_t m = upcoming.size();
  if (m == 0) return {};
  const int levels = manifest_.ladder.size();

  // Position in the viewing list of the first upcoming chunk.
  const auto first = std::find(viewing_.begin(), viewing_.end(), upcoming.front());
  if (first == viewing_.end()) throw std::logic_error("oracle: chunk outside the viewing list");
  const auto q0 = static_cast<std::size_t>(first - viewing_.begin());

  double consumed = state.position_s;
  for (int k = 1; k < state.playing.video; ++k) consumed += knowledge_.view_s[static_cast<std::size_t>(k - 1)];
  const double need0 = state.now_s + std::max(0.0, watch_before_[q0] - consumed);

  std::vector<double> watch(m);
  std::vector<std::vector<std::uint64_t>> bytes(m);
  std::vector<std::optional<int>> prev_level(m);
  std::vector<int> prev_slot(m, -1);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& c = upcoming[k];
    const auto& video = manifest_.video(c.video);
    const double v = knowledge_.view_s[static_cast<std::size_t>(c.video - 1)];
    watch[k] = std::min(v, video.chunk_start_s(c.chunk) + video.chunk_seconds(c.chunk)) - video.chunk_start_s(c.chunk);
    for (int l = 0; l < levels; ++l) bytes[k].push_back(chunk_bytes(video, c.chunk, l, manifest_.ladder));
    if (c.chunk > 1) {
      if (k > 0 && upcoming[k - 1] == ChunkId{c.video, c.chunk - 1}) {
        prev_slot[k] = static_cast<int>(k) - 1;
      } else if (const auto* b = state.buffered({c.video, c.chunk - 1})) {
        prev_level[k] = b->level;
      }
    }
  }

  std::vector<int> assign(m, 0);
  std::vector<int> best;
  double best_obj = 0.0;
  double best_finish = 0.0;
  const auto& w = cfg_.weights;
  while (true) {
    double t = state.now_s;
    double need = need0;
    double obj = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double rate = manifest_.ladder.mbps(assign[k]);
      t = download_time(bytes[k][static_cast<std::size_t>(assign[k])], knowledge_.trace, t);
      const double play = std::max(need, t);
      double term = rate * watch[k] - w.mu * (play - need);
      std::optional<int> prev = prev_slot[k] >= 0 ? std::optional<int>(assign[static_cast<std::size_t>(prev_slot[k])])
                                                  : prev_level[k];
      if (prev) term -= w.eta * std::abs(rate - manifest_.ladder.mbps(*prev));
      obj += term;
      need = play + watch[k];
    }
    if (best.empty() || obj > best_obj || (obj == best_obj && t < best_finish)) {
      best = assign;
      best_obj = obj;
      best_finish = t;
    }
    std::size_t k = m;
    while (k > 0) {
      --k;
      if (++assign[k] < levels) break;
      assign[k] = 0;
      if (k == 0) return best;
    }
  }
}

Action OracleScheduler::decide(const PlayerState& state, Trigger) {
  std::vector<ChunkId> upcoming;
  for (const auto& c : viewing_) {
    if (state.is_secured(c)) continue;
    upcoming.push_back(c);
    if (upcoming.size() >= cfg_.horizon_chunks) break;
  }
  if (upcoming.empty()) return Idle{IdleReason::Exhausted};
  const auto levels = plan_levels(state, upcoming);
  const auto& c = upcoming.front();
  const auto& video = manifest_.video(c.video);
  DownloadRequest req;
  req.chunk = c;
  req.level = levels.front();
  req.bytes = chunk_bytes(video, c.chunk, req.level, manifest_.ladder);
  req.media_start_s = video.chunk_start_s(c.chunk);
  req.media_end_s = req.media_start_s + video.chunk_seconds(c.chunk);
  return req;
}

std::vector<PlannedDownload> oracle_schedule(const OracleKnowledge& knowledge, const Manifest& manifest,
                                             const QoeWeights& weights, const SimulatorConfig& sim) {
  SwipeTrace swipes;
  for (std::size_t i = 0; i < knowledge.view_s.size(); ++i) swipes.push_back({manifest.videos[i].id, knowledge.view_s[i]});
  OracleConfig cfg;
  cfg.weights = weights;
  OracleScheduler oracle(manifest, knowledge, cfg);
  const auto log = run_session(oracle, manifest, knowledge.trace, swipes, sim);
  std::vector<PlannedDownload> plan;
  for (const auto& r : log.chunks) plan.push_back({r.chunk, r.level, r.download_start_s, r.download_finish_s});
  return plan;
}

}  // namespace shortvid
