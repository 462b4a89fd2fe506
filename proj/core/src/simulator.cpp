#include "shortvid/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace shortvid {

std::string to_string(Trigger t) {
  switch (t) {
    case Trigger::SessionStart: return "session_start";
    case Trigger::DownloadComplete: return "download_complete";
    case Trigger::Swipe: return "swipe";
    case Trigger::ChunkBoundary: return "chunk_boundary";
    case Trigger::Deadline: return "deadline";
  }
  return "unknown";
}

std::string to_string(IdleReason r) {
  switch (r) {
    case IdleReason::BufferFull: return "buffer_full";
    case IdleReason::Policy: return "policy";
    case IdleReason::Exhausted: return "exhausted";
  }
  return "unknown";
}

bool Scheduler::ready_to_play(const PlayerState& state) const { return state.is_buffered(state.playing); }

std::vector<double> effective_viewing(const Manifest& manifest, const SwipeTrace& trace, const SimulatorConfig& cfg) {
  std::vector<std::string> errors;
  if (static_cast<int>(trace.size()) > manifest.num_videos()) {
    errors.emplace_back("swipe trace: more entries than manifest videos");
  }
  for (std::size_t k = 0; k < trace.size() && static_cast<int>(k) < manifest.num_videos(); ++k) {
    const auto& e = trace[k];
    const auto& v = manifest.videos[k];
    if (e.video_id != v.id) {
      errors.push_back("swipe trace entry " + std::to_string(k + 1) + ": video id '" + e.video_id +
                       "' does not match playlist video '" + v.id + "'");
    }
    if (!std::isfinite(e.view_time_s) || e.view_time_s < 0.0) {
      errors.push_back("swipe trace entry " + std::to_string(k + 1) + ": invalid view_time_s");
    }
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));

  std::vector<double> out;
  double total = 0.0;
  for (std::size_t k = 0; k < trace.size() && total < cfg.max_view_s; ++k) {
    double v = std::clamp(trace[k].view_time_s, cfg.tick_s, manifest.videos[k].duration_s);
    v = std::min(v, cfg.max_view_s - total);
    if (!(v > 0.0)) break;
    out.push_back(v);
    total += v;
  }
  return out;
}

std::uint64_t SessionLog::downloaded_bytes() const {
  std::uint64_t total = 0;
  for (const auto& r : chunks) total += r.bytes;
  return total;
}

std::uint64_t SessionLog::watched_bytes() const {
  std::uint64_t total = 0;
  for (const auto& r : chunks) {
    if (r.watched) total += r.bytes;
  }
  return total;
}

std::uint64_t SessionLog::wasted_bytes() const {
  std::uint64_t total = 0;
  for (const auto& r : chunks) {
    if (!r.watched) total += r.bytes;
  }
  return total;
}

double SessionLog::idle_s() const {
  double total = 0.0;
  for (const auto& i : idle) total += i.end_s - i.start_s;
  return total;
}

double SessionLog::idle_s(IdleReason reason) const {
  double total = 0.0;
  for (const auto& i : idle) {
    if (i.reason == reason) total += i.end_s - i.start_s;
  }
  return total;
}

std::vector<std::string> conservation_violations(const SessionLog& log) {
  std::vector<std::string> out;
  const double tol = 1e-6 * std::max(1.0, log.session_s);
  double watched = 0.0;
  double rebuffer = 0.0;
  for (const auto& r : log.chunks) {
    watched += r.watch_s;
    rebuffer += r.rebuffer_s;
    if (r.watched != (r.watch_s > 0.0)) out.push_back("watched flag inconsistent for " + to_string(r.chunk));
    if (r.watched && r.play_start_s && *r.play_start_s + 1e-9 < r.download_finish_s) {
      out.push_back("chunk " + to_string(r.chunk) + " plays before its download finishes");
    }
    if (r.watched && !r.play_start_s) out.push_back("watched chunk " + to_string(r.chunk) + " has no play start");
  }
  rebuffer += log.unattributed_stall_s;
  if (std::abs(watched - log.watch_s) > tol) out.emplace_back("per-chunk watch seconds do not sum to session watch");
  if (std::abs(rebuffer - log.stall_s) > tol) out.emplace_back("per-chunk rebuffer does not sum to session stall");
  const double residual = log.session_s - log.watch_s - log.stall_s;
  if (std::abs(residual) > tol) out.push_back("time accounting off by " + std::to_string(residual) + " s");
  if (log.watched_bytes() + log.wasted_bytes() != log.downloaded_bytes()) out.emplace_back("byte accounting broken");

  std::vector<std::pair<double, double>> spans;
  for (const auto& r : log.chunks) spans.emplace_back(r.download_start_s, r.download_finish_s);
  std::sort(spans.begin(), spans.end());
  for (std::size_t k = 1; k < spans.size(); ++k) {
    if (spans[k].first + 1e-9 < spans[k - 1].second) {
      out.emplace_back("download intervals overlap");
      break;
    }
  }
  for (const auto& i : log.idle) {
    if (i.end_s + 1e-12 < i.start_s) out.emplace_back("negative idle interval");
  }
  if (log.idle_s() > log.session_s + tol) out.emplace_back("idle exceeds session length");
  return out;
}

namespace {

constexpr double kEps = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Flight {
  DownloadRequest request;
  double start_s = 0.0;
  double finish_s = 0.0;
  std::optional<double> deadline_s;
};

class Session {
 public:
  Session(Scheduler& scheduler, const Manifest& manifest, const NetworkTrace& trace, std::vector<double> views,
          const SimulatorConfig& cfg)
      : scheduler_(scheduler), manifest_(manifest), trace_(trace), views_(std::move(views)), cfg_(cfg),
        state_(manifest.num_videos()) {
    state_.rtt_s = trace.rtt_s();
    log_.system = scheduler.name();
  }

  SessionLog run() {
    scheduler_.reset();
    if (views_.empty()) return finish();
    bool need_decision = true;
    Trigger trigger = Trigger::SessionStart;

    while (true) {
      check_startup();
      if (need_decision && !flight_) decide(trigger);
      need_decision = false;
      check_startup();

      const bool playing = is_playing();
      if (playing) mark_play_starts();

      const double t_dl = flight_ ? flight_->finish_s : kInf;
      const double t_deadline = flight_ && flight_->deadline_s ? *flight_->deadline_s : kInf;
      double play_target = kInf;
      double t_play = kInf;
      if (playing) {
        play_target = std::min(next_boundary(), view());
        t_play = now_ + (play_target - pos_);
      }
      const double t_next = std::min({t_dl, t_deadline, t_play});
      if (t_next == kInf) {
        throw std::logic_error(scheduler_.name() + ": idle while playback is blocked at t=" + std::to_string(now_));
      }

      const double dt = t_next - now_;
      if (playing) {
        pos_ += dt;
      } else {
        stall_ += dt;
        stall_by_chunk_[covering_chunk()] += dt;
      }
      now_ = t_next;

      if (t_dl == now_) {
        complete_download();
        trigger = Trigger::DownloadComplete;
        need_decision = true;
      }
      if (playing && t_play == now_) {
        pos_ = play_target;
        if (pos_ >= view() - kEps) {
          pos_ = view();
          if (!next_video()) break;
          trigger = Trigger::Swipe;
          need_decision = true;
        } else if (!need_decision) {
          trigger = Trigger::ChunkBoundary;
          need_decision = true;
        }
      }
      if (flight_ && flight_->deadline_s && *flight_->deadline_s == now_) {
        flight_->deadline_s.reset();
        ++log_.deadline_misses;
        sync_state();
        const auto action = scheduler_.decide(state_, Trigger::Deadline);
        record_decision(Trigger::Deadline, action);
      }
    }
    return finish();
  }

 private:
  Scheduler& scheduler_;
  const Manifest& manifest_;
  const NetworkTrace& trace_;
  std::vector<double> views_;
  SimulatorConfig cfg_;

  PlayerState state_;
  SessionLog log_;
  double now_ = 0.0;
  int cur_ = 1;
  double pos_ = 0.0;
  bool started_ = false;
  bool video_started_ = false;
  double stall_ = 0.0;
  std::optional<Flight> flight_;
  std::optional<IdleInterval> idle_;
  std::map<ChunkId, double> stall_by_chunk_;
  std::map<ChunkId, std::size_t> record_index_;

  double view() const { return views_[static_cast<std::size_t>(cur_ - 1)]; }
  const std::vector<BufferedChunk>& buffer(int video) const { return state_.buffers[static_cast<std::size_t>(video - 1)]; }
  double buffered_end(int video) const { return buffer(video).empty() ? 0.0 : buffer(video).back().media_end_s; }

  // Buffered chunks of the current video that end at or before pos.
  int chunks_consumed() const {
    const auto& b = buffer(cur_);
    int k = 0;
    while (k < static_cast<int>(b.size()) && b[static_cast<std::size_t>(k)].media_end_s <= pos_ + kEps) ++k;
    return k;
  }

  ChunkId covering_chunk() const { return {cur_, chunks_consumed() + 1}; }

  bool is_playing() const { return started_ && pos_ < buffered_end(cur_) - kEps && pos_ < view() - kEps; }

  double next_boundary() const {
    for (const auto& c : buffer(cur_)) {
      if (c.media_end_s > pos_ + kEps) return c.media_end_s;
    }
    return buffered_end(cur_);
  }

  void sync_state() {
    state_.now_s = now_;
    const int k = chunks_consumed();
    state_.playing = {cur_, k + 1};
    const double chunk_start = k > 0 ? buffer(cur_)[static_cast<std::size_t>(k - 1)].media_end_s : 0.0;
    state_.offset_s = std::max(0.0, pos_ - chunk_start);
    state_.position_s = pos_;
    state_.watched_in_video_s = pos_;
    state_.started = started_;
    state_.rebuffering = !is_playing();
    state_.stall_s = stall_;
    if (flight_) {
      const auto& r = flight_->request;
      state_.in_flight = InFlightDownload{r.chunk, r.level, r.bytes, r.media_start_s, r.media_end_s,
                                          flight_->start_s, r.target_finish_s};
    } else {
      state_.in_flight.reset();
    }
  }

  void check_startup() {
    if (started_) return;
    sync_state();
    if (scheduler_.ready_to_play(state_)) started_ = true;
  }

  void mark_play_starts() {
    if (!video_started_ && pos_ <= kEps) {
      video_started_ = true;
      log_.videos.push_back({cur_, now_, view()});
    }
    const ChunkId c = covering_chunk();
    if (auto it = record_index_.find(c); it != record_index_.end()) {
      auto& rec = log_.chunks[it->second];
      if (!rec.play_start_s) rec.play_start_s = now_;
    }
  }

  void record_decision(Trigger trigger, const Action& action) {
    if (!cfg_.record_decisions) return;
    DecisionPoint dp{state_, trigger, std::nullopt, -1};
    if (const auto* req = std::get_if<DownloadRequest>(&action)) {
      dp.chosen = req->chunk;
      dp.level = req->level;
    }
    log_.decisions.push_back(std::move(dp));
  }

  void close_idle() {
    if (!idle_) return;
    idle_->end_s = now_;
    log_.idle.push_back(*idle_);
    idle_.reset();
  }

  void decide(Trigger trigger) {
    sync_state();
    const auto action = scheduler_.decide(state_, trigger);
    record_decision(trigger, action);
    if (const auto* idle = std::get_if<Idle>(&action)) {
      if (idle_ && idle_->reason != idle->reason) close_idle();
      if (!idle_) idle_ = IdleInterval{now_, now_, idle->reason};
      return;
    }
    const auto& req = std::get<DownloadRequest>(action);
    validate_request(req);
    close_idle();
    Flight f;
    f.request = req;
    f.start_s = now_;
    f.finish_s = download_time(req.bytes, trace_, now_);
    if (req.target_finish_s && f.finish_s > *req.target_finish_s + kEps && *req.target_finish_s > now_) {
      f.deadline_s = *req.target_finish_s;
    }
    flight_ = f;
  }

  void validate_request(const DownloadRequest& req) const {
    const auto fail = [&](const std::string& why) {
      throw std::logic_error(scheduler_.name() + ": invalid request for " + to_string(req.chunk) + ": " + why);
    };
    if (req.chunk.video < 1 || req.chunk.video > manifest_.num_videos()) fail("video out of range");
    if (req.level < 0 || req.level >= manifest_.ladder.size()) fail("level out of range");
    if (req.bytes == 0) fail("zero bytes");
    const auto& b = buffer(req.chunk.video);
    if (req.chunk.chunk != static_cast<int>(b.size()) + 1) fail("not the next chunk of its video");
    if (std::abs(req.media_start_s - buffered_end(req.chunk.video)) > 1e-6) fail("media range not contiguous");
    if (!(req.media_end_s > req.media_start_s)) fail("empty media range");
    if (req.media_end_s > manifest_.video(req.chunk.video).duration_s + 1e-6) fail("media range past video end");
  }

  void complete_download() {
    const Flight f = *flight_;
    flight_.reset();
    const auto& r = f.request;
    state_.buffers[static_cast<std::size_t>(r.chunk.video - 1)].push_back(
        {r.level, r.bytes, r.media_start_s, r.media_end_s});
    state_.download_history.push_back({r.bytes, f.start_s, f.finish_s});

    ChunkRecord rec;
    rec.chunk = r.chunk;
    rec.level = r.level;
    rec.mbps = manifest_.ladder.mbps(r.level);
    rec.bytes = r.bytes;
    rec.media_start_s = r.media_start_s;
    rec.media_end_s = r.media_end_s;
    rec.download_start_s = f.start_s;
    rec.download_finish_s = f.finish_s;
    record_index_[r.chunk] = log_.chunks.size();
    log_.chunks.push_back(rec);
  }

  // Moves to the next video; false when the viewing list is consumed.
  bool next_video() {
    if (cur_ >= static_cast<int>(views_.size())) return false;
    ++cur_;
    pos_ = 0.0;
    video_started_ = false;
    return true;
  }

  SessionLog finish() {
    close_idle();
    log_.session_s = now_;
    log_.stall_s = stall_;
    double watch = 0.0;
    for (double v : views_) watch += v;
    log_.watch_s = views_.empty() ? 0.0 : watch;

    for (auto& rec : log_.chunks) {
      const int i = rec.chunk.video;
      if (i <= static_cast<int>(views_.size())) {
        const double v = views_[static_cast<std::size_t>(i - 1)];
        rec.watch_s = std::max(0.0, std::min(rec.media_end_s, v) - rec.media_start_s);
      }
      rec.watched = rec.watch_s > 0.0;
      if (!rec.watched) rec.play_start_s.reset();
    }
    for (const auto& [c, s] : stall_by_chunk_) {
      if (auto it = record_index_.find(c); it != record_index_.end()) {
        log_.chunks[it->second].rebuffer_s += s;
      } else {
        log_.unattributed_stall_s += s;
      }
    }
    if (cfg_.check_invariants) {
      const auto violations = conservation_violations(log_);
      if (!violations.empty()) {
        throw std::logic_error(scheduler_.name() + ": session accounting failed: " + violations.front());
      }
    }
    return std::move(log_);
  }
};

}  // namespace

SessionLog run_session(Scheduler& scheduler, const Manifest& manifest, const NetworkTrace& trace,
                       const SwipeTrace& swipes, const SimulatorConfig& cfg) {
  validate_manifest(manifest);
  auto views = effective_viewing(manifest, swipes, cfg);
  Session session(scheduler, manifest, trace, std::move(views), cfg);
  return session.run();
}

}  // namespace shortvid
