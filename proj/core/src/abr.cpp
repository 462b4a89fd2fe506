#include "shortvid/abr.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace shortvid {

// ---------------------------------------------------------------------------
// Throughput estimation

ThroughputEstimator::ThroughputEstimator(double bootstrap_mbps, double factor, bool robust)
    : bootstrap_mbps_(bootstrap_mbps), factor_(factor), robust_(robust) {
  if (!(bootstrap_mbps > 0.0)) throw std::invalid_argument("ThroughputEstimator: bootstrap must be positive");
  if (!(factor > 0.0)) throw std::invalid_argument("ThroughputEstimator: factor must be positive");
}

ThroughputEstimator ThroughputEstimator::from_history(std::span<const DownloadRecord> history,
                                                      double bootstrap_mbps, double factor, bool robust) {
  ThroughputEstimator est(bootstrap_mbps, factor, robust);
  // Robust errors need the predictions that preceded the last window.
  const std::size_t keep = robust ? 2 * kWindow : kWindow;
  const std::size_t from = history.size() > keep ? history.size() - keep : 0;
  for (std::size_t k = from; k < history.size(); ++k) {
    const auto& rec = history[k];
    est.observe(rec.bytes, rec.finish_s - rec.start_s);
  }
  return est;
}

void ThroughputEstimator::observe(std::uint64_t bytes, double seconds) {
  if (!(seconds > 0.0) || bytes == 0) return;
  observe_mbps(static_cast<double>(bytes) * 8.0 / 1e6 / seconds);
}

void ThroughputEstimator::observe_mbps(double mbps) {
  if (!(mbps > 0.0)) return;
  if (!window_mbps_.empty()) {
    const double predicted = harmonic_mean();
    relative_errors_.push_back(std::abs(predicted - mbps) / mbps);
    if (relative_errors_.size() > kWindow) relative_errors_.pop_front();
  }
  window_mbps_.push_back(mbps);
  if (window_mbps_.size() > kWindow) window_mbps_.pop_front();
}

double ThroughputEstimator::harmonic_mean() const {
  if (window_mbps_.empty()) return bootstrap_mbps_;
  double inv = 0.0;
  for (double x : window_mbps_) inv += 1.0 / x;
  return static_cast<double>(window_mbps_.size()) / inv;
}

double ThroughputEstimator::estimate() const {
  if (window_mbps_.empty()) return bootstrap_mbps_;
  double est = harmonic_mean() * factor_;
  if (robust_ && !relative_errors_.empty()) {
    est /= 1.0 + *std::max_element(relative_errors_.begin(), relative_errors_.end());
  }
  return est;
}

double throughput_estimate(const ThroughputEstimator& est) { return est.estimate(); }

// ---------------------------------------------------------------------------
// Bitrate search

namespace {

std::optional<int> predecessor_level(const MpcProblem& problem, std::size_t slot, std::span<const int> prefix) {
  const auto& s = problem.slots[slot];
  if (s.prev_slot >= 0) return prefix[static_cast<std::size_t>(s.prev_slot)];
  return s.prev_level;
}

double slot_term(const MpcProblem& problem, std::size_t slot, int level, std::optional<int> prev_level,
                 double finish_s) {
  const auto& s = problem.slots[slot];
  const double rate = problem.ladder_mbps[static_cast<std::size_t>(level)];
  const double reward = s.reach * rate * s.seconds;
  const double rebuffer = s.curve ? s.curve->eval(finish_s) : 0.0;
  const double smooth = prev_level ? std::abs(rate - problem.ladder_mbps[static_cast<std::size_t>(*prev_level)]) : 0.0;
  return reward - problem.weights.mu * rebuffer - problem.weights.eta * smooth;
}

struct Partial {
  std::vector<int> levels;
  std::vector<double> finish_s;
  double objective = 0.0;

  double last_finish(double start) const { return finish_s.empty() ? start : finish_s.back(); }
};

}  // namespace

std::vector<int> allowed_levels(const MpcProblem& problem, std::size_t slot, std::span<const int> prefix) {
  const auto& s = problem.slots[slot];
  if (s.locked_level) return {*s.locked_level};
  if (problem.lock_level_per_video) {
    if (auto prev = predecessor_level(problem, slot, prefix)) return {*prev};
  }
  std::vector<int> out(problem.ladder_mbps.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<int>(k);
  return out;
}

double projected_download_s(const MpcProblem& problem, std::size_t slot, int level) {
  const auto bytes = problem.slots[slot].bytes_per_level[static_cast<std::size_t>(level)];
  return problem.rtt_s + static_cast<double>(bytes) * 8.0 / 1e6 / problem.est_mbps;
}

std::optional<MpcAssignment> evaluate_assignment(const MpcProblem& problem, std::span<const int> levels) {
  if (levels.size() != problem.slots.size()) {
    throw std::invalid_argument("evaluate_assignment: one level per slot required");
  }
  MpcAssignment out;
  out.levels.assign(levels.begin(), levels.end());
  double t = problem.start_s;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const auto allowed = allowed_levels(problem, k, levels.first(k));
    if (std::find(allowed.begin(), allowed.end(), levels[k]) == allowed.end()) return std::nullopt;
    t = t + projected_download_s(problem, k, levels[k]);
    out.finish_s.push_back(t);
    out.objective += slot_term(problem, k, levels[k], predecessor_level(problem, k, levels.first(k)), t);
  }
  return out;
}

bool better_assignment(const MpcAssignment& a, const MpcAssignment& b) {
  if (a.objective != b.objective) return a.objective > b.objective;
  if (a.last_finish_s() != b.last_finish_s()) return a.last_finish_s() < b.last_finish_s();
  return a.levels < b.levels;
}

MpcAssignment solve_mpc(const MpcProblem& problem) {
  const std::size_t n = problem.slots.size();
  if (n == 0) return {};

  // Slots whose level a later slot still reads, per depth.
  std::vector<std::vector<std::size_t>> open(n + 1);
  for (std::size_t d = 0; d <= n; ++d) {
    for (std::size_t k = d; k < n; ++k) {
      const int p = problem.slots[k].prev_slot;
      if (p >= 0 && static_cast<std::size_t>(p) < d) open[d].push_back(static_cast<std::size_t>(p));
    }
    std::sort(open[d].begin(), open[d].end());
    open[d].erase(std::unique(open[d].begin(), open[d].end()), open[d].end());
  }

  std::vector<Partial> layer{Partial{}};
  for (std::size_t d = 0; d < n; ++d) {
    std::map<std::vector<int>, std::vector<Partial>> groups;
    for (const auto& partial : layer) {
      const double start = partial.last_finish(problem.start_s);
      const auto prev = predecessor_level(problem, d, partial.levels);
      for (int level : allowed_levels(problem, d, partial.levels)) {
        Partial next = partial;
        const double finish = start + projected_download_s(problem, d, level);
        next.levels.push_back(level);
        next.finish_s.push_back(finish);
        next.objective += slot_term(problem, d, level, prev, finish);
        std::vector<int> key;
        key.reserve(open[d + 1].size());
        for (std::size_t p : open[d + 1]) key.push_back(next.levels[p]);
        groups[std::move(key)].push_back(std::move(next));
      }
    }

    layer.clear();
    for (auto& [key, members] : groups) {
      std::sort(members.begin(), members.end(), [&](const Partial& a, const Partial& b) {
        const double fa = a.finish_s.back();
        const double fb = b.finish_s.back();
        if (fa != fb) return fa < fb;
        if (a.objective != b.objective) return a.objective > b.objective;
        return a.levels < b.levels;
      });
      bool have_best = false;
      double best = 0.0;
      for (auto& m : members) {
        if (!have_best || m.objective > best) {
          best = m.objective;
          have_best = true;
          layer.push_back(std::move(m));
        }
      }
    }
  }

  MpcAssignment best;
  bool have = false;
  for (auto& p : layer) {
    MpcAssignment cand{std::move(p.levels), std::move(p.finish_s), p.objective};
    if (!have || better_assignment(cand, best)) {
      best = std::move(cand);
      have = true;
    }
  }
  return best;
}

MpcProblem build_mpc_problem(const BufferSequence& seq, std::size_t count, double est_mbps,
                             const QoeWeights& weights, const ForecastMap& forecasts, const PlayerState& state,
                             const Manifest& manifest, const AbrOptions& options) {
  MpcProblem problem;
  problem.ladder_mbps = manifest.ladder.levels_mbps;
  problem.start_s = options.start_s;
  problem.est_mbps = est_mbps;
  problem.rtt_s = options.rtt_s;
  problem.weights = weights;
  problem.lock_level_per_video = options.lock_level_per_video;

  count = std::min(count, seq.size());
  for (std::size_t k = 0; k < count; ++k) {
    const ChunkId c = seq.slots[k].chunk;
    const auto& video = manifest.video(c.video);
    MpcSlot slot;
    slot.chunk = c;
    slot.seconds = video.chunk_seconds(c.chunk);
    for (int level = 0; level < manifest.ladder.size(); ++level) {
      slot.bytes_per_level.push_back(chunk_bytes(video, c.chunk, level, manifest.ladder));
    }
    if (auto it = forecasts.find(c); it != forecasts.end()) {
      slot.reach = it->second.reach;
      slot.curve = &it->second.curve;
    }
    if (c.chunk > 1) {
      const ChunkId prev{c.video, c.chunk - 1};
      for (std::size_t p = 0; p < k; ++p) {
        if (seq.slots[p].chunk == prev) slot.prev_slot = static_cast<int>(p);
      }
      if (slot.prev_slot < 0) {
        if (const auto* b = state.buffered(prev)) {
          slot.prev_level = b->level;
        } else if (state.is_in_flight(prev)) {
          slot.prev_level = state.in_flight->level;
        }
      }
    }
    problem.slots.push_back(std::move(slot));
  }
  return problem;
}

BufferSequence select_bitrates(const BufferSequence& seq, double est_mbps, const QoeWeights& weights,
                               const ForecastMap& forecasts, const PlayerState& state, const Manifest& manifest,
                               const AbrOptions& options) {
  if (seq.empty()) return seq;
  const std::size_t prefix = std::min(seq.size(), options.mpc_max_chunks);
  const auto problem = build_mpc_problem(seq, prefix, est_mbps, weights, forecasts, state, manifest, options);
  const auto best = solve_mpc(problem);

  BufferSequence out = seq;
  std::map<ChunkId, int> chosen;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    auto& slot = out.slots[k];
    if (k < prefix) {
      slot.level = best.levels[k];
    } else {
      slot.level = options.tail_level;
      if (options.lock_level_per_video && slot.chunk.chunk > 1) {
        const ChunkId prev{slot.chunk.video, slot.chunk.chunk - 1};
        if (auto it = chosen.find(prev); it != chosen.end()) {
          slot.level = it->second;
        } else if (const auto* b = state.buffered(prev)) {
          slot.level = b->level;
        }
      }
    }
    chosen[slot.chunk] = slot.level;
  }

  double t = options.start_s;
  for (auto& slot : out.slots) {
    const auto& video = manifest.video(slot.chunk.video);
    const auto bytes = chunk_bytes(video, slot.chunk.chunk, slot.level, manifest.ladder);
    slot.start_s = t;
    t = t + options.rtt_s + static_cast<double>(bytes) * 8.0 / 1e6 / est_mbps;
    slot.finish_s = t;
  }
  return out;
}

}  // namespace shortvid
