#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace shortvid::testing {

SmallPlaylist random_playlist(std::mt19937_64& rng, int max_videos, int max_chunks, double chunk_s) {
  std::uniform_int_distribution<int> videos(1, max_videos);
  std::uniform_int_distribution<int> chunks(1, max_chunks);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  SmallPlaylist out;
  out.manifest.ladder.levels_mbps = {1.0, 2.0};
  const int n = videos(rng);
  for (int i = 1; i <= n; ++i) {
    const int c = chunks(rng);
    VideoSpec v;
    v.id = "v" + std::to_string(i);
    v.chunk_duration_s = chunk_s;
    v.duration_s = c * chunk_s;
    out.manifest.videos.push_back(v);

    SwipePmf pmf{i, std::vector<double>(static_cast<std::size_t>(c), 0.0)};
    double total = 0.0;
    for (auto& m : pmf.mass) {
      m = u(rng) < 0.2 ? 0.0 : u(rng);
      total += m;
    }
    if (total == 0.0) {
      pmf.mass.back() = 1.0;
      total = 1.0;
    }
    for (auto& m : pmf.mass) m /= total;
    out.pmfs.push_back(std::move(pmf));
  }
  return out;
}

std::vector<double> enumerate_watch_counts(const std::vector<SwipePmf>& pmfs, ChunkId target) {
  const int i = target.video;
  const int j = target.chunk;
  double reach_in_video = 1.0;
  if (j > 1) {
    reach_in_video = 0.0;
    const auto& own = pmfs[static_cast<std::size_t>(i - 1)].mass;
    for (std::size_t k = static_cast<std::size_t>(j - 1); k < own.size(); ++k) reach_in_video += own[k];
  }

  std::vector<double> out;
  std::function<void(int, int, double)> walk = [&](int video, int watched, double prob) {
    if (video == i) {
      const auto n = static_cast<std::size_t>(watched + j - 1);
      if (out.size() <= n) out.resize(n + 1, 0.0);
      out[n] += prob * reach_in_video;
      return;
    }
    const auto& mass = pmfs[static_cast<std::size_t>(video - 1)].mass;
    for (std::size_t k = 0; k < mass.size(); ++k) {
      walk(video + 1, watched + static_cast<int>(k) + 1, prob * mass[k]);
    }
  };
  walk(1, 0, 1.0);
  return out;
}

double enumerate_expected_rebuffer(const std::vector<SwipePmf>& pmfs, ChunkId target, double chunk_s, double t_f) {
  const auto counts = enumerate_watch_counts(pmfs, target);
  double e = 0.0;
  for (std::size_t n = 0; n < counts.size(); ++n) {
    e += counts[n] * std::max(0.0, t_f - static_cast<double>(n) * chunk_s);
  }
  return e;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  double tv = 0.0;
  for (std::size_t k = 0; k < std::max(a.size(), b.size()); ++k) {
    const double x = k < a.size() ? a[k] : 0.0;
    const double y = k < b.size() ? b[k] : 0.0;
    tv += std::abs(x - y);
  }
  return 0.5 * tv;
}

namespace {

std::optional<int> prior_level(const MpcProblem& p, std::size_t k, const std::vector<int>& levels) {
  const auto& s = p.slots[k];
  if (s.prev_slot >= 0) return levels[static_cast<std::size_t>(s.prev_slot)];
  return s.prev_level;
}

bool admissible(const MpcProblem& p, const std::vector<int>& levels) {
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const auto& s = p.slots[k];
    if (s.locked_level && levels[k] != *s.locked_level) return false;
    if (!s.locked_level && p.lock_level_per_video) {
      if (auto prev = prior_level(p, k, levels); prev && *prev != levels[k]) return false;
    }
  }
  return true;
}

}  // namespace

ExhaustiveMpc exhaustive_mpc(const MpcProblem& p) {
  const std::size_t n = p.slots.size();
  const int L = static_cast<int>(p.ladder_mbps.size());
  std::vector<int> levels(n, 0);
  ExhaustiveMpc best;
  bool have = false;
  while (true) {
    if (admissible(p, levels)) {
      double t = p.start_s;
      double obj = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const auto& s = p.slots[k];
        const auto bytes = s.bytes_per_level[static_cast<std::size_t>(levels[k])];
        t = t + (p.rtt_s + static_cast<double>(bytes) * 8.0 / 1e6 / p.est_mbps);
        const double rate = p.ladder_mbps[static_cast<std::size_t>(levels[k])];
        const auto prev = prior_level(p, k, levels);
        const double smooth = prev ? std::abs(rate - p.ladder_mbps[static_cast<std::size_t>(*prev)]) : 0.0;
        obj += s.reach * rate * s.seconds - p.weights.mu * (s.curve ? s.curve->eval(t) : 0.0) - p.weights.eta * smooth;
      }
      const bool better = !have || obj > best.objective ||
                          (obj == best.objective && (t < best.finish_s || (t == best.finish_s && levels < best.levels)));
      if (better) {
        best = {levels, obj, t};
        have = true;
      }
    }
    std::size_t k = n;
    while (k > 0) {
      --k;
      if (++levels[k] < L) break;
      levels[k] = 0;
      if (k == 0) return best;
    }
    if (n == 0) return best;
  }
}

ScriptedScheduler::ScriptedScheduler(Manifest manifest, std::vector<Step> plan)
    : manifest_(std::move(manifest)), plan_(std::move(plan)) {}

Action ScriptedScheduler::decide(const PlayerState& state, Trigger) {
  while (next_ < plan_.size() && state.is_secured(plan_[next_].chunk)) ++next_;
  if (next_ >= plan_.size()) return Idle{IdleReason::Exhausted};
  const auto& step = plan_[next_];
  const auto& video = manifest_.video(step.chunk.video);
  DownloadRequest r;
  r.chunk = step.chunk;
  r.level = step.level;
  r.bytes = chunk_bytes(video, step.chunk.chunk, step.level, manifest_.ladder);
  r.media_start_s = video.chunk_start_s(step.chunk.chunk);
  r.media_end_s = r.media_start_s + video.chunk_seconds(step.chunk.chunk);
  return r;
}

BruteForceBest brute_force_best_plan(const Manifest& manifest, const NetworkTrace& trace, const SwipeTrace& swipes,
                                     const QoeWeights& weights, const SimulatorConfig& sim) {
  const auto views = effective_viewing(manifest, swipes, sim);
  std::vector<int> watched_per_video;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& v = manifest.videos[i];
    int count = 0;
    for (int j = 1; j <= v.num_chunks(); ++j) {
      if (v.chunk_start_s(j) < views[i]) count = j;
    }
    watched_per_video.push_back(count);
  }

  std::vector<std::vector<ChunkId>> orders;
  std::vector<int> next(watched_per_video.size(), 1);
  std::vector<ChunkId> current;
  std::function<void()> interleave = [&] {
    bool any = false;
    for (std::size_t i = 0; i < next.size(); ++i) {
      if (next[i] > watched_per_video[i]) continue;
      any = true;
      current.push_back({static_cast<int>(i) + 1, next[i]});
      ++next[i];
      interleave();
      --next[i];
      current.pop_back();
    }
    if (!any) orders.push_back(current);
  };
  interleave();

  BruteForceBest best;
  best.qoe = -std::numeric_limits<double>::infinity();
  const int L = manifest.ladder.size();
  for (const auto& order : orders) {
    std::vector<int> levels(order.size(), 0);
    while (true) {
      std::vector<ScriptedScheduler::Step> plan;
      for (std::size_t k = 0; k < order.size(); ++k) plan.push_back({order[k], levels[k]});
      ScriptedScheduler s(manifest, plan);
      const double q = score(run_session(s, manifest, trace, swipes, sim), weights).qoe;
      if (q > best.qoe) best = {plan, q};
      std::size_t k = levels.size();
      bool done = true;
      while (k > 0) {
        --k;
        if (++levels[k] < L) {
          done = false;
          break;
        }
        levels[k] = 0;
      }
      if (done) break;
    }
  }
  return best;
}

}  // namespace shortvid::testing
