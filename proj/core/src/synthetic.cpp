#include "shortvid/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shortvid {

double SyntheticRng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double SyntheticRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

int SyntheticRng::uniform_int(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(engine_() % span);
}

std::string to_string(SwipeMode m) {
  switch (m) {
    case SwipeMode::Early: return "early";
    case SwipeMode::Late: return "late";
    case SwipeMode::Bimodal: return "bimodal";
  }
  return "unknown";
}

SwipeMode swipe_mode_from_string(const std::string& s) {
  if (s == "early") return SwipeMode::Early;
  if (s == "late") return SwipeMode::Late;
  if (s == "bimodal") return SwipeMode::Bimodal;
  throw std::invalid_argument("unknown swipe mode '" + s + "'");
}

namespace {

double early_cdf(const SwipeProfile& p, double t) {
  const double rate = 1.0 / p.early_mean_s;
  t = std::clamp(t, 0.0, p.duration_s);
  return -std::expm1(-rate * t) / -std::expm1(-rate * p.duration_s);
}

double late_start(const SwipeProfile& p) { return 0.8 * p.duration_s; }

double late_cdf(const SwipeProfile& p, double t) {
  return std::clamp((t - late_start(p)) / (p.duration_s - late_start(p)), 0.0, 1.0);
}

}  // namespace

SwipeProfile SwipeProfile::random(SwipeMode mode, double duration_s, SyntheticRng& rng) {
  SwipeProfile p;
  p.mode = mode;
  p.duration_s = duration_s;
  p.early_mean_s = rng.uniform(2.0, 5.0);
  switch (mode) {
    case SwipeMode::Early:
      p.w_complete = rng.uniform(0.05, 0.12);
      p.w_late = rng.uniform(0.03, 0.08);
      p.w_early = 1.0 - p.w_complete - p.w_late;
      break;
    case SwipeMode::Late:
      p.w_complete = rng.uniform(0.6, 0.75);
      p.w_late = rng.uniform(0.1, 0.2);
      p.w_early = 1.0 - p.w_complete - p.w_late;
      break;
    case SwipeMode::Bimodal:
      p.w_early = rng.uniform(0.35, 0.5);
      p.w_complete = rng.uniform(0.3, 0.4);
      p.w_late = 1.0 - p.w_early - p.w_complete;
      break;
  }
  return p;
}

SwipePdf SwipeProfile::pdf(double grid_step_s) const {
  const long nodes = std::max(1L, std::lround(duration_s / grid_step_s));
  SwipePdf out{1, grid_step_s, std::vector<double>(static_cast<std::size_t>(nodes + 1), 0.0)};
  const double rate = 1.0 / early_mean_s;
  const double early_norm = -std::expm1(-rate * duration_s);
  const double late_density = 1.0 / (duration_s - late_start(*this));
  for (long k = 0; k <= nodes; ++k) {
    const double t = static_cast<double>(k) * grid_step_s;
    double d = w_early * rate * std::exp(-rate * t) / early_norm;
    if (t >= late_start(*this) - 1e-9) d += w_late * late_density;
    out.density[static_cast<std::size_t>(k)] = d;
  }
  out.density.back() += 2.0 * w_complete / grid_step_s;
  const double z = out.integral();
  for (double& d : out.density) d /= z;
  return out;
}

SwipePmf SwipeProfile::pmf(const VideoSpec& video) const {
  const int n = video.num_chunks();
  SwipePmf out{1, std::vector<double>(static_cast<std::size_t>(n), 0.0)};
  for (int j = 1; j <= n; ++j) {
    const double a = video.chunk_start_s(j);
    const double b = j == n ? duration_s : a + video.chunk_seconds(j);
    double m = w_early * (early_cdf(*this, b) - early_cdf(*this, a)) + w_late * (late_cdf(*this, b) - late_cdf(*this, a));
    if (j == n) m += w_complete;
    out.mass[static_cast<std::size_t>(j - 1)] = std::max(0.0, m);
  }
  const double z = out.total();
  for (double& m : out.mass) m /= z;
  return out;
}

double SwipeProfile::sample(SyntheticRng& rng) const {
  const double u = rng.uniform01();
  const double v = rng.uniform01();
  if (u < w_early) {
    const double rate = 1.0 / early_mean_s;
    return std::min(duration_s, -std::log1p(v * std::expm1(-rate * duration_s)) / rate);
  }
  if (u < w_early + w_late) return late_start(*this) + v * (duration_s - late_start(*this));
  return duration_s;
}

Manifest synthetic_manifest(const SyntheticParams& params, SyntheticRng& rng) {
  Manifest m;
  m.group_size = params.group_size;
  m.ladder.levels_mbps = params.ladder_mbps;
  m.ladder.labels = params.ladder_labels;
  for (int i = 1; i <= params.num_videos; ++i) {
    VideoSpec v;
    v.id = "v" + std::to_string(i);
    v.duration_s = std::round(rng.uniform(params.min_duration_s, params.max_duration_s) * 10.0) / 10.0;
    v.chunk_duration_s = params.chunk_duration_s;
    m.videos.push_back(std::move(v));
  }
  validate_manifest(m);
  return m;
}

std::vector<SwipeProfile> synthetic_profiles(const Manifest& manifest, const SyntheticParams& params,
                                             SyntheticRng& rng) {
  std::vector<SwipeProfile> out;
  for (const auto& v : manifest.videos) {
    const double u = rng.uniform01();
    const SwipeMode mode = u < params.frac_early                     ? SwipeMode::Early
                           : u < params.frac_early + params.frac_late ? SwipeMode::Late
                                                                      : SwipeMode::Bimodal;
    out.push_back(SwipeProfile::random(mode, v.duration_s, rng));
  }
  return out;
}

SwipeTrace sample_swipe_trace(const Manifest& manifest, const std::vector<SwipeProfile>& profiles, SyntheticRng& rng) {
  SwipeTrace out;
  for (std::size_t k = 0; k < manifest.videos.size(); ++k) {
    out.push_back({manifest.videos[k].id, profiles[k].sample(rng)});
  }
  return out;
}

NetworkTrace constant_trace(double mbps, double rtt_s) { return NetworkTrace::constant(mbps, rtt_s); }

NetworkTrace step_trace(const std::vector<double>& levels_mbps, double step_s, double duration_s, double rtt_s) {
  if (levels_mbps.empty() || !(step_s > 0.0)) throw std::invalid_argument("step_trace: need levels and a step");
  std::vector<NetworkTrace::Segment> segs;
  const auto rows = static_cast<std::size_t>(std::max(1.0, std::ceil(duration_s / step_s)));
  for (std::size_t k = 0; k < std::max<std::size_t>(rows, 2); ++k) {
    segs.push_back({static_cast<double>(k) * step_s, levels_mbps[k % levels_mbps.size()]});
  }
  return NetworkTrace(std::move(segs), rtt_s);
}

NetworkTrace random_walk_trace(double lo_mbps, double hi_mbps, double step_s, double duration_s, SyntheticRng& rng,
                               double max_delta_mbps, double rtt_s) {
  if (!(lo_mbps > 0.0) || hi_mbps < lo_mbps) throw std::invalid_argument("random_walk_trace: bad range");
  std::vector<NetworkTrace::Segment> segs;
  const auto rows = static_cast<std::size_t>(std::max(2.0, std::ceil(duration_s / step_s)));
  double rate = rng.uniform(lo_mbps, hi_mbps);
  for (std::size_t k = 0; k < rows; ++k) {
    segs.push_back({static_cast<double>(k) * step_s, rate});
    rate = std::clamp(rate + rng.uniform(-max_delta_mbps, max_delta_mbps), lo_mbps, hi_mbps);
  }
  return NetworkTrace(std::move(segs), rtt_s);
}

Workload make_workload(const WorkloadParams& params) {
  SyntheticRng rng(params.seed);
  Workload w;
  w.manifest = synthetic_manifest(params.synthetic, rng);
  w.profiles = synthetic_profiles(w.manifest, params.synthetic, rng);
  for (int s = 0; s < params.sessions; ++s) {
    w.traces.push_back(random_walk_trace(params.trace_lo_mbps, params.trace_hi_mbps, 1.0, params.trace_duration_s, rng));
    w.swipes.push_back(sample_swipe_trace(w.manifest, w.profiles, rng));
  }
  return w;
}

Manifest with_chunk_duration(const Manifest& manifest, double chunk_duration_s) {
  Manifest out = manifest;
  for (auto& v : out.videos) {
    v.chunk_duration_s = chunk_duration_s;
    v.bytes_override.clear();
  }
  return out;
}

std::vector<SwipePmf> profile_pmfs(const Manifest& manifest, const std::vector<SwipeProfile>& profiles) {
  if (profiles.size() != manifest.videos.size()) throw std::invalid_argument("profile_pmfs: one profile per video");
  std::vector<SwipePmf> out;
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    out.push_back(profiles[k].pmf(manifest.videos[k]));
    out.back().video_index = static_cast<int>(k) + 1;
  }
  return out;
}

}  // namespace shortvid
