#include "shortvid/swipe_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace shortvid {

namespace {

constexpr double kMaxRateTimesDuration = 600.0;

bool same_step(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

// Grid index of time t, or -1 when t is not on the grid.
long grid_index(double t, double step) {
  const double k = t / step;
  const double r = std::round(k);
  if (std::abs(k - r) > 1e-6) return -1;
  return static_cast<long>(r);
}

}  // namespace

// ---------------------------------------------------------------------------
// SwipePmf

double SwipePmf::at(int j) const {
  if (j < 1 || j > num_chunks()) return 0.0;
  return mass[static_cast<std::size_t>(j - 1)];
}

double SwipePmf::survival(int j) const {
  double s = 0.0;
  for (int m = std::max(j, 1); m <= num_chunks(); ++m) s += at(m);
  return s;
}

double SwipePmf::total() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }

std::vector<double> SwipePmf::by_count() const {
  std::vector<double> out(mass.size() + 1, 0.0);
  std::copy(mass.begin(), mass.end(), out.begin() + 1);
  return out;
}

// ---------------------------------------------------------------------------
// SwipePdf

double SwipePdf::extent_s() const {
  return density.empty() ? 0.0 : grid_step_s * static_cast<double>(density.size() - 1);
}

double SwipePdf::integral() const { return cdf(extent_s()); }

double SwipePdf::cdf(double t) const {
  if (density.size() < 2 || t <= 0.0) return 0.0;
  const double h = grid_step_s;
  t = std::min(t, extent_s());
  const auto cells = density.size() - 1;
  auto k = static_cast<std::size_t>(std::floor(t / h));
  if (k >= cells) k = cells;
  double acc = 0.0;
  for (std::size_t c = 0; c < k; ++c) acc += 0.5 * h * (density[c] + density[c + 1]);
  if (k < cells) {
    const double s = t - static_cast<double>(k) * h;
    const double dt = density[k] + (density[k + 1] - density[k]) * s / h;
    acc += 0.5 * s * (density[k] + dt);
  }
  return acc;
}

double SwipePdf::mean() const {
  if (density.size() < 2) return 0.0;
  const double h = grid_step_s;
  double moment = 0.0;
  for (std::size_t c = 0; c + 1 < density.size(); ++c) {
    const double a = static_cast<double>(c) * h;
    const double d0 = density[c];
    const double d1 = density[c + 1];
    moment += a * h * (d0 + d1) / 2.0 + h * h * (d0 + 2.0 * d1) / 6.0;
  }
  const double z = integral();
  return z > 0.0 ? moment / z : 0.0;
}

std::vector<double> SwipePdf::node_masses() const {
  std::vector<double> out(density.size(), 0.0);
  if (density.empty()) return out;
  if (density.size() == 1) {
    out[0] = 1.0;
    return out;
  }
  for (std::size_t k = 0; k < density.size(); ++k) {
    const bool endpoint = k == 0 || k + 1 == density.size();
    out[k] = grid_step_s * density[k] * (endpoint ? 0.5 : 1.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distributions

double WatchCountDistribution::total() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }

double WatchCountDistribution::at(int n) const {
  if (n < 0 || n >= static_cast<int>(mass.size())) return 0.0;
  return mass[static_cast<std::size_t>(n)];
}

double PlayStartPdf::total() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }

SwipePmf pmf_from_samples(std::span<const double> swipe_times_s, const VideoSpec& video, int video_index) {
  if (swipe_times_s.empty()) throw std::invalid_argument("pmf_from_samples: no swipe samples for " + video.id);
  const int n = video.num_chunks();
  SwipePmf pmf{video_index, std::vector<double>(static_cast<std::size_t>(n), 0.0)};
  for (double t : swipe_times_s) {
    if (t < -1e-9 || t > video.duration_s + 1e-9) {
      throw std::out_of_range("pmf_from_samples: sample " + std::to_string(t) + " outside video " + video.id);
    }
    int j = static_cast<int>(std::ceil(t / video.chunk_duration_s - 1e-9));
    j = std::clamp(j, 1, n);
    pmf.mass[static_cast<std::size_t>(j - 1)] += 1.0;
  }
  for (double& m : pmf.mass) m /= static_cast<double>(swipe_times_s.size());
  return pmf;
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t k = 0; k < b.size(); ++k) out[i + k] += a[i] * b[k];
  }
  return out;
}

WatchCountDistribution first_chunk_dist(int i, std::span<const SwipePmf> pmfs) {
  if (i < 1) throw std::invalid_argument("first_chunk_dist: video index must be >= 1");
  if (static_cast<int>(pmfs.size()) < i - 1) {
    throw std::invalid_argument("first_chunk_dist: missing swipe PMF for video " +
                                std::to_string(pmfs.size() + 1));
  }
  WatchCountDistribution out{{i, 1}, {1.0}};
  for (int l = 1; l < i; ++l) {
    const auto counts = pmfs[static_cast<std::size_t>(l - 1)].by_count();
    out.mass = convolve(out.mass, counts);
  }
  return out;
}

WatchCountDistribution nonfirst_chunk_dist(const WatchCountDistribution& first, const SwipePmf& pmf_i, int j) {
  if (j < 2) throw std::invalid_argument("nonfirst_chunk_dist: j must be >= 2; use first_chunk_dist for j = 1");
  double before = 0.0;
  for (int m = 1; m < j; ++m) before += pmf_i.at(m);
  const double survival = std::max(0.0, 1.0 - before);
  WatchCountDistribution out{{first.target.video, j}, {}};
  if (survival == 0.0) return out;
  out.mass.assign(first.mass.size() + static_cast<std::size_t>(j - 1), 0.0);
  for (std::size_t n = 0; n < first.mass.size(); ++n) {
    out.mass[n + static_cast<std::size_t>(j - 1)] = first.mass[n] * survival;
  }
  return out;
}

PlayStartPdf play_start_pdf_first(int i, std::span<const SwipePdf> pdfs) {
  if (i < 1) throw std::invalid_argument("play_start_pdf_first: video index must be >= 1");
  if (static_cast<int>(pdfs.size()) < i - 1) {
    throw std::invalid_argument("play_start_pdf_first: missing swipe density for video " +
                                std::to_string(pdfs.size() + 1));
  }
  const double step = pdfs.empty() ? 0.1 : pdfs[0].grid_step_s;
  PlayStartPdf out{{i, 1}, step, {1.0}, 1.0};
  for (int l = 1; l < i; ++l) {
    const auto& pdf = pdfs[static_cast<std::size_t>(l - 1)];
    if (!same_step(pdf.grid_step_s, step)) {
      throw std::invalid_argument("play_start_pdf_first: mismatched grid steps");
    }
    const auto masses = pdf.node_masses();
    out.mass = convolve(out.mass, masses);
  }
  return out;
}

PlayStartPdf play_start_pdf_nonfirst(const PlayStartPdf& first, const SwipePdf& pdf_i, int j,
                                     double chunk_duration_s) {
  if (j < 2) throw std::invalid_argument("play_start_pdf_nonfirst: j must be >= 2");
  if (!same_step(first.grid_step_s, pdf_i.grid_step_s)) {
    throw std::invalid_argument("play_start_pdf_nonfirst: mismatched grid steps");
  }
  const double shift_s = (j - 1) * chunk_duration_s;
  if (shift_s > pdf_i.extent_s() + 1e-9) {
    throw std::invalid_argument("play_start_pdf_nonfirst: chunk start beyond video duration");
  }
  const long shift = grid_index(shift_s, first.grid_step_s);
  if (shift < 0) throw std::invalid_argument("play_start_pdf_nonfirst: chunk duration is not on the grid");

  const double z = pdf_i.integral();
  const double survival = z > 0.0 ? std::max(0.0, 1.0 - pdf_i.cdf(shift_s) / z) : 0.0;
  PlayStartPdf out{{first.target.video, j}, first.grid_step_s, {}, first.reach_probability * survival};
  if (survival == 0.0) {
    out.reach_probability = 0.0;
    return out;
  }
  out.mass.assign(first.mass.size() + static_cast<std::size_t>(shift), 0.0);
  for (std::size_t k = 0; k < first.mass.size(); ++k) {
    out.mass[k + static_cast<std::size_t>(shift)] = first.mass[k] * survival;
  }
  return out;
}

SwipePmf pmf_from_pdf(const SwipePdf& pdf, const VideoSpec& video) {
  const int n = video.num_chunks();
  SwipePmf out{pdf.video_index, std::vector<double>(static_cast<std::size_t>(n), 0.0)};
  const double z = pdf.integral();
  if (!(z > 0.0)) throw std::invalid_argument("pmf_from_pdf: density for " + video.id + " has no mass");
  double prev = 0.0;
  for (int j = 1; j <= n; ++j) {
    const double edge = j == n ? pdf.extent_s() : std::min(j * video.chunk_duration_s, pdf.extent_s());
    const double c = pdf.cdf(edge);
    out.mass[static_cast<std::size_t>(j - 1)] = std::max(0.0, c - prev) / z;
    prev = c;
  }
  return out;
}

SwipePdf pdf_from_pmf(const SwipePmf& pmf, const VideoSpec& video, double grid_step_s) {
  const int n = video.num_chunks();
  if (pmf.num_chunks() != n) throw std::invalid_argument("pdf_from_pmf: PMF length does not match " + video.id);
  const long nodes = std::max(1L, std::lround(video.duration_s / grid_step_s));
  auto chunk_density = [&](int j) { return pmf.at(j) / video.chunk_seconds(j); };
  SwipePdf out{pmf.video_index, grid_step_s, std::vector<double>(static_cast<std::size_t>(nodes + 1), 0.0)};
  const double T = video.chunk_duration_s;
  for (long k = 0; k <= nodes; ++k) {
    const double t = static_cast<double>(k) * grid_step_s;
    const double pos = t / T;
    const double r = std::round(pos);
    const bool boundary = std::abs(pos - r) < 1e-9 && r >= 1 && r < n;
    if (boundary) {
      const int j = static_cast<int>(r);
      out.density[static_cast<std::size_t>(k)] = 0.5 * (chunk_density(j) + chunk_density(j + 1));
    } else {
      const int j = std::clamp(static_cast<int>(std::floor(pos + 1e-12)) + 1, 1, n);
      out.density[static_cast<std::size_t>(k)] = chunk_density(j);
    }
  }
  const double z = out.integral();
  if (z > 0.0) {
    for (double& d : out.density) d /= z;
  }
  return out;
}

double pmf_mean_view_s(const SwipePmf& pmf, const VideoSpec& video) {
  double mean = 0.0;
  double total = 0.0;
  for (int j = 1; j <= pmf.num_chunks(); ++j) {
    const double mid = video.chunk_start_s(j) + 0.5 * video.chunk_seconds(j);
    mean += pmf.at(j) * mid;
    total += pmf.at(j);
  }
  return total > 0.0 ? mean / total : 0.0;
}

double truncated_exponential_mean(double rate, double duration_s) {
  if (std::isinf(duration_s)) {
    return rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
  }
  const double x = rate * duration_s;
  if (std::abs(x) < 1e-6) return duration_s / 2.0 - rate * duration_s * duration_s / 12.0;
  return 1.0 / rate - duration_s / std::expm1(x);
}

double truncated_exponential_cdf(double rate, double duration_s, double t) {
  t = std::clamp(t, 0.0, duration_s);
  if (std::abs(rate * duration_s) < 1e-9) return t / duration_s;
  return std::expm1(-rate * t) / std::expm1(-rate * duration_s);
}

double fit_exponential_rate(double mean_s, double duration_s) {
  if (!(mean_s > 0.0)) throw std::invalid_argument("fit_exponential_rate: mean must be positive");
  if (std::isinf(duration_s)) return 1.0 / mean_s;
  double lo = -kMaxRateTimesDuration;  // rate * duration; mean decreases as this grows
  double hi = kMaxRateTimesDuration;
  if (mean_s >= truncated_exponential_mean(lo / duration_s, duration_s)) return lo / duration_s;
  if (mean_s <= truncated_exponential_mean(hi / duration_s, duration_s)) return hi / duration_s;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (truncated_exponential_mean(mid / duration_s, duration_s) > mean_s) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi) / duration_s;
}

SwipePmf perturb_exponential(const SwipePmf& pmf, double factor, const VideoSpec& video) {
  if (!(factor > 0.0)) throw std::invalid_argument("perturb_exponential: factor must be positive");
  if (!(pmf.total() > 0.0)) throw std::invalid_argument("perturb_exponential: degenerate PMF");
  const double mean = pmf_mean_view_s(pmf, video);
  if (!(mean > 0.0)) throw std::invalid_argument("perturb_exponential: degenerate PMF (zero mean)");
  const double duration = video.duration_s;
  const double rate = fit_exponential_rate(factor * mean, duration);
  SwipePmf out{pmf.video_index, std::vector<double>(pmf.mass.size(), 0.0)};
  double prev = 0.0;
  const int n = pmf.num_chunks();
  for (int j = 1; j <= n; ++j) {
    const double edge = j == n ? duration : std::min(j * video.chunk_duration_s, duration);
    const double c = truncated_exponential_cdf(rate, duration, edge);
    out.mass[static_cast<std::size_t>(j - 1)] = std::max(0.0, c - prev);
    prev = c;
  }
  return out;
}

SwipePdf perturb_exponential(const SwipePdf& pdf, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("perturb_exponential: factor must be positive");
  const double mean = pdf.mean();
  if (!(mean > 0.0)) throw std::invalid_argument("perturb_exponential: degenerate density (zero mean)");
  const double duration = pdf.extent_s();
  const double rate = fit_exponential_rate(factor * mean, duration);
  const double anchor = rate > 0.0 ? 0.0 : duration;
  SwipePdf out{pdf.video_index, pdf.grid_step_s, std::vector<double>(pdf.density.size(), 0.0)};
  for (std::size_t k = 0; k < out.density.size(); ++k) {
    const double t = static_cast<double>(k) * pdf.grid_step_s;
    out.density[k] = std::exp(-rate * (t - anchor));
  }
  const double z = out.integral();
  for (double& d : out.density) d /= z;
  return out;
}

}  // namespace shortvid
