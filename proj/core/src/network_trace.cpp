#include "shortvid/network_trace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "shortvid/domain.hpp"

namespace shortvid {

NetworkTrace::NetworkTrace(std::vector<Segment> segments, double rtt_s)
    : segments_(std::move(segments)), rtt_s_(rtt_s) {
  std::vector<std::string> errors;
  if (segments_.empty()) errors.emplace_back("trace: no segments");
  if (!(rtt_s_ >= 0.0)) errors.emplace_back("trace: negative rtt");
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    const auto& s = segments_[k];
    if (!(s.mbps > 0.0) || !std::isfinite(s.mbps)) {
      errors.push_back("trace: non-positive rate at row " + std::to_string(k + 1));
    }
    if (k == 0 && s.start_s != 0.0) errors.emplace_back("trace: first row must start at 0");
    if (k > 0 && !(s.start_s > segments_[k - 1].start_s)) {
      errors.push_back("trace: times not ascending at row " + std::to_string(k + 1));
    }
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));

  const auto n = segments_.size();
  if (n > 1) period_s_ = segments_[n - 1].start_s + (segments_[n - 1].start_s - segments_[n - 2].start_s);
  cumulative_.assign(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double end = k + 1 < n ? segments_[k + 1].start_s : period_s_;
    cumulative_[k + 1] = cumulative_[k] + segments_[k].mbps * (end - segments_[k].start_s);
  }
}

NetworkTrace NetworkTrace::constant(double mbps, double rtt_s) { return NetworkTrace({{0.0, mbps}}, rtt_s); }

std::size_t NetworkTrace::segment_at(double phase_s) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), phase_s,
                             [](double t, const Segment& s) { return t < s.start_s; });
  if (it == segments_.begin()) return 0;
  return static_cast<std::size_t>(std::prev(it) - segments_.begin());
}

double NetworkTrace::rate_at(double t_s) const {
  if (is_constant()) return segments_.front().mbps;
  double phase = std::fmod(t_s, period_s_);
  if (phase < 0.0) phase += period_s_;
  return segments_[segment_at(phase)].mbps;
}

double NetworkTrace::cumulative_megabits(double t_s) const {
  if (is_constant()) return segments_.front().mbps * t_s;
  const double cycles = std::floor(t_s / period_s_);
  const double phase = t_s - cycles * period_s_;
  const std::size_t k = segment_at(phase);
  return cycles * cumulative_.back() + cumulative_[k] + segments_[k].mbps * (phase - segments_[k].start_s);
}

double NetworkTrace::time_at_megabits(double megabits) const {
  if (is_constant()) return megabits / segments_.front().mbps;
  const double per_period = cumulative_.back();
  double cycles = std::floor(megabits / per_period);
  double rem = megabits - cycles * per_period;
  if (rem <= 0.0 && cycles > 0.0) {
    // Exact multiple: the period boundary itself is the answer.
    return cycles * period_s_;
  }
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end() - 1, rem);
  std::size_t k = static_cast<std::size_t>(std::prev(it) - cumulative_.begin());
  k = std::min(k, segments_.size() - 1);
  return cycles * period_s_ + segments_[k].start_s + (rem - cumulative_[k]) / segments_[k].mbps;
}

double NetworkTrace::megabits_between(double from_s, double to_s) const {
  if (!(to_s > from_s)) return 0.0;
  return cumulative_megabits(to_s) - cumulative_megabits(from_s);
}

double NetworkTrace::mean_mbps() const {
  return is_constant() ? segments_.front().mbps : cumulative_.back() / period_s_;
}

NetworkTrace NetworkTrace::scaled(double factor) const {
  auto segs = segments_;
  for (auto& s : segs) s.mbps *= factor;
  return NetworkTrace(std::move(segs), rtt_s_);
}

double download_time(std::uint64_t bytes, const NetworkTrace& trace, double start_s) {
  const double t0 = start_s + trace.rtt_s();
  const double megabits = static_cast<double>(bytes) * 8.0 / 1e6;
  if (trace.is_constant()) return t0 + megabits / trace.segments().front().mbps;
  const double t = trace.time_at_megabits(trace.cumulative_megabits(t0) + megabits);
  return std::max(t, t0);
}

}  // namespace shortvid
