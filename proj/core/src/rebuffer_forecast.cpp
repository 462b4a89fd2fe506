#include "shortvid/rebuffer_forecast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace shortvid {

double chunk_rebuffer_delay(double t_f_s, double t_p_s) { return t_f_s >= t_p_s ? t_f_s - t_p_s : 0.0; }

RebufferCurve RebufferCurve::from_hinges(ChunkId target, std::vector<Hinge> hinges) {
  std::erase_if(hinges, [](const Hinge& h) { return !(h.mass > 0.0); });
  std::sort(hinges.begin(), hinges.end(), [](const Hinge& a, const Hinge& b) { return a.t_s < b.t_s; });

  RebufferCurve curve(target);
  for (const auto& h : hinges) {
    auto& bps = curve.breakpoints_;
    if (!bps.empty() && bps.back().t_s == h.t_s) {
      bps.back().slope_after += h.mass;
      continue;
    }
    Breakpoint bp{h.t_s, 0.0, h.mass};
    if (!bps.empty()) {
      const auto& prev = bps.back();
      bp.value_s = prev.value_s + prev.slope_after * (h.t_s - prev.t_s);
      bp.slope_after = prev.slope_after + h.mass;
    }
    bps.push_back(bp);
  }
  return curve;
}

double RebufferCurve::earliest_play_start_s() const {
  return breakpoints_.empty() ? std::numeric_limits<double>::infinity() : breakpoints_.front().t_s;
}

double RebufferCurve::eval(double t_f_s) const {
  if (breakpoints_.empty() || t_f_s <= breakpoints_.front().t_s) return 0.0;
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t_f_s,
                             [](double t, const Breakpoint& bp) { return t < bp.t_s; });
  const auto& bp = *std::prev(it);
  return bp.value_s + bp.slope_after * (t_f_s - bp.t_s);
}

RebufferCurve curve_from_watchcount(const WatchCountDistribution& dist, double chunk_duration_s, double origin_s) {
  std::vector<RebufferCurve::Hinge> hinges;
  hinges.reserve(dist.mass.size());
  for (std::size_t n = 0; n < dist.mass.size(); ++n) {
    hinges.push_back({origin_s + static_cast<double>(n) * chunk_duration_s, dist.mass[n]});
  }
  return RebufferCurve::from_hinges(dist.target, std::move(hinges));
}

RebufferCurve curve_from_playstart(const PlayStartPdf& pdf, double origin_s) {
  if (!(pdf.grid_step_s > 0.0)) throw std::invalid_argument("curve_from_playstart: empty grid");
  if (pdf.mass.empty() && pdf.reach_probability > 0.0) {
    throw std::invalid_argument("curve_from_playstart: empty grid with nonzero reach");
  }
  std::vector<RebufferCurve::Hinge> hinges;
  hinges.reserve(pdf.mass.size());
  for (std::size_t k = 0; k < pdf.mass.size(); ++k) {
    hinges.push_back({origin_s + static_cast<double>(k) * pdf.grid_step_s, pdf.mass[k]});
  }
  return RebufferCurve::from_hinges(pdf.target, std::move(hinges));
}

double curve_eval(const RebufferCurve& curve, double t_f_s) { return curve.eval(t_f_s); }

int ViewingSequence::chunks_before(ChunkId c) const {
  if (c.video < 1 || c.video > static_cast<int>(watched.size()) + 1) return -1;
  int before = 0;
  for (int l = 1; l < c.video; ++l) before += watched[static_cast<std::size_t>(l - 1)];
  if (c.video <= static_cast<int>(watched.size()) && watched[static_cast<std::size_t>(c.video - 1)] < c.chunk) {
    return -1;
  }
  return before + c.chunk - 1;
}

void enumerate_viewing_sequences(std::span<const SwipePmf> pmfs, int last_video,
                                 const std::function<void(const ViewingSequence&)>& visit, std::uint64_t limit) {
  if (last_video < 0 || last_video > static_cast<int>(pmfs.size())) {
    throw std::invalid_argument("enumerate_viewing_sequences: missing swipe PMF");
  }
  double count = 1.0;
  for (int l = 0; l < last_video; ++l) count *= std::max(1, pmfs[static_cast<std::size_t>(l)].num_chunks());
  if (count > static_cast<double>(limit)) {
    throw std::length_error("enumerate_viewing_sequences: more than " + std::to_string(limit) + " sequences");
  }

  ViewingSequence seq;
  seq.watched.assign(static_cast<std::size_t>(last_video), 0);
  std::function<void(int, double)> rec = [&](int l, double prob) {
    if (l == last_video) {
      seq.probability = prob;
      visit(seq);
      return;
    }
    const auto& pmf = pmfs[static_cast<std::size_t>(l)];
    for (int k = 1; k <= pmf.num_chunks(); ++k) {
      const double p = pmf.at(k);
      if (p == 0.0) continue;
      seq.watched[static_cast<std::size_t>(l)] = k;
      rec(l + 1, prob * p);
    }
  };
  rec(0, 1.0);
}

double brute_force_expected_rebuffer(const Manifest& manifest, std::span<const SwipePmf> pmfs, ChunkId target,
                                     double t_f_s) {
  const double T = manifest.video(target.video).chunk_duration_s;
  double expected = 0.0;
  // The target's own video decides whether chunk j is reached.
  enumerate_viewing_sequences(pmfs, target.video, [&](const ViewingSequence& seq) {
    const int before = seq.chunks_before(target);
    if (before < 0) return;
    expected += seq.probability * chunk_rebuffer_delay(t_f_s, before * T);
  });
  return expected;
}

}  // namespace shortvid
