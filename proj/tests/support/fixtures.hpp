#pragma once

#include <string>
#include <vector>

#include "shortvid/domain.hpp"
#include "shortvid/swipe_model.hpp"

namespace shortvid::testing {

inline Manifest make_manifest(const std::vector<double>& durations_s, double chunk_s,
                              std::vector<double> ladder_mbps = {1.0, 2.0, 4.0}, int group_size = 10) {
  Manifest m;
  m.group_size = group_size;
  m.ladder.levels_mbps = std::move(ladder_mbps);
  for (std::size_t k = 0; k < durations_s.size(); ++k) {
    VideoSpec v;
    v.id = "v" + std::to_string(k + 1);
    v.duration_s = durations_s[k];
    v.chunk_duration_s = chunk_s;
    m.videos.push_back(v);
  }
  return m;
}

inline SwipePmf pmf(int video, std::vector<double> mass) { return SwipePmf{video, std::move(mass)}; }

/// Viewer who always watches every chunk.
inline std::vector<SwipePmf> completing_pmfs(const Manifest& m) {
  std::vector<SwipePmf> out;
  for (int i = 1; i <= m.num_videos(); ++i) {
    std::vector<double> mass(static_cast<std::size_t>(m.video(i).num_chunks()), 0.0);
    mass.back() = 1.0;
    out.push_back({i, mass});
  }
  return out;
}

inline SwipePdf uniform_pdf(int video, double extent_s, double step_s) {
  const auto nodes = static_cast<std::size_t>(extent_s / step_s + 0.5) + 1;
  return SwipePdf{video, step_s, std::vector<double>(nodes, 1.0 / extent_s)};
}

}  // namespace shortvid::testing
