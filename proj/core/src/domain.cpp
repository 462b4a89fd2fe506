#include "shortvid/domain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace shortvid {

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += "; ";
    out += s;
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

double BitrateLadder::mbps(int level) const {
  if (level < 0 || level >= size()) {
    throw std::out_of_range("ladder level " + std::to_string(level) + " out of range");
  }
  return levels_mbps[static_cast<std::size_t>(level)];
}

int VideoSpec::num_chunks() const {
  if (duration_s <= 0.0 || chunk_duration_s <= 0.0) return 0;
  const double ratio = duration_s / chunk_duration_s;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) < 1e-9) return std::max(1, static_cast<int>(nearest));
  return static_cast<int>(std::ceil(ratio));
}

double VideoSpec::chunk_seconds(int j) const {
  const int n = num_chunks();
  if (j < 1 || j > n) {
    throw std::out_of_range("chunk " + std::to_string(j) + " out of range for video " + id);
  }
  if (j < n) return chunk_duration_s;
  return duration_s - (n - 1) * chunk_duration_s;
}

const VideoSpec& Manifest::video(int i) const {
  if (i < 1 || i > num_videos()) {
    throw std::out_of_range("video " + std::to_string(i) + " out of range");
  }
  return videos[static_cast<std::size_t>(i - 1)];
}

std::string to_string(const ChunkId& id) {
  std::ostringstream os;
  os << "c(" << id.video << "," << id.chunk << ")";
  return os.str();
}

std::uint64_t chunk_bytes(const VideoSpec& video, int j, int level, const BitrateLadder& ladder) {
  const double seconds = video.chunk_seconds(j);
  const double rate = ladder.mbps(level);
  if (auto it = video.bytes_override.find({j, level}); it != video.bytes_override.end()) {
    return it->second;
  }
  const auto bytes = static_cast<std::uint64_t>(std::llround(rate * 1e6 * seconds / 8.0));
  return std::max<std::uint64_t>(bytes, 1);
}

std::uint64_t video_bytes(const VideoSpec& video, int level, const BitrateLadder& ladder) {
  std::uint64_t total = 0;
  for (int j = 1; j <= video.num_chunks(); ++j) total += chunk_bytes(video, j, level, ladder);
  return total;
}

std::vector<std::string> manifest_violations(const Manifest& m) {
  std::vector<std::string> out;
  if (m.videos.empty()) out.emplace_back("manifest: empty playlist");
  if (m.group_size < 1) out.emplace_back("manifest: group_size must be >= 1");

  const auto& ladder = m.ladder.levels_mbps;
  if (ladder.empty()) out.emplace_back("ladder: empty");
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    if (!(ladder[k] > 0.0)) out.emplace_back("ladder: non-positive bitrate at level " + std::to_string(k));
    if (k > 0 && !(ladder[k] > ladder[k - 1])) {
      out.emplace_back("ladder: ladder not ascending at level " + std::to_string(k));
    }
  }
  if (!m.ladder.labels.empty() && m.ladder.labels.size() != ladder.size()) {
    out.emplace_back("ladder: labels count does not match levels");
  }

  for (std::size_t i = 0; i < m.videos.size(); ++i) {
    const auto& v = m.videos[i];
    const std::string who = "video " + std::to_string(i + 1) + " (" + v.id + ")";
    if (!(v.duration_s > 0.0)) out.push_back(who + ": non-positive duration");
    if (!(v.chunk_duration_s > 0.0)) out.push_back(who + ": non-positive chunk_duration_s");
    const int n = v.num_chunks();
    for (const auto& [key, bytes] : v.bytes_override) {
      const auto [j, level] = key;
      if (j < 1 || j > n || level < 0 || level >= static_cast<int>(ladder.size())) {
        out.push_back(who + ": bytes_override key " + std::to_string(j) + "," + std::to_string(level) +
                      " out of range");
      } else if (bytes == 0) {
        out.push_back(who + ": bytes_override must be positive");
      }
    }
  }
  return out;
}

const Manifest& validate_manifest(const Manifest& m) {
  auto violations = manifest_violations(m);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return m;
}

double DownloadRecord::mbps() const {
  const double dt = finish_s - start_s;
  return dt > 0.0 ? static_cast<double>(bytes) * 8.0 / 1e6 / dt : 0.0;
}

int PlayerState::buffered_count(int video) const {
  if (video < 1 || video > static_cast<int>(buffers.size())) return 0;
  return static_cast<int>(buffers[static_cast<std::size_t>(video - 1)].size());
}

bool PlayerState::is_buffered(ChunkId c) const { return c.chunk >= 1 && buffered_count(c.video) >= c.chunk; }

const BufferedChunk* PlayerState::buffered(ChunkId c) const {
  if (!is_buffered(c)) return nullptr;
  return &buffers[static_cast<std::size_t>(c.video - 1)][static_cast<std::size_t>(c.chunk - 1)];
}

}  // namespace shortvid
