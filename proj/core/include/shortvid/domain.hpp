#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace shortvid {

/// Thrown when an input fails validation. Carries every violation found,
/// each naming the offending video or field.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Available encodings, ascending by bitrate. Levels are 0-based indices.
struct BitrateLadder {
  std::vector<double> levels_mbps;
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(levels_mbps.size()); }
  double mbps(int level) const;
  int top() const { return size() - 1; }
};

struct VideoSpec {
  std::string id;
  double duration_s = 0.0;
  double chunk_duration_s = 5.0;
  // Keyed by (1-based chunk index, 0-based ladder level).
  std::map<std::pair<int, int>, std::uint64_t> bytes_override;

  /// ceil(duration / T), tolerant to floating noise in exact multiples.
  int num_chunks() const;
  /// Playable seconds of chunk j; the last chunk holds the remainder.
  double chunk_seconds(int j) const;
  double chunk_start_s(int j) const { return (j - 1) * chunk_duration_s; }
};

struct Manifest {
  std::vector<VideoSpec> videos;
  BitrateLadder ladder;
  int group_size = 10;

  int num_videos() const { return static_cast<int>(videos.size()); }
  /// 1-based access.
  const VideoSpec& video(int i) const;
};

/// Identifies c_ij with 1-based video and chunk indices.
struct ChunkId {
  int video = 1;
  int chunk = 1;

  auto operator<=>(const ChunkId&) const = default;
};

std::string to_string(const ChunkId& id);

/// Bytes of chunk j of `video` at ladder `level`: the override table entry if
/// present, otherwise bitrate x chunk seconds / 8.
std::uint64_t chunk_bytes(const VideoSpec& video, int j, int level, const BitrateLadder& ladder);

/// Sum of chunk_bytes over all time chunks of the video at one level.
std::uint64_t video_bytes(const VideoSpec& video, int level, const BitrateLadder& ladder);

/// Every invariant violation in the manifest; empty when valid.
std::vector<std::string> manifest_violations(const Manifest& m);

/// Returns `m` unchanged when valid, throws ValidationError otherwise.
const Manifest& validate_manifest(const Manifest& m);

/// A downloaded chunk held in a per-video buffer. Media range is in seconds
/// of the video's timeline, so byte-based chunkings fit the same shape.
struct BufferedChunk {
  int level = 0;
  std::uint64_t bytes = 0;
  double media_start_s = 0.0;
  double media_end_s = 0.0;
};

struct DownloadRecord {
  std::uint64_t bytes = 0;
  double start_s = 0.0;
  double finish_s = 0.0;

  double mbps() const;
};

struct InFlightDownload {
  ChunkId chunk;
  int level = 0;
  std::uint64_t bytes = 0;
  double media_start_s = 0.0;
  double media_end_s = 0.0;
  double start_s = 0.0;
  std::optional<double> target_finish_s;
};

/// Player as seen by a scheduler. Buffers are per video and contiguous from
/// chunk 1: chunk j is buffered iff buffers[i-1].size() >= j.
struct PlayerState {
  double now_s = 0.0;
  ChunkId playing{1, 1};
  double offset_s = 0.0;         // within the playing chunk
  double position_s = 0.0;       // within the playing video
  double watched_in_video_s = 0.0;
  bool started = false;
  bool rebuffering = true;
  double stall_s = 0.0;
  double rtt_s = 0.0;
  std::vector<std::vector<BufferedChunk>> buffers;
  std::vector<DownloadRecord> download_history;
  std::optional<InFlightDownload> in_flight;

  explicit PlayerState(int num_videos = 0) : buffers(static_cast<std::size_t>(num_videos)) {}

  int buffered_count(int video) const;
  bool is_buffered(ChunkId c) const;
  bool is_in_flight(ChunkId c) const { return in_flight && in_flight->chunk == c; }
  /// Buffered or currently downloading.
  bool is_secured(ChunkId c) const { return is_buffered(c) || is_in_flight(c); }
  const BufferedChunk* buffered(ChunkId c) const;
};

}  // namespace shortvid
