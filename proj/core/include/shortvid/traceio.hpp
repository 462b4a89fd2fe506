#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shortvid/dashlet_scheduler.hpp"
#include "shortvid/domain.hpp"
#include "shortvid/network_trace.hpp"
#include "shortvid/simulator.hpp"
#include "shortvid/swipe_model.hpp"

namespace shortvid {

/// A required input file is missing. `kind` names the input ("trace",
/// "manifest", ...), so the message reads "<kind> not found: <path>".
class InputNotFound : public std::runtime_error {
 public:
  InputNotFound(std::string kind, std::string path);
  const std::string& kind() const { return kind_; }
  const std::string& path() const { return path_; }

 private:
  std::string kind_;
  std::string path_;
};

std::string read_text_file(const std::string& path, const std::string& kind = "file");
void write_text_file(const std::string& path, const std::string& content);

// Manifest: {"group_size", "ladder_mbps", "ladder_labels"?, "videos": [...]}.
Manifest manifest_from_json(const std::string& text);
std::string manifest_to_json(const Manifest& m);
Manifest load_manifest(const std::string& path);

/// One swipe-distribution record: a chunk PMF or a density on a grid.
struct SwipeDistributionRecord {
  std::string video_id;
  std::vector<double> pmf;
  std::optional<SwipePdf> pdf;
};

/// Accepts a single record or an array of records.
std::vector<SwipeDistributionRecord> swipe_distributions_from_json(const std::string& text);
std::string swipe_distributions_to_json(const std::vector<SwipeDistributionRecord>& records);

/// Matches records to manifest videos by id and builds the scheduler model.
SwipeModel swipe_model_from_records(const Manifest& manifest, const std::vector<SwipeDistributionRecord>& records,
                                    double grid_step_s = 0.1);

SwipeTrace swipe_trace_from_json(const std::string& text);
std::string swipe_trace_to_json(const SwipeTrace& trace);

/// CSV with header "time_s,mbps".
NetworkTrace trace_from_csv(const std::string& text, double rtt_s = 0.006);
std::string trace_to_csv(const NetworkTrace& trace);
NetworkTrace load_trace(const std::string& path, double rtt_s = 0.006);

/// Packet departure times in ms, one 1500-byte packet per line, bucketed
/// into 1 s bins. Empty bins get a floor rate so the trace stays valid.
NetworkTrace trace_from_packet_ms(const std::string& text, double rtt_s = 0.006);

std::string session_log_to_json(const SessionLog& log, bool include_decisions = false);

}  // namespace shortvid
