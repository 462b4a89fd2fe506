#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shortvid/abr.hpp"
#include "shortvid/simulator.hpp"

namespace shortvid {

struct QoeBreakdown {
  double bitrate_reward = 0.0;      // Mbps * s over watched chunks
  double rebuffer_penalty_s = 0.0;  // stall seconds
  double smooth_penalty = 0.0;      // Mbps, within-video switches only
  double qoe = 0.0;
  double wastage_fraction = 0.0;
  double idle_fraction = 0.0;
  // Idle time the policy chose although useful chunks remained.
  double unforced_idle_fraction = 0.0;
  double watch_s = 0.0;
  double session_s = 0.0;
  std::uint64_t downloaded_bytes = 0;
  std::uint64_t wasted_bytes = 0;
};

/// Scores a session. Throws std::invalid_argument on a log that fails the
/// accounting invariants.
QoeBreakdown score(const SessionLog& log, const QoeWeights& weights = {});

double median(std::vector<double> values);
double mean(const std::vector<double>& values);
double stdev(const std::vector<double>& values);

struct SessionResult {
  std::string system;
  std::string trace;
  std::string swipe_trace;
  std::string bucket;  // condition used for normalization
  QoeBreakdown qoe;
};

struct NormalizedEntry {
  std::string system;
  std::string bucket;
  double raw = 0.0;
  double normalized = 0.0;
};

struct NormalizedReport {
  std::vector<NormalizedEntry> entries;
  std::vector<std::string> warnings;
};

/// Divides each result's QoE by the oracle median of its bucket. Buckets
/// whose oracle median is zero (or missing) keep raw values with a warning.
NormalizedReport normalize(const std::vector<SessionResult>& results, const std::vector<SessionResult>& oracle);

struct SummaryStats {
  std::size_t count = 0;
  double median = 0.0;
  double mean = 0.0;
  double stdev = 0.0;
};

struct SystemSummary {
  SummaryStats qoe;
  SummaryStats reward;
  SummaryStats rebuffer_s;
  SummaryStats smooth;
  SummaryStats wastage;
  SummaryStats idle;
  SummaryStats unforced_idle;
};

SummaryStats summarize(const std::vector<double>& values);
/// Per-system summaries, keyed and ordered by system name.
std::map<std::string, SystemSummary> summarize(const std::vector<SessionResult>& results);

/// Report with one row per result plus a per-system summary block.
std::string report_json(const std::vector<SessionResult>& results);
std::string report_csv(const std::vector<SessionResult>& results);
std::vector<SessionResult> parse_report_json(const std::string& text);
std::vector<SessionResult> parse_report_csv(const std::string& text);

}  // namespace shortvid
