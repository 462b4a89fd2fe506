#include "shortvid/qoe_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace shortvid {

using nlohmann::json;

QoeBreakdown score(const SessionLog& log, const QoeWeights& weights) {
  const auto violations = conservation_violations(log);
  if (!violations.empty()) throw std::invalid_argument("score: inconsistent session log: " + violations.front());

  QoeBreakdown out;
  // Watched records ordered by (video, chunk) for the smoothness pass.
  std::map<ChunkId, const ChunkRecord*> watched;
  for (const auto& r : log.chunks) {
    if (r.watched) watched.emplace(r.chunk, &r);
  }
  const ChunkRecord* prev = nullptr;
  for (const auto& [c, r] : watched) {
    out.bitrate_reward += r->watch_s * r->mbps;
    if (prev && prev->chunk.video == c.video && prev->chunk.chunk + 1 == c.chunk) {
      out.smooth_penalty += std::abs(r->mbps - prev->mbps);
    }
    prev = r;
  }
  out.rebuffer_penalty_s = log.stall_s;
  out.qoe = out.bitrate_reward - weights.mu * out.rebuffer_penalty_s - weights.eta * out.smooth_penalty;
  out.downloaded_bytes = log.downloaded_bytes();
  out.wasted_bytes = log.wasted_bytes();
  out.wastage_fraction =
      out.downloaded_bytes > 0 ? static_cast<double>(out.wasted_bytes) / static_cast<double>(out.downloaded_bytes) : 0.0;
  out.session_s = log.session_s;
  out.watch_s = log.watch_s;
  if (log.session_s > 0.0) {
    out.idle_fraction = std::clamp(log.idle_s() / log.session_s, 0.0, 1.0);
    out.unforced_idle_fraction = std::clamp(log.idle_s(IdleReason::Policy) / log.session_s, 0.0, 1.0);
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double stdev(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

NormalizedReport normalize(const std::vector<SessionResult>& results, const std::vector<SessionResult>& oracle) {
  if (oracle.empty()) throw std::invalid_argument("normalize: no oracle results");
  std::map<std::string, std::vector<double>> by_bucket;
  for (const auto& r : oracle) by_bucket[r.bucket].push_back(r.qoe.qoe);
  std::map<std::string, double> medians;
  for (const auto& [bucket, values] : by_bucket) medians[bucket] = median(values);

  NormalizedReport out;
  std::map<std::string, bool> warned;
  for (const auto& r : results) {
    NormalizedEntry e{r.system, r.bucket, r.qoe.qoe, r.qoe.qoe};
    auto it = medians.find(r.bucket);
    if (it == medians.end() || it->second == 0.0) {
      if (!warned[r.bucket]) {
        out.warnings.push_back("bucket '" + r.bucket + "': oracle median is " +
                               (it == medians.end() ? std::string("missing") : std::string("zero")) +
                               "; reporting raw QoE");
        warned[r.bucket] = true;
      }
    } else {
      e.normalized = r.qoe.qoe / it->second;
    }
    out.entries.push_back(e);
  }
  return out;
}

SummaryStats summarize(const std::vector<double>& values) {
  return SummaryStats{values.size(), median(values), mean(values), stdev(values)};
}

std::map<std::string, SystemSummary> summarize(const std::vector<SessionResult>& results) {
  struct Columns {
    std::vector<double> qoe, reward, rebuffer, smooth, wastage, idle, unforced;
  };
  std::map<std::string, Columns> cols;
  for (const auto& r : results) {
    auto& c = cols[r.system];
    c.qoe.push_back(r.qoe.qoe);
    c.reward.push_back(r.qoe.bitrate_reward);
    c.rebuffer.push_back(r.qoe.rebuffer_penalty_s);
    c.smooth.push_back(r.qoe.smooth_penalty);
    c.wastage.push_back(r.qoe.wastage_fraction);
    c.idle.push_back(r.qoe.idle_fraction);
    c.unforced.push_back(r.qoe.unforced_idle_fraction);
  }
  std::map<std::string, SystemSummary> out;
  for (const auto& [system, c] : cols) {
    out[system] = SystemSummary{summarize(c.qoe),     summarize(c.reward), summarize(c.rebuffer),
                                summarize(c.smooth),  summarize(c.wastage), summarize(c.idle),
                                summarize(c.unforced)};
  }
  return out;
}

namespace {

json stats_json(const SummaryStats& s) {
  return {{"count", s.count}, {"median", s.median}, {"mean", s.mean}, {"stdev", s.stdev}};
}

json breakdown_json(const QoeBreakdown& q) {
  return {{"qoe", q.qoe},
          {"bitrate_reward", q.bitrate_reward},
          {"rebuffer_penalty_s", q.rebuffer_penalty_s},
          {"smooth_penalty", q.smooth_penalty},
          {"wastage_fraction", q.wastage_fraction},
          {"idle_fraction", q.idle_fraction},
          {"unforced_idle_fraction", q.unforced_idle_fraction},
          {"watch_s", q.watch_s},
          {"session_s", q.session_s},
          {"downloaded_bytes", q.downloaded_bytes},
          {"wasted_bytes", q.wasted_bytes}};
}

QoeBreakdown breakdown_from_json(const json& j) {
  QoeBreakdown q;
  q.qoe = j.at("qoe").get<double>();
  q.bitrate_reward = j.at("bitrate_reward").get<double>();
  q.rebuffer_penalty_s = j.at("rebuffer_penalty_s").get<double>();
  q.smooth_penalty = j.at("smooth_penalty").get<double>();
  q.wastage_fraction = j.at("wastage_fraction").get<double>();
  q.idle_fraction = j.at("idle_fraction").get<double>();
  q.unforced_idle_fraction = j.at("unforced_idle_fraction").get<double>();
  q.watch_s = j.at("watch_s").get<double>();
  q.session_s = j.at("session_s").get<double>();
  q.downloaded_bytes = j.at("downloaded_bytes").get<std::uint64_t>();
  q.wasted_bytes = j.at("wasted_bytes").get<std::uint64_t>();
  return q;
}

const char* kCsvHeader =
    "system,trace,swipe_trace,bucket,qoe,bitrate_reward,rebuffer_penalty_s,smooth_penalty,wastage_fraction,"
    "idle_fraction,unforced_idle_fraction,watch_s,session_s,downloaded_bytes,wasted_bytes";

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur += '"';
        ++k;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string report_json(const std::vector<SessionResult>& results) {
  json rows = json::array();
  for (const auto& r : results) {
    rows.push_back({{"system", r.system},
                    {"trace", r.trace},
                    {"swipe_trace", r.swipe_trace},
                    {"bucket", r.bucket},
                    {"breakdown", breakdown_json(r.qoe)}});
  }
  json summary = json::object();
  for (const auto& [system, s] : summarize(results)) {
    summary[system] = {{"qoe", stats_json(s.qoe)},
                       {"bitrate_reward", stats_json(s.reward)},
                       {"rebuffer_penalty_s", stats_json(s.rebuffer_s)},
                       {"smooth_penalty", stats_json(s.smooth)},
                       {"wastage_fraction", stats_json(s.wastage)},
                       {"idle_fraction", stats_json(s.idle)},
                       {"unforced_idle_fraction", stats_json(s.unforced_idle)}};
  }
  return json{{"rows", rows}, {"summary", summary}}.dump(2);
}

std::vector<SessionResult> parse_report_json(const std::string& text) {
  const auto j = json::parse(text);
  std::vector<SessionResult> out;
  for (const auto& row : j.at("rows")) {
    out.push_back({row.at("system").get<std::string>(), row.at("trace").get<std::string>(),
                   row.at("swipe_trace").get<std::string>(), row.at("bucket").get<std::string>(),
                   breakdown_from_json(row.at("breakdown"))});
  }
  return out;
}

std::string report_csv(const std::vector<SessionResult>& results) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << kCsvHeader << "\n";
  for (const auto& r : results) {
    const auto& q = r.qoe;
    os << csv_field(r.system) << ',' << csv_field(r.trace) << ',' << csv_field(r.swipe_trace) << ','
       << csv_field(r.bucket) << ',' << q.qoe << ',' << q.bitrate_reward << ',' << q.rebuffer_penalty_s << ','
       << q.smooth_penalty << ',' << q.wastage_fraction << ',' << q.idle_fraction << ',' << q.unforced_idle_fraction
       << ',' << q.watch_s << ',' << q.session_s << ',' << q.downloaded_bytes << ',' << q.wasted_bytes << "\n";
  }
  return os.str();
}

std::vector<SessionResult> parse_report_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw std::invalid_argument("report csv: unexpected header");
  std::vector<SessionResult> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 15) throw std::invalid_argument("report csv: expected 15 fields");
    SessionResult r{f[0], f[1], f[2], f[3], {}};
    auto& q = r.qoe;
    q.qoe = std::stod(f[4]);
    q.bitrate_reward = std::stod(f[5]);
    q.rebuffer_penalty_s = std::stod(f[6]);
    q.smooth_penalty = std::stod(f[7]);
    q.wastage_fraction = std::stod(f[8]);
    q.idle_fraction = std::stod(f[9]);
    q.unforced_idle_fraction = std::stod(f[10]);
    q.watch_s = std::stod(f[11]);
    q.session_s = std::stod(f[12]);
    q.downloaded_bytes = std::stoull(f[13]);
    q.wasted_bytes = std::stoull(f[14]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace shortvid
