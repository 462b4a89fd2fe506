#include "shortvid/traceio.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"

namespace shortvid {

using nlohmann::json;

namespace {

constexpr double kPacketBits = 1500.0 * 8.0;
constexpr double kFloorMbps = 1e-3;

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError({what + ": " + e.what()});
  }
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError({where + ": missing field '" + key + "'"});
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError({where + ": field '" + key + "' has the wrong type"});
  }
}

}  // namespace

InputNotFound::InputNotFound(std::string kind, std::string path)
    : std::runtime_error(kind + " not found: " + path), kind_(std::move(kind)), path_(std::move(path)) {}

std::string read_text_file(const std::string& path, const std::string& kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputNotFound(kind, path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

// ---------------------------------------------------------------------------
// Manifest

Manifest manifest_from_json(const std::string& text) {
  const auto j = parse_json(text, "manifest");
  Manifest m;
  m.group_size = j.value("group_size", 10);
  m.ladder.levels_mbps = field<std::vector<double>>(j, "ladder_mbps", "manifest");
  m.ladder.labels = j.value("ladder_labels", std::vector<std::string>{});
  for (const auto& v : field<json>(j, "videos", "manifest")) {
    VideoSpec spec;
    spec.id = field<std::string>(v, "id", "manifest video");
    const std::string where = "manifest video '" + spec.id + "'";
    spec.duration_s = field<double>(v, "duration_s", where);
    spec.chunk_duration_s = v.value("chunk_duration_s", 5.0);
    if (v.contains("bytes_override")) {
      for (const auto& [key, value] : v.at("bytes_override").items()) {
        const auto comma = key.find(',');
        if (comma == std::string::npos) throw ValidationError({where + ": bad bytes_override key '" + key + "'"});
        const int j_idx = std::stoi(key.substr(0, comma));
        const int level = std::stoi(key.substr(comma + 1));
        spec.bytes_override[{j_idx, level}] = value.get<std::uint64_t>();
      }
    }
    m.videos.push_back(std::move(spec));
  }
  validate_manifest(m);
  return m;
}

std::string manifest_to_json(const Manifest& m) {
  json videos = json::array();
  for (const auto& v : m.videos) {
    json jv = {{"id", v.id}, {"duration_s", v.duration_s}, {"chunk_duration_s", v.chunk_duration_s}};
    if (!v.bytes_override.empty()) {
      json o = json::object();
      for (const auto& [key, bytes] : v.bytes_override) {
        o[std::to_string(key.first) + "," + std::to_string(key.second)] = bytes;
      }
      jv["bytes_override"] = o;
    }
    videos.push_back(jv);
  }
  json j = {{"group_size", m.group_size}, {"ladder_mbps", m.ladder.levels_mbps}, {"videos", videos}};
  if (!m.ladder.labels.empty()) j["ladder_labels"] = m.ladder.labels;
  return j.dump(2);
}

Manifest load_manifest(const std::string& path) { return manifest_from_json(read_text_file(path, "manifest")); }

// ---------------------------------------------------------------------------
// Swipe distributions and traces

std::vector<SwipeDistributionRecord> swipe_distributions_from_json(const std::string& text) {
  const auto j = parse_json(text, "swipe distributions");
  const json items = j.is_array() ? j : json::array({j});
  std::vector<SwipeDistributionRecord> out;
  for (const auto& item : items) {
    SwipeDistributionRecord r;
    r.video_id = field<std::string>(item, "video_id", "swipe distribution");
    const std::string where = "swipe distribution '" + r.video_id + "'";
    if (item.contains("pmf")) {
      r.pmf = item.at("pmf").get<std::vector<double>>();
    } else if (item.contains("pdf")) {
      SwipePdf pdf;
      pdf.grid_step_s = field<double>(item, "pdf_grid_s", where);
      pdf.density = item.at("pdf").get<std::vector<double>>();
      r.pdf = std::move(pdf);
    } else {
      throw ValidationError({where + ": needs 'pmf' or 'pdf'"});
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string swipe_distributions_to_json(const std::vector<SwipeDistributionRecord>& records) {
  json out = json::array();
  for (const auto& r : records) {
    if (r.pdf) {
      out.push_back({{"video_id", r.video_id}, {"pdf_grid_s", r.pdf->grid_step_s}, {"pdf", r.pdf->density}});
    } else {
      out.push_back({{"video_id", r.video_id}, {"pmf", r.pmf}});
    }
  }
  return out.dump(2);
}

SwipeModel swipe_model_from_records(const Manifest& manifest, const std::vector<SwipeDistributionRecord>& records,
                                    double grid_step_s) {
  std::map<std::string, const SwipeDistributionRecord*> by_id;
  for (const auto& r : records) by_id[r.video_id] = &r;

  std::vector<std::string> errors;
  std::vector<SwipePdf> pdfs;
  std::vector<SwipePmf> pmfs;
  bool all_pmfs = true;
  for (int i = 1; i <= manifest.num_videos(); ++i) {
    const auto& video = manifest.video(i);
    auto it = by_id.find(video.id);
    if (it == by_id.end()) {
      errors.push_back("swipe distributions: no entry for video '" + video.id + "'");
      continue;
    }
    const auto& r = *it->second;
    if (r.pdf) {
      all_pmfs = false;
      pdfs.push_back(*r.pdf);
      const double integral = pdfs.back().integral();
      if (std::abs(integral - 1.0) > 1e-6) {
        errors.push_back("swipe distribution '" + video.id + "': density integrates to " + std::to_string(integral));
      }
    } else {
      SwipePmf pmf{i, r.pmf};
      if (pmf.num_chunks() != video.num_chunks()) {
        errors.push_back("swipe distribution '" + video.id + "': PMF has " + std::to_string(pmf.num_chunks()) +
                         " entries, video has " + std::to_string(video.num_chunks()) + " chunks");
        continue;
      }
      if (std::abs(pmf.total() - 1.0) > 1e-9 ||
          std::any_of(pmf.mass.begin(), pmf.mass.end(), [](double p) { return p < 0.0; })) {
        errors.push_back("swipe distribution '" + video.id + "': PMF must be nonnegative and sum to 1");
        continue;
      }
      pdfs.push_back(pdf_from_pmf(pmf, video, grid_step_s));
      pmfs.push_back(std::move(pmf));
    }
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
  if (all_pmfs) return SwipeModel::from_pmfs(std::move(pmfs), manifest, grid_step_s);
  return SwipeModel::from_pdfs(std::move(pdfs), manifest);
}

SwipeTrace swipe_trace_from_json(const std::string& text) {
  const auto j = parse_json(text, "swipe trace");
  if (!j.is_array()) throw ValidationError({"swipe trace: expected a list"});
  SwipeTrace out;
  for (const auto& item : j) {
    out.push_back({field<std::string>(item, "video_id", "swipe trace"), field<double>(item, "view_time_s", "swipe trace")});
  }
  return out;
}

std::string swipe_trace_to_json(const SwipeTrace& trace) {
  json out = json::array();
  for (const auto& e : trace) out.push_back({{"video_id", e.video_id}, {"view_time_s", e.view_time_s}});
  return out.dump(2);
}

// ---------------------------------------------------------------------------
// Network traces

NetworkTrace trace_from_csv(const std::string& text, double rtt_s) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || trim(line) != "time_s,mbps") {
    throw ValidationError({"trace: expected header 'time_s,mbps'"});
  }
  std::vector<NetworkTrace::Segment> segs;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ValidationError({"trace: row " + std::to_string(row) + " needs two fields"});
    try {
      segs.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    } catch (const std::exception&) {
      throw ValidationError({"trace: row " + std::to_string(row) + " is not numeric"});
    }
  }
  return NetworkTrace(std::move(segs), rtt_s);
}

std::string trace_to_csv(const NetworkTrace& trace) {
  std::ostringstream os;
  os << std::setprecision(17) << "time_s,mbps\n";
  for (const auto& s : trace.segments()) os << s.start_s << ',' << s.mbps << '\n';
  return os.str();
}

NetworkTrace load_trace(const std::string& path, double rtt_s) {
  return trace_from_csv(read_text_file(path, "trace"), rtt_s);
}

NetworkTrace trace_from_packet_ms(const std::string& text, double rtt_s) {
  std::istringstream is(text);
  std::string line;
  std::map<long long, long long> packets_per_s;
  long long last_bin = 0;
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty()) continue;
    long long ms = 0;
    try {
      ms = std::stoll(line);
    } catch (const std::exception&) {
      throw ValidationError({"packet trace: non-integer line '" + line + "'"});
    }
    if (ms < 0) throw ValidationError({"packet trace: negative timestamp"});
    const long long bin = ms / 1000;
    ++packets_per_s[bin];
    last_bin = std::max(last_bin, bin);
  }
  if (packets_per_s.empty()) throw ValidationError({"packet trace: no packets"});
  std::vector<NetworkTrace::Segment> segs;
  for (long long b = 0; b <= last_bin; ++b) {
    auto it = packets_per_s.find(b);
    const double mbps = it == packets_per_s.end() ? 0.0 : static_cast<double>(it->second) * kPacketBits / 1e6;
    segs.push_back({static_cast<double>(b), std::max(mbps, kFloorMbps)});
  }
  return NetworkTrace(std::move(segs), rtt_s);
}

// ---------------------------------------------------------------------------
// Session logs

std::string session_log_to_json(const SessionLog& log, bool include_decisions) {
  json chunks = json::array();
  for (const auto& r : log.chunks) {
    chunks.push_back({{"video", r.chunk.video},
                      {"chunk", r.chunk.chunk},
                      {"level", r.level},
                      {"mbps", r.mbps},
                      {"bytes", r.bytes},
                      {"media_start_s", r.media_start_s},
                      {"media_end_s", r.media_end_s},
                      {"download_start_s", r.download_start_s},
                      {"download_finish_s", r.download_finish_s},
                      {"play_start_s", r.play_start_s ? json(*r.play_start_s) : json(nullptr)},
                      {"watch_s", r.watch_s},
                      {"rebuffer_s", r.rebuffer_s},
                      {"watched", r.watched}});
  }
  json idle = json::array();
  for (const auto& i : log.idle) {
    idle.push_back({{"start_s", i.start_s}, {"end_s", i.end_s}, {"reason", to_string(i.reason)}});
  }
  json videos = json::array();
  for (const auto& v : log.videos) {
    videos.push_back({{"video", v.video}, {"play_start_s", v.play_start_s}, {"view_s", v.view_s}});
  }
  json out = {{"system", log.system},
              {"session_s", log.session_s},
              {"watch_s", log.watch_s},
              {"stall_s", log.stall_s},
              {"unattributed_stall_s", log.unattributed_stall_s},
              {"deadline_misses", log.deadline_misses},
              {"downloaded_bytes", log.downloaded_bytes()},
              {"wasted_bytes", log.wasted_bytes()},
              {"chunks", chunks},
              {"idle", idle},
              {"videos", videos}};
  if (include_decisions) {
    json decisions = json::array();
    for (const auto& d : log.decisions) {
      json jd = {{"t_s", d.state.now_s}, {"trigger", to_string(d.trigger)}};
      if (d.chosen) {
        jd["video"] = d.chosen->video;
        jd["chunk"] = d.chosen->chunk;
        jd["level"] = d.level;
      }
      decisions.push_back(jd);
    }
    out["decisions"] = decisions;
  }
  return out.dump(2);
}

}  // namespace shortvid
