#include "shortvid/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "shortvid/traceio.hpp"

namespace shortvid {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

std::string bucket_for(double mean_mbps) {
  if (mean_mbps < 1.0) return "<1";
  if (mean_mbps <= 6.0) return "1-6";
  return ">6";
}

class FieldReader {
 public:
  FieldReader(const json& j, std::string where, std::vector<std::string>& errors)
      : j_(j), where_(std::move(where)), errors_(errors) {}

  template <typename T>
  void read(const char* key, T& out) {
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      errors_.push_back(where_ + key + ": wrong type");
    }
  }

  void positive(const char* key, double& out) {
    read(key, out);
    if (!(out > 0.0)) errors_.push_back(where_ + key + ": must be > 0");
  }

  void factors(const char* key, std::vector<double>& out) {
    read(key, out);
    for (double f : out) {
      if (!(f > 0.0)) {
        errors_.push_back(where_ + key + ": factors must be > 0");
        break;
      }
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::vector<std::string>& errors_;
};

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  return j.contains(key) && j.at(key).is_object() ? j.at(key) : empty;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError({std::string("config: ") + e.what()});
  }
  if (!j.is_object()) throw ValidationError({"config: expected a JSON object"});

  ExperimentConfig cfg;
  std::vector<std::string> errors;
  if (!j.contains("seed") || !j.at("seed").is_number_integer()) {
    errors.emplace_back("config.seed: required integer");
  } else {
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }

  FieldReader top(j, "config.", errors);
  top.read("manifest", cfg.manifest);
  top.read("swipe_distributions", cfg.swipe_distributions);
  top.read("swipe_traces", cfg.swipe_traces);
  top.read("systems", cfg.systems);
  top.read("output_dir", cfg.output_dir);
  if (j.contains("traces")) {
    const auto& ts = j.at("traces");
    if (!ts.is_array()) {
      errors.emplace_back("config.traces: expected an array");
    } else {
      for (const auto& t : ts) {
        if (t.is_string()) {
          cfg.traces.push_back({t.get<std::string>(), ""});
        } else if (t.is_object() && t.contains("path") && t.at("path").is_string()) {
          cfg.traces.push_back({t.at("path").get<std::string>(), t.value("bucket", std::string())});
        } else {
          errors.emplace_back("config.traces: entries need a 'path'");
        }
      }
    }
  }
  for (const auto& s : cfg.systems) {
    const auto& known = known_systems();
    if (std::find(known.begin(), known.end(), s) == known.end()) {
      errors.push_back("config.systems: unknown system '" + s + "'");
    }
  }

  QoeWeights weights;
  FieldReader qoe(section(j, "qoe"), "config.qoe.", errors);
  qoe.read("mu", weights.mu);
  qoe.read("eta", weights.eta);

  auto& sc = cfg.scheduler;
  FieldReader sched(section(j, "scheduler"), "config.scheduler.", errors);
  sched.positive("horizon_s", sc.horizon_s);
  sched.read("candidate_threshold", sc.candidate_threshold);
  sched.read("lookahead_cutoff", sc.lookahead_cutoff);
  sched.positive("grid_step_s", sc.grid_step_s);
  sched.read("mpc_max_chunks", sc.mpc_max_chunks);
  sched.read("robust", sc.robust);
  sched.read("lock_level_per_video", sc.lock_level_per_video);
  sched.positive("network_factor", sc.network_factor);
  std::string forecast = sc.forecast == ForecastMode::Discrete ? "discrete" : "continuous";
  sched.read("forecast", forecast);
  if (forecast == "discrete") {
    sc.forecast = ForecastMode::Discrete;
  } else if (forecast == "continuous") {
    sc.forecast = ForecastMode::Continuous;
  } else {
    errors.push_back("config.scheduler.forecast: expected 'discrete' or 'continuous'");
  }
  sc.weights = weights;

  FieldReader tik(section(j, "tiktok"), "config.tiktok.", errors);
  tik.read("first_chunk_bytes", cfg.tiktok.first_chunk_bytes);
  tik.read("prebuffer_target", cfg.tiktok.prebuffer_target);
  tik.positive("threshold_factor", cfg.tiktok.threshold_factor);
  tik.read("thresholds_mbps", cfg.tiktok.thresholds_mbps);
  tik.positive("throughput_window_s", cfg.tiktok.throughput_window_s);

  FieldReader orc(section(j, "oracle"), "config.oracle.", errors);
  orc.read("horizon_chunks", cfg.oracle.horizon_chunks);
  cfg.oracle.weights = weights;

  FieldReader sim(section(j, "simulator"), "config.simulator.", errors);
  sim.positive("max_view_s", cfg.simulator.max_view_s);
  sim.positive("tick_s", cfg.simulator.tick_s);

  FieldReader sweep(section(j, "sweep"), "config.sweep.", errors);
  sweep.factors("chunk_durations_s", cfg.sweep.chunk_durations_s);
  sweep.factors("factors", cfg.sweep.factors);

  FieldReader stab(section(j, "stability"), "config.stability.", errors);
  stab.factors("factors", cfg.stability_factors);

  if (!errors.empty()) throw ValidationError(std::move(errors));

  cfg.manifest = resolve(cfg.manifest, base_dir);
  cfg.swipe_distributions = resolve(cfg.swipe_distributions, base_dir);
  for (auto& s : cfg.swipe_traces) s = resolve(s, base_dir);
  for (auto& t : cfg.traces) t.path = resolve(t.path, base_dir);
  cfg.output_dir = resolve(cfg.output_dir, base_dir);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_json(read_text_file(path, "config"), fs::path(path).parent_path().string());
}

ExperimentInputs load_inputs(const ExperimentConfig& cfg) {
  std::vector<std::string> errors;
  if (cfg.manifest.empty()) errors.emplace_back("config.manifest: required");
  if (cfg.traces.empty()) errors.emplace_back("config.traces: at least one trace required");
  if (cfg.swipe_traces.empty()) errors.emplace_back("config.swipe_traces: at least one swipe trace required");
  if (!errors.empty()) throw ValidationError(std::move(errors));

  ExperimentInputs in;
  for (const auto& t : cfg.traces) {
    NamedTrace nt{stem(t.path), t.bucket, load_trace(t.path)};
    if (nt.bucket.empty()) nt.bucket = bucket_for(nt.trace.mean_mbps());
    in.traces.push_back(std::move(nt));
  }
  in.manifest = load_manifest(cfg.manifest);
  for (const auto& s : cfg.swipe_traces) {
    in.swipes.push_back({stem(s), swipe_trace_from_json(read_text_file(s, "swipe trace"))});
  }
  const bool needs_model = std::find(cfg.systems.begin(), cfg.systems.end(), "dashlet") != cfg.systems.end();
  if (!cfg.swipe_distributions.empty()) {
    in.model = swipe_model_from_records(
        in.manifest, swipe_distributions_from_json(read_text_file(cfg.swipe_distributions, "swipe distributions")),
        cfg.scheduler.grid_step_s);
  } else if (needs_model) {
    throw ValidationError({"config.swipe_distributions: required when running dashlet"});
  }
  return in;
}

ExperimentInputs workload_inputs(const Workload& workload, double grid_step_s) {
  ExperimentInputs in;
  in.manifest = workload.manifest;
  in.profiles = workload.profiles;
  in.model = SwipeModel::from_pmfs(profile_pmfs(workload.manifest, workload.profiles), workload.manifest, grid_step_s);
  for (std::size_t k = 0; k < workload.traces.size(); ++k) {
    const auto name = "session" + std::to_string(k + 1);
    in.traces.push_back({name, bucket_for(workload.traces[k].mean_mbps()), workload.traces[k]});
  }
  for (std::size_t k = 0; k < workload.swipes.size(); ++k) {
    in.swipes.push_back({"swipes" + std::to_string(k + 1), workload.swipes[k]});
  }
  return in;
}

ExperimentInputs rechunked(const ExperimentInputs& inputs, double chunk_duration_s, double grid_step_s) {
  ExperimentInputs out = inputs;
  out.manifest = with_chunk_duration(inputs.manifest, chunk_duration_s);
  if (!inputs.profiles.empty()) {
    out.model = SwipeModel::from_pmfs(profile_pmfs(out.manifest, inputs.profiles), out.manifest, grid_step_s);
  } else if (!inputs.model.pdfs.empty()) {
    out.model = SwipeModel::from_pdfs(inputs.model.pdfs, out.manifest);
  }
  return out;
}

std::vector<Scenario> cross_scenarios(const ExperimentInputs& inputs) {
  std::vector<Scenario> out;
  for (std::size_t t = 0; t < inputs.traces.size(); ++t) {
    for (std::size_t s = 0; s < inputs.swipes.size(); ++s) out.push_back({t, s});
  }
  return out;
}

std::vector<Scenario> paired_scenarios(const ExperimentInputs& inputs) {
  std::vector<Scenario> out;
  for (std::size_t k = 0; k < std::min(inputs.traces.size(), inputs.swipes.size()); ++k) out.push_back({k, k});
  return out;
}

SystemParams system_params(const ExperimentConfig& cfg) {
  return {cfg.scheduler, cfg.tiktok, cfg.oracle, cfg.simulator, std::nullopt};
}

const std::vector<std::string>& known_systems() {
  static const std::vector<std::string> names = {"dashlet", "tiktok", "oracle"};
  return names;
}

SessionLog run_system(const std::string& system, const ExperimentInputs& inputs, const Scenario& scenario,
                      const SystemParams& params) {
  const auto& trace = inputs.traces.at(scenario.trace).trace;
  const auto& swipes = inputs.swipes.at(scenario.swipes).swipes;
  if (system == "dashlet") {
    SwipeModel model = params.swipe_factor ? inputs.model.perturbed(*params.swipe_factor, inputs.manifest) : inputs.model;
    DashletScheduler s(inputs.manifest, std::move(model), params.scheduler);
    return run_session(s, inputs.manifest, trace, swipes, params.simulator);
  }
  if (system == "tiktok") {
    TikTokScheduler s(inputs.manifest, params.tiktok);
    return run_session(s, inputs.manifest, trace, swipes, params.simulator);
  }
  if (system == "oracle") {
    OracleScheduler s(inputs.manifest, make_oracle_knowledge(inputs.manifest, swipes, trace, params.simulator),
                      params.oracle);
    return run_session(s, inputs.manifest, trace, swipes, params.simulator);
  }
  throw std::invalid_argument("unknown system '" + system + "'");
}

std::size_t worker_count() {
  if (const char* env = std::getenv("SIM_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t workers) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < n; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<SessionOutput> run_sessions(const ExperimentInputs& inputs, const std::vector<Scenario>& scenarios,
                                        const std::vector<std::string>& systems, const SystemParams& params) {
  std::vector<SessionOutput> out(systems.size() * scenarios.size());
  const QoeWeights& weights = params.scheduler.weights;
  parallel_for(out.size(), [&](std::size_t k) {
    const auto& system = systems[k / scenarios.size()];
    const auto& sc = scenarios[k % scenarios.size()];
    auto log = run_system(system, inputs, sc, params);
    const auto& trace = inputs.traces[sc.trace];
    out[k].result = {system, trace.name, inputs.swipes[sc.swipes].name, trace.bucket, score(log, weights)};
    out[k].log = std::move(log);
  });
  return out;
}

std::vector<SessionResult> results_of(const std::vector<SessionOutput>& outputs) {
  std::vector<SessionResult> out;
  out.reserve(outputs.size());
  for (const auto& o : outputs) out.push_back(o.result);
  return out;
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::SwipeError: return "swipe_error";
    case SweepAxis::NetworkError: return "network_error";
    case SweepAxis::ChunkSize: return "chunk_size";
  }
  return "unknown";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "swipe_error") return SweepAxis::SwipeError;
  if (s == "network_error") return SweepAxis::NetworkError;
  if (s == "chunk_size") return SweepAxis::ChunkSize;
  throw ValidationError({"unknown sweep axis '" + s + "' (expected swipe_error, network_error or chunk_size)"});
}

std::vector<SweepPoint> run_sweep(const ExperimentInputs& inputs, const std::vector<Scenario>& scenarios,
                                  const std::vector<std::string>& systems, const SystemParams& params, SweepAxis axis,
                                  const std::vector<double>& values) {
  std::vector<SweepPoint> out;
  for (double v : values) {
    if (!(v > 0.0)) throw ValidationError({"sweep value must be > 0, got " + std::to_string(v)});
    SystemParams p = params;
    SweepPoint point;
    point.value = v;
    if (axis == SweepAxis::ChunkSize) {
      const auto in = rechunked(inputs, v, params.scheduler.grid_step_s);
      point.results = results_of(run_sessions(in, scenarios, systems, p));
    } else {
      if (axis == SweepAxis::SwipeError) p.swipe_factor = v;
      if (axis == SweepAxis::NetworkError) p.scheduler.network_factor = params.scheduler.network_factor * v;
      point.results = results_of(run_sessions(inputs, scenarios, systems, p));
    }
    out.push_back(std::move(point));
  }
  return out;
}

std::vector<StabilityRow> decision_stability(const ExperimentInputs& inputs, const std::vector<Scenario>& scenarios,
                                             const SystemParams& params, const std::vector<double>& factors) {
  const SwipeModel reference = inputs.model.perturbed(1.0, inputs.manifest);
  std::vector<SwipeModel> models;
  for (double f : factors) models.push_back(inputs.model.perturbed(f, inputs.manifest));

  std::vector<std::vector<StabilityRow>> per(scenarios.size());
  parallel_for(scenarios.size(), [&](std::size_t k) {
    SimulatorConfig sim = params.simulator;
    sim.record_decisions = true;
    DashletScheduler base(inputs.manifest, reference, params.scheduler);
    const auto log = run_session(base, inputs.manifest, inputs.traces[scenarios[k].trace].trace,
                                 inputs.swipes[scenarios[k].swipes].swipes, sim);
    for (std::size_t f = 0; f < factors.size(); ++f) {
      DashletScheduler alt(inputs.manifest, models[f], params.scheduler);
      StabilityRow row{factors[f], 0, 0};
      for (const auto& dp : log.decisions) {
        const auto action = alt.decide(dp.state, dp.trigger);
        const auto* req = std::get_if<DownloadRequest>(&action);
        const std::optional<ChunkId> chosen = req ? std::optional<ChunkId>(req->chunk) : std::nullopt;
        ++row.decisions;
        if (chosen == dp.chosen) ++row.identical;
      }
      per[k].push_back(row);
    }
  });

  std::vector<StabilityRow> out;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    StabilityRow row{factors[f], 0, 0};
    for (const auto& rows : per) {
      row.decisions += rows[f].decisions;
      row.identical += rows[f].identical;
    }
    out.push_back(row);
  }
  return out;
}

std::string sweep_report_json(SweepAxis axis, const std::vector<SweepPoint>& points) {
  json j;
  j["axis"] = to_string(axis);
  j["points"] = json::array();
  for (const auto& p : points) {
    json pj;
    pj["value"] = p.value;
    json systems = json::object();
    for (const auto& [name, s] : summarize(p.results)) {
      systems[name] = {{"qoe_mean", s.qoe.mean},           {"qoe_median", s.qoe.median},
                       {"rebuffer_s_mean", s.rebuffer_s.mean}, {"wastage_mean", s.wastage.mean},
                       {"count", s.qoe.count}};
    }
    pj["systems"] = systems;
    j["points"].push_back(pj);
  }
  return j.dump(2) + "\n";
}

std::string stability_report_json(const std::vector<StabilityRow>& rows) {
  json j = json::array();
  for (const auto& r : rows) {
    j.push_back({{"factor", r.factor}, {"decisions", r.decisions}, {"identical", r.identical},
                 {"fraction", r.fraction()}});
  }
  return j.dump(2) + "\n";
}

std::string compare_reports(const std::vector<SessionResult>& a, const std::vector<SessionResult>& b) {
  const auto sa = summarize(a);
  const auto sb = summarize(b);
  std::map<std::string, std::pair<std::optional<double>, std::optional<double>>> rows;
  for (const auto& [name, s] : sa) rows[name].first = s.qoe.mean;
  for (const auto& [name, s] : sb) rows[name].second = s.qoe.mean;

  std::ostringstream os;
  os.precision(6);
  os << "system,qoe_mean_a,qoe_mean_b,delta\n";
  for (const auto& [name, v] : rows) {
    os << name << ',';
    if (v.first) os << *v.first;
    os << ',';
    if (v.second) os << *v.second;
    os << ',';
    if (v.first && v.second) os << *v.second - *v.first;
    os << '\n';
  }
  return os.str();
}

}  // namespace shortvid
