#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "shortvid/experiment.hpp"
#include "shortvid/traceio.hpp"

namespace fs = std::filesystem;
using namespace shortvid;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::string> output_dir;
  std::vector<std::string> systems;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("-c,--config", flags.config, "Experiment config (JSON)")->required();
  cmd->add_option("-o,--output-dir", flags.output_dir, "Overrides output_dir");
  cmd->add_option("--systems", flags.systems, "Overrides systems");
  cmd->add_option("--seed", flags.seed, "Overrides seed");
}

ExperimentConfig load_config(const CommonFlags& flags) {
  auto cfg = load_experiment_config(flags.config);
  if (flags.output_dir) cfg.output_dir = *flags.output_dir;
  if (!flags.systems.empty()) cfg.systems = flags.systems;
  if (flags.seed) cfg.seed = *flags.seed;
  return cfg;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  return (fs::path(cfg.output_dir) / name).string();
}

int cmd_run(const CommonFlags& flags, bool write_logs) {
  const auto cfg = load_config(flags);
  const auto inputs = load_inputs(cfg);
  const auto outputs = run_sessions(inputs, cross_scenarios(inputs), cfg.systems, system_params(cfg));
  const auto results = results_of(outputs);
  write_text_file(out_path(cfg, "report.json"), report_json(results));
  write_text_file(out_path(cfg, "report.csv"), report_csv(results));
  if (write_logs) {
    for (const auto& o : outputs) {
      const auto& r = o.result;
      write_text_file(out_path(cfg, "logs/" + r.system + "__" + r.trace + "__" + r.swipe_trace + ".json"),
                      session_log_to_json(o.log));
    }
  }
  std::cout << std::fixed << std::setprecision(3);
  for (const auto& [name, s] : summarize(results)) {
    std::cout << name << ": sessions=" << s.qoe.count << " qoe_mean=" << s.qoe.mean
              << " rebuffer_mean_s=" << s.rebuffer_s.mean << " wastage_mean=" << s.wastage.mean << '\n';
  }
  std::cout << "wrote " << out_path(cfg, "report.json") << '\n';
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& axis_name, std::vector<double> values) {
  const auto cfg = load_config(flags);
  const auto axis = sweep_axis_from_string(axis_name);
  if (values.empty()) values = axis == SweepAxis::ChunkSize ? cfg.sweep.chunk_durations_s : cfg.sweep.factors;
  const auto inputs = load_inputs(cfg);
  const auto points = run_sweep(inputs, cross_scenarios(inputs), cfg.systems, system_params(cfg), axis, values);
  const auto path = out_path(cfg, "sweep_" + to_string(axis) + ".json");
  write_text_file(path, sweep_report_json(axis, points));
  std::cout << std::fixed << std::setprecision(3);
  for (const auto& p : points) {
    std::cout << to_string(axis) << '=' << p.value;
    for (const auto& [name, s] : summarize(p.results)) std::cout << ' ' << name << "=" << s.qoe.mean;
    std::cout << '\n';
  }
  std::cout << "wrote " << path << '\n';
  return 0;
}

int cmd_stability(const CommonFlags& flags, std::vector<double> factors) {
  const auto cfg = load_config(flags);
  if (factors.empty()) factors = cfg.stability_factors;
  const auto inputs = load_inputs(cfg);
  const auto rows = decision_stability(inputs, cross_scenarios(inputs), system_params(cfg), factors);
  const auto path = out_path(cfg, "stability.json");
  write_text_file(path, stability_report_json(rows));
  std::cout << std::fixed << std::setprecision(4);
  for (const auto& r : rows) {
    std::cout << "factor=" << r.factor << " identical=" << r.identical << '/' << r.decisions
              << " fraction=" << r.fraction() << '\n';
  }
  std::cout << "wrote " << path << '\n';
  return 0;
}

int cmd_gen(std::uint64_t seed, const std::string& dir, int videos, int sessions) {
  WorkloadParams params;
  params.seed = seed;
  params.sessions = sessions;
  params.synthetic.num_videos = videos;
  const auto w = make_workload(params);

  write_text_file((fs::path(dir) / "manifest.json").string(), manifest_to_json(w.manifest));
  std::vector<SwipeDistributionRecord> records;
  const auto pmfs = profile_pmfs(w.manifest, w.profiles);
  for (std::size_t k = 0; k < pmfs.size(); ++k) records.push_back({w.manifest.videos[k].id, pmfs[k].mass, {}});
  write_text_file((fs::path(dir) / "swipe_distributions.json").string(), swipe_distributions_to_json(records));

  nlohmann::json modes = nlohmann::json::array();
  for (std::size_t k = 0; k < w.profiles.size(); ++k) {
    const auto& p = w.profiles[k];
    modes.push_back({{"video_id", w.manifest.videos[k].id}, {"mode", to_string(p.mode)},
                     {"early_mean_s", p.early_mean_s}, {"w_early", p.w_early}, {"w_late", p.w_late},
                     {"w_complete", p.w_complete}});
  }
  write_text_file((fs::path(dir) / "swipe_profiles.json").string(), modes.dump(2) + "\n");

  nlohmann::json config;
  config["seed"] = seed;
  config["manifest"] = "manifest.json";
  config["swipe_distributions"] = "swipe_distributions.json";
  config["traces"] = nlohmann::json::array();
  config["swipe_traces"] = nlohmann::json::array();
  config["systems"] = {"dashlet", "tiktok", "oracle"};
  config["output_dir"] = "out";
  for (std::size_t k = 0; k < w.traces.size(); ++k) {
    const auto trace_name = "traces/session" + std::to_string(k + 1) + ".csv";
    const auto swipe_name = "swipes/swipes" + std::to_string(k + 1) + ".json";
    write_text_file((fs::path(dir) / trace_name).string(), trace_to_csv(w.traces[k]));
    write_text_file((fs::path(dir) / swipe_name).string(), swipe_trace_to_json(w.swipes[k]));
    config["traces"].push_back({{"path", trace_name}});
    config["swipe_traces"].push_back(swipe_name);
  }
  write_text_file((fs::path(dir) / "config.json").string(), config.dump(2) + "\n");
  std::cout << "wrote " << videos << " videos and " << sessions << " sessions to " << dir << '\n';
  return 0;
}

int cmd_convert(const std::string& from, const std::string& in, const std::string& out) {
  if (from != "packet-ms") throw ValidationError({"convert-trace: unsupported --from '" + from + "'"});
  write_text_file(out, trace_to_csv(trace_from_packet_ms(read_text_file(in, "trace"))));
  std::cout << "wrote " << out << '\n';
  return 0;
}

std::vector<SessionResult> load_report(const std::string& path) {
  const auto text = read_text_file(path, "report");
  return fs::path(path).extension() == ".csv" ? parse_report_csv(text) : parse_report_json(text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Short-video streaming session simulator"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  bool write_logs = true;
  auto* run = app.add_subcommand("run", "Run every system on every trace pair and write a report");
  add_common(run, run_flags);
  run->add_flag("!--no-logs", write_logs, "Skip per-session logs");

  CommonFlags sweep_flags;
  std::string axis;
  std::vector<double> sweep_values;
  auto* sweep = app.add_subcommand("sweep", "Sweep swipe error, network error or chunk size");
  add_common(sweep, sweep_flags);
  sweep->add_option("--axis", axis, "swipe_error | network_error | chunk_size")->required();
  sweep->add_option("--values", sweep_values, "Overrides the configured sweep values");

  CommonFlags stab_flags;
  std::vector<double> stab_factors;
  auto* stability = app.add_subcommand("stability", "Measure Dashlet decision stability under swipe perturbation");
  add_common(stability, stab_flags);
  stability->add_option("--factors", stab_factors, "Overrides the configured factors");

  std::uint64_t seed = 0;
  std::string gen_dir;
  int videos = 200;
  int sessions = 20;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic workload");
  gen->add_option("--seed", seed, "Random seed")->required();
  gen->add_option("-o,--output", gen_dir, "Output directory")->required();
  gen->add_option("--videos", videos, "Playlist length")->check(CLI::PositiveNumber);
  gen->add_option("--sessions", sessions, "Number of sessions")->check(CLI::PositiveNumber);

  std::string from;
  std::string conv_in;
  std::string conv_out;
  auto* convert = app.add_subcommand("convert-trace", "Convert a packet trace to a throughput CSV");
  convert->add_option("--from", from, "Input format (packet-ms)")->required();
  convert->add_option("input", conv_in, "Input file")->required();
  convert->add_option("-o,--output", conv_out, "Output CSV")->required();

  std::string report_a;
  std::string report_b;
  auto* compare = app.add_subcommand("compare", "Compare per-system QoE means of two reports");
  compare->add_option("a", report_a, "First report (JSON or CSV)")->required();
  compare->add_option("b", report_b, "Second report (JSON or CSV)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_flags, write_logs);
    if (*sweep) return cmd_sweep(sweep_flags, axis, sweep_values);
    if (*stability) return cmd_stability(stab_flags, stab_factors);
    if (*gen) return cmd_gen(seed, gen_dir, videos, sessions);
    if (*convert) return cmd_convert(from, conv_in, conv_out);
    if (*compare) {
      std::cout << compare_reports(load_report(report_a), load_report(report_b));
      return 0;
    }
  } catch (const InputNotFound& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    for (const auto& v : e.violations()) std::cerr << "error: " << v << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
