#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shortvid/baselines.hpp"
#include "shortvid/dashlet_scheduler.hpp"
#include "shortvid/qoe_metrics.hpp"
#include "shortvid/simulator.hpp"
#include "shortvid/synthetic.hpp"

namespace shortvid {

struct TraceSpec {
  std::string path;
  std::string bucket;
};

struct SweepConfig {
  std::vector<double> chunk_durations_s = {2.0, 5.0, 7.0, 10.0};
  std::vector<double> factors = {0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5};
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string manifest;
  std::string swipe_distributions;
  std::vector<TraceSpec> traces;
  std::vector<std::string> swipe_traces;
  std::vector<std::string> systems = {"dashlet", "tiktok", "oracle"};
  std::string output_dir = "out";
  SchedulerConfig scheduler;
  TikTokConfig tiktok;
  OracleConfig oracle;
  SimulatorConfig simulator;
  SweepConfig sweep;
  std::vector<double> stability_factors = {0.5, 0.75, 1.0, 1.25, 1.5};
};

/// Parses a JSON config. Relative paths resolve against `base_dir`.
/// Throws ValidationError naming the offending field.
ExperimentConfig experiment_config_from_json(const std::string& text, const std::string& base_dir = "");
ExperimentConfig load_experiment_config(const std::string& path);

struct NamedTrace {
  std::string name;
  std::string bucket;
  NetworkTrace trace;
};

struct NamedSwipes {
  std::string name;
  SwipeTrace swipes;
};

/// Everything a batch of sessions reads. When `profiles` is set the swipe
/// model can be rebuilt exactly for another chunk duration.
struct ExperimentInputs {
  Manifest manifest;
  SwipeModel model;
  std::vector<NamedTrace> traces;
  std::vector<NamedSwipes> swipes;
  std::vector<SwipeProfile> profiles;
};

/// Reads every file named by the config. Missing files raise InputNotFound.
ExperimentInputs load_inputs(const ExperimentConfig& cfg);

/// Session k pairs network trace k with swipe trace k.
ExperimentInputs workload_inputs(const Workload& workload, double grid_step_s = 0.1);

/// Same inputs re-chunked at chunk_duration_s, with the swipe model rebuilt.
ExperimentInputs rechunked(const ExperimentInputs& inputs, double chunk_duration_s, double grid_step_s = 0.1);

struct Scenario {
  std::size_t trace = 0;
  std::size_t swipes = 0;
};

std::vector<Scenario> cross_scenarios(const ExperimentInputs& inputs);
std::vector<Scenario> paired_scenarios(const ExperimentInputs& inputs);

struct SystemParams {
  SchedulerConfig scheduler;
  TikTokConfig tiktok;
  OracleConfig oracle;
  SimulatorConfig simulator;
  // Factor applied to the Dashlet swipe model; unset keeps it as loaded.
  std::optional<double> swipe_factor;
};

SystemParams system_params(const ExperimentConfig& cfg);

const std::vector<std::string>& known_systems();

SessionLog run_system(const std::string& system, const ExperimentInputs& inputs, const Scenario& scenario,
                      const SystemParams& params);

/// Worker count: SIM_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

/// Runs fn(0..n-1) on a pool of `workers` threads; fn writes its own slot.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, std::size_t workers = worker_count());

struct SessionOutput {
  SessionResult result;
  SessionLog log;
};

/// Every (system, scenario) pair, ordered by system then scenario.
std::vector<SessionOutput> run_sessions(const ExperimentInputs& inputs, const std::vector<Scenario>& scenarios,
                                        const std::vector<std::string>& systems, const SystemParams& params);
std::vector<SessionResult> results_of(const std::vector<SessionOutput>& outputs);

enum class SweepAxis { SwipeError, NetworkError, ChunkSize };

std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);

struct SweepPoint {
  double value = 0.0;
  std::vector<SessionResult> results;
};

std::vector<SweepPoint> run_sweep(const ExperimentInputs& inputs, const std::vector<Scenario>& scenarios,
                                  const std::vector<std::string>& systems, const SystemParams& params, SweepAxis axis,
                                  const std::vector<double>& values);

struct StabilityRow {
  double factor = 1.0;
  std::size_t decisions = 0;
  std::size_t identical = 0;
  double fraction() const { return decisions == 0 ? 1.0 : static_cast<double>(identical) / decisions; }
};

/// Replays Dashlet's logged decision points under swipe models perturbed by
/// each factor and counts first actions matching the unit-factor model.
std::vector<StabilityRow> decision_stability(const ExperimentInputs& inputs, const std::vector<Scenario>& scenarios,
                                             const SystemParams& params, const std::vector<double>& factors);

std::string sweep_report_json(SweepAxis axis, const std::vector<SweepPoint>& points);
std::string stability_report_json(const std::vector<StabilityRow>& rows);

/// Per-system QoE means of two reports side by side.
std::string compare_reports(const std::vector<SessionResult>& a, const std::vector<SessionResult>& b);

}  // namespace shortvid
