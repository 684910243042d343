// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#pragma once

/**
 * @file harness.hpp
 * @brief Benchmark suites over the toy models, JSONL trajectory logs, the
 *        report fold, paired comparison, training-data generation and the
 *        threshold sweep.
 *
 * Every run is one (task, seed) pair. The seed drives the model's failure
 * plan and noise, the sampler, and the target record. Reports are a pure,
 * order-independent fold over the log records.
 */

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "logitctl/config_io.hpp"
#include "logitctl/controller.hpp"
#include "logitctl/models.hpp"

namespace logitctl {

struct TaskSpec {
  std::string name;
  ContractSpec contract;
  int trials = 1;
  std::uint64_t seed_base = 0;
  double p_preamble = 0.0;
  double p_fence = 0.0;
  double p_trailing = 0.0;
  double peak = 5.0;
  double noise_sigma = 0.5;
  /// Candidate values per key, as JSON values. Keys without a pool get a
  /// generated value of the right type.
  std::map<std::string, std::vector<nlohmann::json>> values;
  /// Probability of leaving a key out of the target record.
  std::map<std::string, double> drop_keys;

  std::vector<std::uint64_t> seeds() const;
};

struct BenchmarkSuite {
  std::string name;
  std::string regime;  // "structured" or "toolcall"
  std::vector<TaskSpec> tasks;
  SamplingMode sampling = SamplingMode::Greedy;
  std::size_t max_tokens = 160;
};

/// Contract paths inside the suite file resolve relative to the suite file.
BenchmarkSuite load_suite(const std::filesystem::path& path);
BenchmarkSuite suite_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Compact JSON record the model is trying to write for this seed.
std::string make_target(const TaskSpec& task, std::uint64_t seed);

FailureProneConfig model_config(const TaskSpec& task, std::uint64_t seed);

struct RunRecord {
  std::string run_id;
  std::string task;
  std::uint64_t seed = 0;
  RunResult result;
  bool replay_ok = false;
};

struct RunOptions {
  PolicyConfig policy;
  int jobs = 1;
  bool check_replay = true;
};

/// Runs every (task, seed) once. Output order is suite order regardless of
/// `jobs`.
std::vector<RunRecord> run_suite(const BenchmarkSuite& suite, const RunOptions& opts);

RunRecord run_one(const TaskSpec& task, std::uint64_t seed, const BenchmarkSuite& suite,
                  const RunOptions& opts);

// ----------------------------------------------------------------------------
// Logs and reports

nlohmann::json step_log_record(const std::string& run_id, const StepRecord& step);
nlohmann::json terminal_log_record(const RunRecord& run);
/// Step records followed by the terminal record, one JSON document per line.
void write_trajectory(std::ostream& out, const RunRecord& run);

struct ReportMeta {
  std::string suite;
  std::string regime;
  std::string policy;  // "baseline" or "controlled"
  std::string sampling;
  double lambda = 0.1;
};

/// Folds JSONL log records into a report. Order-independent: records are
/// grouped by run_id and runs are aggregated in sorted order.
nlohmann::json fold_report(const std::vector<nlohmann::json>& records, const ReportMeta& meta);
nlohmann::json fold_report(std::istream& jsonl, const ReportMeta& meta);

/// Report with every wall-clock field removed.
nlohmann::json strip_timing(nlohmann::json report);

/// Writes <out>/trajectories.jsonl and <out>/report.json; returns the report.
nlohmann::json write_run_outputs(const std::vector<RunRecord>& runs, const ReportMeta& meta,
                                 const std::filesystem::path& out_dir);

// ----------------------------------------------------------------------------
// Comparison

/// "25.0% -> 48.0% (+23.0pp)" with the arrow as U+2192.
std::string format_rate_delta(double baseline, double controlled);
/// "1.20ms -> 1.50ms (+25.0%)".
std::string format_latency_delta(double baseline_ms, double controlled_ms);

struct Comparison {
  nlohmann::json table;  // per-task and overall deltas
  std::string text;      // human-readable lines
};

/// Throws InvalidInput when the reports cover different suites or seeds.
Comparison compare(const nlohmann::json& baseline, const nlohmann::json& controlled);

// ----------------------------------------------------------------------------
// Training data, uncontrolled reference, sweep

struct TrainingDataSummary {
  std::size_t runs = 0;
  std::size_t valid = 0;
  std::size_t invalid = 0;
};

/// `runs` baseline-mode runs, cycling through the suite's tasks with failure
/// probabilities redrawn per run. Writes JSONL to `out`.
TrainingDataSummary gen_training_data(const BenchmarkSuite& suite, std::size_t runs,
                                      std::uint64_t seed, std::ostream& out);

/// Plain decode loop without any control machinery. Stops when the tracked
/// contract becomes Done or Failed, or at max_tokens.
std::vector<TokenId> sample_uncontrolled(ModelAdapter& model, std::span<const TokenId> prompt,
                                         const Contract& contract, const Vocabulary& vocab,
                                         const SamplingConfig& sampling, std::size_t max_tokens);

struct SweepPoint {
  double shift = 0.0;
  std::array<double, 4> thresholds{};
  double success = 0.0;
  double mean_corrections = 0.0;
  double mean_cost = 0.0;
};

/// Shifts all four thresholds by each offset (skipping invalid ladders) and
/// reruns the suite.
std::vector<SweepPoint> sweep_thresholds(const BenchmarkSuite& suite, const PolicyConfig& policy,
                                         const std::vector<double>& shifts, int jobs);

}  // namespace logitctl
