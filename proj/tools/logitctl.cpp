// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

// logitctl: run benchmark suites, compare reports, train the failure
// classifier, validate outputs against a contract, emit default configs.
//
// Exit codes: 0 success, 1 I/O error, 2 invalid config or input.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "logitctl/config_io.hpp"
#include "logitctl/harness.hpp"
#include "logitctl/session.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace logitctl;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;

json load_report(const std::string& path) {
  fs::path p(path);
  if (fs::is_directory(p)) p /= "report.json";
  return parse_json(read_file(p), "report");
}

std::vector<fs::path> jsonl_files(const fs::path& dir) {
  std::vector<fs::path> out;
  if (fs::is_regular_file(dir)) return {dir};
  if (!fs::is_directory(dir)) throw IoError("no such log directory: " + dir.string());
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw IoError("no .jsonl files under " + dir.string());
  return out;
}

int cmd_run(const std::string& suite_path, const std::string& policy_spec,
            const std::string& classifier_path, const std::string& out_dir, int jobs,
            bool no_replay) {
  const auto suite = load_suite(suite_path);
  RunOptions opts;
  opts.policy = load_policy(policy_spec);
  if (!classifier_path.empty()) opts.policy.classifier = load_classifier(classifier_path);
  opts.jobs = jobs;
  opts.check_replay = !no_replay;
  const auto runs = run_suite(suite, opts);

  ReportMeta meta{suite.name, suite.regime, opts.policy.ladder.disabled() ? "baseline" : "controlled",
                  std::string(to_string(suite.sampling)), opts.policy.ladder.lambda};
  const json report = write_run_outputs(runs, meta, out_dir);
  const auto& o = report["overall"];
  char line[256];
  std::snprintf(line, sizeof line,
                "%s %s: %zu runs, success %.1f%%, schema %.1f%%, mean corrections %.2f, "
                "max rollback %d\n",
                meta.policy.c_str(), suite.name.c_str(), o["runs"].get<std::size_t>(),
                o["first_attempt_success"].get<double>() * 100.0,
                o["schema_validity"].get<double>() * 100.0, o["mean_corrections"].get<double>(),
                o["max_rollback_depth"].get<int>());
  std::cout << line << "wrote " << (fs::path(out_dir) / "report.json").string() << "\n";
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b, bool as_json) {
  const auto cmp = compare(load_report(a), load_report(b));
  if (as_json) std::cout << cmp.table.dump(2) << "\n";
  else std::cout << cmp.text;
  return 0;
}

int cmd_train(const std::string& logs, const std::string& out, const std::string& spec_path,
              const TrainHyper& hyper) {
  std::optional<ContractSpec> spec;
  if (!spec_path.empty()) spec = load_contract_spec(spec_path);
  std::stringstream all;
  for (const auto& f : jsonl_files(logs)) all << read_file(f) << '\n';
  const auto data = label_trajectories(all, spec ? &*spec : nullptr);
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
  if (data.examples.empty()) throw InvalidInput("no labeled steps to train on");

  std::vector<TrainingExample> train;
  std::vector<TrainingExample> held;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    (is_held_out(data.run_ids[i]) ? held : train).push_back(data.examples[i]);
  }
  if (train.empty()) train = held;
  const auto result = train_classifier(train, hyper);
  write_file(out, to_json(result.model).dump(2) + "\n");
  std::cout << "runs " << data.runs << ", steps " << data.examples.size() << " (train "
            << train.size() << ", held-out " << held.size() << ")\n"
            << "final loss " << result.final_loss << ", train accuracy "
            << accuracy(result.model, train);
  if (!held.empty()) std::cout << ", held-out accuracy " << accuracy(result.model, held);
  std::cout << "\nwrote " << out << "\n";
  return 0;
}

int cmd_validate(const std::string& spec_path, const std::string& input_path) {
  const auto spec = load_contract_spec(spec_path);
  const std::string text = read_file(input_path);
  const auto report = validate(text, spec);
  json diags = json::array();
  for (const auto& d : report.diagnostics) {
    diags.push_back({{"code", to_string(d.code)}, {"position", d.position}, {"message", d.message}});
  }
  std::cout << json{{"valid", report.valid}, {"diagnostics", diags}}.dump(2) << "\n";
  return 0;
}

int cmd_config_init(const std::string& out) {
  const std::string text = to_json(PolicyConfig{}).dump(2) + "\n";
  if (out.empty()) std::cout << text;
  else write_file(out, text);
  return 0;
}

int cmd_gen_data(const std::string& suite_path, std::size_t runs, std::uint64_t seed,
                 const std::string& out) {
  const auto suite = load_suite(suite_path);
  std::ostringstream logs;
  const auto summary = gen_training_data(suite, runs, seed, logs);
  write_file(out, logs.str());
  std::cout << summary.runs << " runs (" << summary.valid << " valid, " << summary.invalid
            << " invalid), wrote " << out << "\n";
  return 0;
}

int cmd_sweep(const std::string& suite_path, const std::string& policy_spec,
              const std::vector<double>& shifts, int jobs) {
  const auto suite = load_suite(suite_path);
  const auto policy = load_policy(policy_spec);
  json rows = json::array();
  for (const auto& p : sweep_thresholds(suite, policy, shifts, jobs)) {
    rows.push_back({{"shift", p.shift},
                    {"thresholds", p.thresholds},
                    {"success", p.success},
                    {"mean_corrections", p.mean_corrections},
                    {"mean_cost", p.mean_cost}});
  }
  std::cout << rows.dump(2) << "\n";
  return 0;
}

int cmd_exchanges(const std::string& suite_path, const std::string& policy_spec, std::size_t sessions,
                  const std::string& out) {
  const auto suite = load_suite(suite_path);
  const auto policy = load_policy(policy_spec);
  const auto& task = suite.tasks.front();
  const Vocabulary& vocab = FailureProneModel::vocabulary();
  const auto prompt = vocab.tokenize(task.name + ":\n").value_or(std::vector<TokenId>{});

  json doc = {{"contract", to_json(task.contract)},
              {"policy", to_json(policy)},
              {"vocab", vocab.texts()},
              {"mask_only", false},
              {"sessions", json::array()}};
  std::size_t steps = 0;
  const auto seeds = task.seeds();
  for (std::size_t i = 0; i < std::min(sessions, seeds.size()); ++i) {
    HookSession session(task.contract, policy, vocab);
    FailureProneModel model(model_config(task, seeds[i]));
    auto rec = drive_session(session, model, prompt, {suite.sampling, seeds[i]}, suite.max_tokens);
    rec.run_id = task.name + "/" + std::to_string(seeds[i]);
    steps += rec.steps.size();
    doc["sessions"].push_back(to_json(rec));
  }
  write_file(out, doc.dump(1) + "\n");
  std::cout << doc["sessions"].size() << " sessions, " << steps << " exchanges, wrote " << out
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Token-level output-contract controller: benchmark and tooling CLI"};
  app.require_subcommand(1);

  std::string suite, policy = "default", out, classifier, a, b, logs, spec, input;
  int jobs = 1;
  bool no_replay = false, as_json = false;
  TrainHyper hyper;
  std::size_t runs = 500, sessions = 8;
  std::uint64_t seed = 0;
  std::vector<double> shifts{-0.15, -0.1, -0.05, 0.0, 0.05, 0.1};

  auto* run = app.add_subcommand("run", "Run a benchmark suite once per (task, seed)");
  run->add_option("--suite", suite, "Suite JSON file")->required();
  run->add_option("--policy", policy, "Policy JSON file, 'baseline' or 'default'")->required();
  run->add_option("--classifier", classifier, "Classifier JSON file");
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--jobs,-j", jobs, "Parallel runs")->check(CLI::PositiveNumber);
  run->add_flag("--no-replay", no_replay, "Skip the replay check");

  auto* cmp = app.add_subcommand("compare", "Paired deltas between two reports");
  cmp->add_option("baseline", a, "Baseline report.json or run directory")->required();
  cmp->add_option("controlled", b, "Controlled report.json or run directory")->required();
  cmp->add_flag("--json", as_json, "Emit the delta table as JSON");

  auto* train = app.add_subcommand("train", "Train the failure classifier from trajectory logs");
  train->add_option("--logs", logs, "Directory (or file) of .jsonl logs")->required();
  train->add_option("--out", out, "Classifier JSON output")->required();
  train->add_option("--spec", spec, "Contract spec to re-validate terminal texts");
  train->add_option("--lr", hyper.learning_rate, "Learning rate");
  train->add_option("--epochs", hyper.epochs, "Full-batch epochs");
  train->add_option("--l2", hyper.l2, "L2 penalty on weights");

  auto* val = app.add_subcommand("validate", "Validate a file against a contract spec");
  val->add_option("--spec", spec, "Contract spec JSON")->required();
  val->add_option("--input", input, "Text to validate")->required();

  auto* config = app.add_subcommand("config", "Configuration helpers");
  auto* init = config->add_subcommand("init", "Print the default policy config");
  init->add_option("--out", out, "Write to file instead of stdout");
  config->require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "Baseline runs with varied failure rates for training");
  gen->add_option("--suite", suite, "Suite JSON file")->required();
  gen->add_option("--runs", runs, "Number of runs")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "First seed");
  gen->add_option("--out", out, "JSONL output file")->required();

  auto* sweep = app.add_subcommand("sweep", "Rerun a suite with shifted thresholds");
  sweep->add_option("--suite", suite, "Suite JSON file")->required();
  sweep->add_option("--policy", policy, "Base policy JSON file (default: built-in)");
  sweep->add_option("--shifts", shifts, "Threshold offsets");
  sweep->add_option("--jobs,-j", jobs, "Parallel runs")->check(CLI::PositiveNumber);

  auto* exch = app.add_subcommand("exchanges", "Record per-step hook exchanges as golden files");
  exch->add_option("--suite", suite, "Suite JSON file (first task is used)")->required();
  exch->add_option("--policy", policy, "Policy JSON file, 'baseline' or 'default' (default)");
  exch->add_option("--sessions", sessions, "Number of sessions")->check(CLI::PositiveNumber);
  exch->add_option("--out", out, "Output JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;  // usage errors count as invalid input
  }

  try {
    if (*run) return cmd_run(suite, policy, classifier, out, jobs, no_replay);
    if (*cmp) return cmd_compare(a, b, as_json);
    if (*train) return cmd_train(logs, out, spec, hyper);
    if (*val) return cmd_validate(spec, input);
    if (*init) return cmd_config_init(out);
    if (*gen) return cmd_gen_data(suite, runs, seed, out);
    if (*sweep) return cmd_sweep(suite, policy, shifts, jobs);
    if (*exch) return cmd_exchanges(suite, policy, sessions, out);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
