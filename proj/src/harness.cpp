// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#include "logitctl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace logitctl {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("suite: field \"") + key + "\": " + e.what());
  }
}

std::string run_id_for(const std::string& task, std::uint64_t seed) {
  return task + "/" + std::to_string(seed);
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

// ----------------------------------------------------------------------------
// Suites

std::vector<std::uint64_t> TaskSpec::seeds() const {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < trials; ++i) out.push_back(seed_base + static_cast<std::uint64_t>(i));
  return out;
}

BenchmarkSuite suite_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("suite: expected an object");
  BenchmarkSuite suite;
  suite.name = get_or<std::string>(j, "name", "suite");
  suite.regime = get_or<std::string>(j, "regime", "structured");
  if (suite.regime != "structured" && suite.regime != "toolcall") {
    throw ConfigError("suite: regime must be \"structured\" or \"toolcall\"");
  }
  try {
    suite.sampling = sampling_mode_from_string(get_or<std::string>(j, "sampling", "greedy"));
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("suite: ") + e.what());
  }
  suite.max_tokens = get_or<std::size_t>(j, "max_tokens", suite.max_tokens);
  if (suite.max_tokens < 1) throw ConfigError("suite: max_tokens must be >= 1");
  if (!j.contains("tasks") || !j["tasks"].is_array() || j["tasks"].empty()) {
    throw ConfigError("suite: \"tasks\" must be a nonempty array");
  }
  std::set<std::string> names;
  for (const auto& t : j["tasks"]) {
    TaskSpec task;
    task.name = get_or<std::string>(t, "name", "");
    if (task.name.empty() || !names.insert(task.name).second) {
      throw ConfigError("suite: task names must be nonempty and unique");
    }
    if (t.contains("contract") && t["contract"].is_string()) {
      task.contract = load_contract_spec(base_dir / t["contract"].get<std::string>());
    } else if (t.contains("contract")) {
      task.contract = contract_spec_from_json(t["contract"]);
    } else {
      throw ConfigError("suite: task \"" + task.name + "\" has no contract");
    }
    task.trials = get_or<int>(t, "trials", 1);
    if (task.trials < 1) throw ConfigError("suite: trials must be >= 1");
    task.seed_base = get_or<std::uint64_t>(t, "seed_base", 0);
    const json model = t.value("model", json::object());
    task.p_preamble = get_or<double>(model, "p_preamble", 0.0);
    task.p_fence = get_or<double>(model, "p_fence", 0.0);
    task.p_trailing = get_or<double>(model, "p_trailing", 0.0);
    task.peak = get_or<double>(model, "peak", 5.0);
    task.noise_sigma = get_or<double>(model, "noise_sigma", 0.5);
    for (double p : {task.p_preamble, task.p_fence, task.p_trailing}) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("suite: probabilities must be in [0, 1]");
    }
    if (t.contains("values")) {
      for (const auto& [k, pool] : t["values"].items()) {
        if (!pool.is_array() || pool.empty()) {
          throw ConfigError("suite: value pool for \"" + k + "\" must be a nonempty array");
        }
        task.values[k] = pool.get<std::vector<json>>();
      }
    }
    if (t.contains("drop_keys")) {
      for (const auto& [k, p] : t["drop_keys"].items()) task.drop_keys[k] = p.get<double>();
    }
    suite.tasks.push_back(std::move(task));
  }
  return suite;
}

BenchmarkSuite load_suite(const std::filesystem::path& path) {
  return suite_from_json(parse_json(read_file(path), "suite"), path.parent_path());
}

std::string make_target(const TaskSpec& task, std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed ^ fnv1a(task.name)));
  std::string out = "{";
  bool first = true;
  for (const auto& key : task.contract.keys) {
    if (auto it = task.drop_keys.find(key.name); it != task.drop_keys.end()) {
      if (uniform01(rng) < it->second) continue;
    }
    json value;
    if (key.type == ValueType::Const) {
      value = key.const_value.value_or("");
    } else if (auto pool = task.values.find(key.name); pool != task.values.end()) {
      value = pool->second[rng() % pool->second.size()];
    } else {
      switch (key.type) {
        case ValueType::String: value = "item" + std::to_string(rng() % 1000); break;
        case ValueType::Integer: value = static_cast<int>(rng() % 1000); break;
        case ValueType::Number: value = static_cast<double>(rng() % 10000) / 100.0 + 0.25; break;
        case ValueType::Boolean: value = (rng() & 1) != 0; break;
        case ValueType::Const: break;
      }
    }
    if (!first) out += ',';
    first = false;
    out += json(key.name).dump();
    out += ':';
    out += value.dump(-1, ' ', /*ensure_ascii=*/true);
  }
  out += '}';
  return out;
}

FailureProneConfig model_config(const TaskSpec& task, std::uint64_t seed) {
  FailureProneConfig cfg;
  cfg.target = make_target(task, seed);
  cfg.p_preamble = task.p_preamble;
  cfg.p_fence = task.p_fence;
  cfg.p_trailing = task.p_trailing;
  cfg.peak = task.peak;
  cfg.noise_sigma = task.noise_sigma;
  cfg.seed = seed;
  return cfg;
}

RunRecord run_one(const TaskSpec& task, std::uint64_t seed, const BenchmarkSuite& suite,
                  const RunOptions& opts) {
  const Vocabulary& vocab = FailureProneModel::vocabulary();
  const Contract contract = Contract::compile(task.contract);
  FailureProneModel model(model_config(task, seed));
  const auto prompt = vocab.tokenize(task.name + ":\n").value_or(std::vector<TokenId>{});

  ControllerConfig cfg;
  cfg.ladder = opts.policy.ladder;
  cfg.heuristic = opts.policy.heuristic;
  cfg.classifier = opts.policy.classifier;
  cfg.sampling = {suite.sampling, seed};
  cfg.max_tokens = suite.max_tokens;

  RunRecord rec;
  rec.run_id = run_id_for(task.name, seed);
  rec.task = task.name;
  rec.seed = seed;
  rec.result = generate(model, prompt, contract, vocab, cfg);
  if (opts.check_replay) {
    FailureProneModel fresh(model_config(task, seed));
    rec.replay_ok = replay_check(rec.result, fresh, contract, vocab);
  }
  return rec;
}

std::vector<RunRecord> run_suite(const BenchmarkSuite& suite, const RunOptions& opts) {
  std::vector<std::pair<const TaskSpec*, std::uint64_t>> jobs;
  for (const auto& task : suite.tasks) {
    for (auto seed : task.seeds()) jobs.emplace_back(&task, seed);
  }
  std::vector<RunRecord> out(jobs.size());
  parallel_for(jobs.size(), opts.jobs, [&](std::size_t i) {
    out[i] = run_one(*jobs[i].first, jobs[i].second, suite, opts);
  });
  return out;
}

// ----------------------------------------------------------------------------
// Logs

json step_log_record(const std::string& run_id, const StepRecord& step) {
  const auto f = step.features.as_array();
  return {{"run_id", run_id},
          {"step", step.step},
          {"position", step.position},
          {"stage", to_string(step.stage)},
          {"features", std::vector<double>(f.begin(), f.end())},
          {"drift", step.drift},
          {"failure", step.failure},
          {"rho", step.rho},
          {"action", to_string(step.action)},
          {"resteer", step.resteer},
          {"token_id", step.token},
          {"rolled_back", step.rolled_back}};
}

json terminal_log_record(const RunRecord& run) {
  const auto& r = run.result;
  json diags = json::array();
  for (const auto& d : r.report.diagnostics) {
    diags.push_back({{"code", to_string(d.code)}, {"position", d.position}, {"message", d.message}});
  }
  return {{"run_id", run.run_id},
          {"task", run.task},
          {"seed", run.seed},
          {"valid", r.valid},
          {"schema_valid", syntactically_valid(r.report)},
          {"diagnostics", diags},
          {"corrections", r.corrections},
          {"max_rollback_used", r.max_rollback_used},
          {"wall_ms", r.wall_ms},
          {"cost", r.cost},
          {"termination", to_string(r.termination)},
          {"final_stage", to_string(r.final_state.stage)},
          {"steps", r.steps.size()},
          {"tokens", r.tokens.size()},
          {"text", r.text},
          {"replay_ok", run.replay_ok},
          {"warnings", r.warnings}};
}

void write_trajectory(std::ostream& out, const RunRecord& run) {
  for (const auto& s : run.result.steps) out << step_log_record(run.run_id, s).dump() << '\n';
  out << terminal_log_record(run).dump() << '\n';
}

// ----------------------------------------------------------------------------
// Report fold

namespace {

struct Acc {
  std::size_t runs = 0;
  std::size_t valid = 0;
  std::size_t schema_valid = 0;
  std::size_t replay_ok = 0;
  double corrections = 0.0;
  int max_rollback = 0;
  double wall_ms = 0.0;
  double cost = 0.0;
  double steps = 0.0;
  std::map<std::string, std::size_t> actions;
  std::map<std::string, std::size_t> terminations;

  void add(const json& terminal, const std::vector<const json*>& steps_of_run) {
    ++runs;
    valid += terminal.value("valid", false) ? 1 : 0;
    schema_valid += terminal.value("schema_valid", false) ? 1 : 0;
    replay_ok += terminal.value("replay_ok", false) ? 1 : 0;
    corrections += terminal.value("corrections", 0);
    max_rollback = std::max(max_rollback, terminal.value("max_rollback_used", 0));
    wall_ms += terminal.value("wall_ms", 0.0);
    cost += terminal.value("cost", 0.0);
    steps += static_cast<double>(steps_of_run.size());
    ++terminations[terminal.value("termination", std::string("unknown"))];
    for (const json* s : steps_of_run) ++actions[s->value("action", std::string("noop"))];
  }

  json to_json(double lambda) const {
    const double n = runs > 0 ? static_cast<double>(runs) : 1.0;
    json hist = json::object();
    for (auto kind : {ActionKind::Noop, ActionKind::Bias, ActionKind::Temperature,
                      ActionKind::Mask, ActionKind::Correct}) {
      const std::string k(to_string(kind));
      hist[k] = actions.count(k) ? actions.at(k) : 0;
    }
    return {{"runs", runs},
            {"valid", valid},
            {"first_attempt_success", static_cast<double>(valid) / n},
            {"schema_validity", static_cast<double>(schema_valid) / n},
            {"mean_corrections", corrections / n},
            {"max_rollback_depth", max_rollback},
            {"mean_wall_ms", wall_ms / n},
            {"mean_steps", steps / n},
            {"interventions", hist},
            {"cost", cost},
            {"mean_cost", cost / n},
            {"weighted_cost", lambda * cost / n},
            {"replay_ok_rate", static_cast<double>(replay_ok) / n},
            {"terminations", terminations}};
  }
};

}  // namespace

json fold_report(const std::vector<json>& records, const ReportMeta& meta) {
  struct Run {
    std::vector<const json*> steps;
    const json* terminal = nullptr;
  };
  std::map<std::string, Run> runs;
  for (const auto& r : records) {
    if (!r.is_object() || !r.contains("run_id")) continue;
    auto& run = runs[r["run_id"].get<std::string>()];
    if (r.contains("valid")) run.terminal = &r;
    else run.steps.push_back(&r);
  }

  std::map<std::string, Acc> per_task;
  std::map<std::string, std::vector<std::uint64_t>> seeds;
  Acc overall;
  std::size_t incomplete = 0;
  for (auto& [id, run] : runs) {
    if (!run.terminal) {
      ++incomplete;
      continue;
    }
    std::sort(run.steps.begin(), run.steps.end(),
              [](const json* a, const json* b) { return a->value("step", 0) < b->value("step", 0); });
    const std::string task = run.terminal->value("task", std::string("default"));
    per_task[task].add(*run.terminal, run.steps);
    overall.add(*run.terminal, run.steps);
    seeds[task].push_back(run.terminal->value("seed", std::uint64_t{0}));
  }
  json tasks = json::object();
  for (const auto& [name, acc] : per_task) tasks[name] = acc.to_json(meta.lambda);
  for (auto& [name, s] : seeds) std::sort(s.begin(), s.end());

  return {{"suite", meta.suite},
          {"regime", meta.regime},
          {"policy", meta.policy},
          {"sampling", meta.sampling},
          {"lambda", meta.lambda},
          {"seeds", seeds},
          {"incomplete_runs", incomplete},
          {"tasks", tasks},
          {"overall", overall.to_json(meta.lambda)}};
}

json fold_report(std::istream& jsonl, const ReportMeta& meta) {
  std::vector<json> records;
  std::string line;
  while (std::getline(jsonl, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (!j.is_discarded()) records.push_back(std::move(j));
  }
  return fold_report(records, meta);
}

json strip_timing(json report) {
  auto strip = [](json& m) { m.erase("mean_wall_ms"); };
  if (report.contains("overall")) strip(report["overall"]);
  if (report.contains("tasks")) {
    for (auto& [k, v] : report["tasks"].items()) strip(v);
  }
  return report;
}

json write_run_outputs(const std::vector<RunRecord>& runs, const ReportMeta& meta,
                       const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::ostringstream logs;
  for (const auto& r : runs) write_trajectory(logs, r);
  write_file(out_dir / "trajectories.jsonl", logs.str());

  std::istringstream in(logs.str());
  json report = fold_report(in, meta);
  write_file(out_dir / "report.json", report.dump(2) + "\n");
  return report;
}

// ----------------------------------------------------------------------------
// Comparison

namespace {

std::string fmt(const char* pattern, double a, double b, double c) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

double tidy(double x) { return std::abs(x) < 0.05 ? 0.0 : x; }

}  // namespace

std::string format_rate_delta(double baseline, double controlled) {
  const double b = baseline * 100.0;
  const double c = controlled * 100.0;
  return fmt("%.1f%% → %.1f%% (%+.1fpp)", b, c, tidy(c - b));
}

std::string format_latency_delta(double baseline_ms, double controlled_ms) {
  if (baseline_ms <= 0.0) {
    return fmt("%.2fms → %.2fms (n/a)", baseline_ms, controlled_ms, 0.0);
  }
  const double pct = (controlled_ms - baseline_ms) / baseline_ms * 100.0;
  return fmt("%.2fms → %.2fms (%+.1f%%)", baseline_ms, controlled_ms, tidy(pct));
}

Comparison compare(const json& baseline, const json& controlled) {
  if (baseline.value("suite", std::string()) != controlled.value("suite", std::string())) {
    throw InvalidInput("compare: reports cover different suites");
  }
  if (baseline.value("seeds", json()) != controlled.value("seeds", json())) {
    throw InvalidInput("compare: reports cover different tasks or seeds");
  }
  Comparison out;
  out.table = json::object();
  std::ostringstream text;
  auto row = [&](const std::string& name, const json& b, const json& c) {
    const double sb = b.at("first_attempt_success").get<double>();
    const double sc = c.at("first_attempt_success").get<double>();
    const double vb = b.at("schema_validity").get<double>();
    const double vc = c.at("schema_validity").get<double>();
    const double lb = b.at("mean_wall_ms").get<double>();
    const double lc = c.at("mean_wall_ms").get<double>();
    out.table[name] = {{"success_delta_pp", (sc - sb) * 100.0},
                       {"schema_validity_delta_pp", (vc - vb) * 100.0},
                       {"latency_ratio", lb > 0.0 ? lc / lb : 0.0},
                       {"corrections_delta", c.at("mean_corrections").get<double>() -
                                                 b.at("mean_corrections").get<double>()}};
    text << name << ": success " << format_rate_delta(sb, sc) << "; schema "
         << format_rate_delta(vb, vc) << "; latency " << format_latency_delta(lb, lc) << '\n';
  };
  for (const auto& [name, b] : baseline.at("tasks").items()) {
    row(name, b, controlled.at("tasks").at(name));
  }
  row("overall", baseline.at("overall"), controlled.at("overall"));
  out.text = text.str();
  return out;
}

// ----------------------------------------------------------------------------
// Training data, reference sampler, sweep

TrainingDataSummary gen_training_data(const BenchmarkSuite& suite, std::size_t runs,
                                      std::uint64_t seed, std::ostream& out) {
  if (runs < 1) throw InvalidInput("gen_training_data: runs must be >= 1");
  RunOptions opts;
  opts.policy.ladder = LadderConfig::baseline();
  opts.check_replay = false;

  TrainingDataSummary summary;
  for (std::size_t i = 0; i < runs; ++i) {
    const std::uint64_t run_seed = seed + i;
    TaskSpec task = suite.tasks[i % suite.tasks.size()];
    std::mt19937_64 rng(mix(run_seed ^ 0xD1B54A32D192ED03ull));
    task.p_preamble = 0.6 * uniform01(rng);
    task.p_fence = 0.4 * uniform01(rng);
    task.p_trailing = 0.3 * uniform01(rng);
    RunRecord rec = run_one(task, run_seed, suite, opts);
    rec.run_id = "train/" + rec.run_id;
    write_trajectory(out, rec);
    ++summary.runs;
    (rec.result.valid ? summary.valid : summary.invalid) += 1;
  }
  return summary;
}

std::vector<TokenId> sample_uncontrolled(ModelAdapter& model, std::span<const TokenId> prompt,
                                         const Contract& contract, const Vocabulary& vocab,
                                         const SamplingConfig& sampling, std::size_t max_tokens) {
  std::mt19937_64 rng(sampling.seed);
  std::vector<TokenId> seq(prompt.begin(), prompt.end());
  CacheHandle cache;
  ContractState state = contract.initial_state();
  std::size_t generated = 0;
  while (generated < max_tokens && !is_absorbing(state.stage)) {
    const LogitVector z = model.step({seq, prompt.size(), cache});
    const TokenId t = sample(softmax(z), sampling.mode, rng);
    seq.push_back(t);
    ++generated;
    state = contract.step(state, t, vocab, Enforcement::Enforcing).state;
  }
  return {seq.begin() + static_cast<std::ptrdiff_t>(prompt.size()), seq.end()};
}

std::vector<SweepPoint> sweep_thresholds(const BenchmarkSuite& suite, const PolicyConfig& policy,
                                         const std::vector<double>& shifts, int jobs) {
  std::vector<SweepPoint> out;
  for (double s : shifts) {
    RunOptions opts;
    opts.policy = policy;
    opts.jobs = jobs;
    opts.check_replay = false;
    for (auto& t : opts.policy.ladder.thresholds) t = std::clamp(t + s, 0.0, 1.0);
    try {
      opts.policy.ladder.check();
    } catch (const InvalidInput&) {
      continue;
    }
    const auto runs = run_suite(suite, opts);
    SweepPoint p;
    p.shift = s;
    p.thresholds = opts.policy.ladder.thresholds;
    for (const auto& r : runs) {
      p.success += r.result.valid ? 1.0 : 0.0;
      p.mean_corrections += r.result.corrections;
      p.mean_cost += r.result.cost;
    }
    const double n = static_cast<double>(std::max<std::size_t>(runs.size(), 1));
    p.success /= n;
    p.mean_corrections /= n;
    p.mean_cost /= n;
    out.push_back(p);
  }
  return out;
}

}  // namespace logitctl
