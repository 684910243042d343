// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#include "logitctl/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace logitctl {

using nlohmann::json;

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + ": malformed JSON at byte " + std::to_string(e.byte) +
                          ": " + e.what(),
                      e.byte);
  }
}

namespace {

void reject_unknown(const json& j, std::initializer_list<std::string_view> known,
                    std::string_view what) {
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (auto name : known) ok = ok || k == name;
    if (!ok) throw ConfigError(std::string(what) + ": unknown field \"" + k + "\"");
  }
}

template <typename T>
void read_opt(const json& j, const char* name, T& out, std::string_view what) {
  if (!j.contains(name)) return;
  try {
    out = j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": field \"" + name + "\": " + e.what());
  }
}

}  // namespace

// ----------------------------------------------------------------------------
// Contract spec

ContractSpec contract_spec_from_json(const json& j) {
  constexpr std::string_view what = "contract spec";
  if (!j.is_object()) throw ConfigError("contract spec: expected an object");
  reject_unknown(j, {"keys", "ordered", "allow_whitespace", "allow_preamble", "permit_raw_newlines"},
                 what);
  if (!j.contains("keys") || !j["keys"].is_array()) {
    throw ConfigError("contract spec: \"keys\" must be an array");
  }
  ContractSpec spec;
  for (const auto& k : j["keys"]) {
    if (!k.is_object()) throw ConfigError("contract spec: each key must be an object");
    reject_unknown(k, {"name", "type", "value"}, what);
    KeySpec key;
    std::string type = "string";
    read_opt(k, "name", key.name, what);
    read_opt(k, "type", type, what);
    try {
      key.type = value_type_from_string(type);
    } catch (const SpecError& e) {
      throw ConfigError(std::string("contract spec: ") + e.what());
    }
    if (k.contains("value")) {
      const auto& v = k["value"];
      if (!v.is_string()) throw ConfigError("contract spec: const \"value\" must be a string");
      key.const_value = v.get<std::string>();
    }
    spec.keys.push_back(std::move(key));
  }
  read_opt(j, "ordered", spec.ordered, what);
  read_opt(j, "allow_whitespace", spec.allow_whitespace, what);
  read_opt(j, "allow_preamble", spec.allow_preamble, what);
  read_opt(j, "permit_raw_newlines", spec.permit_raw_newlines, what);
  try {
    (void)Contract::compile(spec);
  } catch (const SpecError& e) {
    throw ConfigError(std::string("contract spec: ") + e.what());
  }
  return spec;
}

json to_json(const ContractSpec& spec) {
  json keys = json::array();
  for (const auto& k : spec.keys) {
    json o = {{"name", k.name}, {"type", to_string(k.type)}};
    if (k.const_value) o["value"] = *k.const_value;
    keys.push_back(std::move(o));
  }
  return {{"keys", keys},
          {"ordered", spec.ordered},
          {"allow_whitespace", spec.allow_whitespace},
          {"allow_preamble", spec.allow_preamble},
          {"permit_raw_newlines", spec.permit_raw_newlines}};
}

ContractSpec parse_contract_spec(std::string_view text) {
  return contract_spec_from_json(parse_json(text, "contract spec"));
}

// ----------------------------------------------------------------------------
// Classifier

FailureClassifier classifier_from_json(const json& j) {
  constexpr std::string_view what = "classifier";
  if (!j.is_object()) throw ConfigError("classifier: expected an object");
  reject_unknown(j, {"weights", "bias", "feature_version"}, what);
  int version = kFeatureVersion;
  read_opt(j, "feature_version", version, what);
  if (version != kFeatureVersion) {
    throw ConfigError("classifier: unsupported feature_version " + std::to_string(version));
  }
  std::vector<double> w;
  read_opt(j, "weights", w, what);
  if (w.size() != kFeatureCount) {
    throw ConfigError("classifier: expected " + std::to_string(kFeatureCount) + " weights, got " +
                      std::to_string(w.size()));
  }
  FailureClassifier c;
  std::copy(w.begin(), w.end(), c.weights.begin());
  read_opt(j, "bias", c.bias, what);
  return c;
}

json to_json(const FailureClassifier& c) {
  return {{"weights", std::vector<double>(c.weights.begin(), c.weights.end())},
          {"bias", c.bias},
          {"feature_version", kFeatureVersion}};
}

// ----------------------------------------------------------------------------
// Policy

PolicyConfig policy_from_json(const json& j) {
  constexpr std::string_view what = "policy";
  if (!j.is_object()) throw ConfigError("policy: expected an object");
  reject_unknown(j,
                 {"thresholds", "beta", "tau", "rollback_depth", "max_rollback_depth",
                  "max_corrections", "value_stage_cap", "allow_value_stage_mask",
                  "temperature_only_band", "resteer_amplification", "lambda", "heuristic",
                  "classifier"},
                 what);
  PolicyConfig p;
  auto& l = p.ladder;
  if (j.contains("thresholds")) {
    std::vector<double> t;
    read_opt(j, "thresholds", t, what);
    if (t.size() != 4) throw ConfigError("policy: \"thresholds\" must have 4 entries");
    std::copy(t.begin(), t.end(), l.thresholds.begin());
  }
  read_opt(j, "beta", l.beta, what);
  read_opt(j, "tau", l.tau, what);
  read_opt(j, "rollback_depth", l.rollback_depth, what);
  read_opt(j, "max_rollback_depth", l.max_rollback_depth, what);
  read_opt(j, "max_corrections", l.max_corrections, what);
  if (j.contains("value_stage_cap")) {
    std::string cap;
    read_opt(j, "value_stage_cap", cap, what);
    try {
      l.value_stage_cap = action_kind_from_string(cap);
    } catch (const InvalidInput& e) {
      throw ConfigError(std::string("policy: ") + e.what());
    }
  }
  read_opt(j, "allow_value_stage_mask", l.allow_value_stage_mask, what);
  read_opt(j, "temperature_only_band", l.temperature_only_band, what);
  read_opt(j, "resteer_amplification", l.resteer_amplification, what);
  read_opt(j, "lambda", l.lambda, what);
  if (j.contains("heuristic")) {
    const auto& h = j["heuristic"];
    if (!h.is_object()) throw ConfigError("policy: \"heuristic\" must be an object");
    reject_unknown(h, {"w_mass", "w_argmax", "w_entropy"}, what);
    read_opt(h, "w_mass", p.heuristic.w_mass, what);
    read_opt(h, "w_argmax", p.heuristic.w_argmax, what);
    read_opt(h, "w_entropy", p.heuristic.w_entropy, what);
  }
  if (j.contains("classifier") && !j["classifier"].is_null()) {
    p.classifier = classifier_from_json(j["classifier"]);
  }
  try {
    l.check();
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("policy: ") + e.what());
  }
  return p;
}

json to_json(const PolicyConfig& p) {
  const auto& l = p.ladder;
  json j = {
      {"thresholds", std::vector<double>(l.thresholds.begin(), l.thresholds.end())},
      {"beta", l.beta},
      {"tau", l.tau},
      {"rollback_depth", l.rollback_depth},
      {"max_rollback_depth", l.max_rollback_depth},
      {"max_corrections", l.max_corrections},
      {"value_stage_cap", to_string(l.value_stage_cap)},
      {"allow_value_stage_mask", l.allow_value_stage_mask},
      {"temperature_only_band", l.temperature_only_band},
      {"resteer_amplification", l.resteer_amplification},
      {"lambda", l.lambda},
      {"heuristic",
       {{"w_mass", p.heuristic.w_mass},
        {"w_argmax", p.heuristic.w_argmax},
        {"w_entropy", p.heuristic.w_entropy}}},
  };
  j["classifier"] = p.classifier ? to_json(*p.classifier) : json(nullptr);
  return j;
}

PolicyConfig parse_policy(std::string_view text) {
  if (text == "baseline") {
    PolicyConfig p;
    p.ladder = LadderConfig::baseline();
    return p;
  }
  if (text == "default") return PolicyConfig{};
  return policy_from_json(parse_json(text, "policy"));
}

// ----------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

ContractSpec load_contract_spec(const std::filesystem::path& path) {
  return parse_contract_spec(read_file(path));
}

PolicyConfig load_policy(const std::string& spec) {
  if (spec == "baseline" || spec == "default") return parse_policy(spec);
  return parse_policy(read_file(spec));
}

FailureClassifier load_classifier(const std::filesystem::path& path) {
  return classifier_from_json(parse_json(read_file(path), "classifier"));
}

}  // namespace logitctl
