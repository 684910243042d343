// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#pragma once

// JSON documents for contract specs, policy configs and classifiers.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "logitctl/contract.hpp"
#include "logitctl/drift.hpp"
#include "logitctl/logit_core.hpp"
#include "logitctl/policy.hpp"

namespace logitctl {

/// Malformed or semantically invalid configuration. `offset` is the byte
/// offset of a JSON syntax error when known.
class ConfigError : public InvalidInput {
 public:
  explicit ConfigError(const std::string& what, std::optional<std::size_t> offset = std::nullopt)
      : InvalidInput(what), offset_(offset) {}
  std::optional<std::size_t> offset() const { return offset_; }

 private:
  std::optional<std::size_t> offset_;
};

/// Unreadable or unwritable file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything the controller reads from a policy file.
struct PolicyConfig {
  LadderConfig ladder;
  HeuristicWeights heuristic;
  std::optional<FailureClassifier> classifier;
};

/// Parses JSON text, mapping syntax errors to ConfigError with the offset.
nlohmann::json parse_json(std::string_view text, std::string_view what);

ContractSpec contract_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ContractSpec& spec);
ContractSpec parse_contract_spec(std::string_view text);

/// Missing fields take their defaults; unknown fields are rejected.
PolicyConfig policy_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PolicyConfig& policy);
/// Accepts "baseline" (ladder disabled) and "default" as shorthands.
PolicyConfig parse_policy(std::string_view text);

FailureClassifier classifier_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FailureClassifier& c);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

ContractSpec load_contract_spec(const std::filesystem::path& path);
/// `spec` is a path, "baseline" (ladder disabled) or "default".
PolicyConfig load_policy(const std::string& spec);
FailureClassifier load_classifier(const std::filesystem::path& path);

}  // namespace logitctl
