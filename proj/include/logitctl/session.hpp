// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#pragma once

/**
 * @file session.hpp
 * @brief Host-driven per-step hook: the host owns the model and the sampler
 *        and hands over (generated ids so far, raw logits) at every position.
 *
 * Exchange protocol, one call per position:
 *
 *   in:  ids   generated token ids so far (prompt excluded)
 *        z     raw logits for the next position, length |V|
 *   out: logits           controlled logits to sample from
 *        rollback_request n > 0 means "drop the last n ids and call again";
 *                         the returned logits are then not to be sampled
 *        done             the contract reached Done or Failed (or deadlocked)
 *
 * Between calls `ids` must extend the previous call's ids (by the sampled
 * token), or, right after a rollback request, equal the truncated prefix.
 * A session driven this way by the same model and sampler makes the same
 * decisions as Generation.
 */

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "logitctl/config_io.hpp"
#include "logitctl/controller.hpp"

namespace logitctl {

struct StepExchange {
  std::vector<double> logits;
  int rollback_request = 0;
  bool done = false;
  // Diagnostics, not part of the wire protocol.
  ActionKind action = ActionKind::Noop;
  double rho = 0.0;
  StageTag stage = StageTag::PreStart;
};

struct SessionSummary {
  bool valid_so_far = true;
  int corrections = 0;
  double cost = 0.0;
  std::size_t steps = 0;
  StageTag stage = StageTag::PreStart;
};

class HookSession {
 public:
  /// `mask_only`: the host cannot truncate its prefix; Correct degrades to Mask
  /// and Failed ends the session.
  HookSession(ContractSpec spec, PolicyConfig policy, Vocabulary vocab, bool mask_only = false);

  /// JSON-string constructor used across language boundaries.
  static HookSession open(std::string_view contract_json, std::string_view policy_json,
                          std::vector<std::string> vocab_table, bool mask_only = false);

  StepExchange step(std::span<const TokenId> ids, std::span<const double> logits);

  SessionSummary summary() const;
  const Vocabulary& vocabulary() const { return vocab_; }
  const Contract& contract() const { return contract_; }
  const ContractState& contract_state() const { return state_.contract_state; }

 private:
  void sync(std::span<const TokenId> ids);
  int roll_back(std::size_t trigger);

  Contract contract_;
  Vocabulary vocab_;
  ControllerConfig cfg_;
  bool mask_only_;

  RuntimeState state_;
  RollbackBuffer buffer_;
  std::optional<std::size_t> pending_len_;    // expected ids length after a rollback
  std::optional<int> pending_correct_depth_;  // next step is the correcting sample
  std::optional<std::size_t> resteer_until_;
  double cost_ = 0.0;
  std::size_t steps_ = 0;
  bool deadlocked_ = false;
};

// ----------------------------------------------------------------------------
// Host-side driver and recorded exchanges

struct RecordedStep {
  std::vector<TokenId> ids;
  std::vector<double> logits;
  StepExchange out;
};

struct RecordedSession {
  std::string run_id;
  std::vector<RecordedStep> steps;
  std::vector<TokenId> tokens;
  SessionSummary summary;
};

/// Reference host loop: stop at max_tokens unless the stage has failed, step
/// the model, exchange, then honour a rollback request by truncating ids and
/// cache, stop on done, otherwise sample from the returned logits.
RecordedSession drive_session(HookSession& session, ModelAdapter& model,
                              std::span<const TokenId> prompt, const SamplingConfig& sampling,
                              std::size_t max_tokens);

/// Little-endian IEEE-754 float64 bytes as lowercase hex. Exact, and -inf
/// survives (JSON numbers cannot carry it).
std::string f64_to_hex(std::span<const double> values);
std::vector<double> f64_from_hex(std::string_view hex);

nlohmann::json to_json(const RecordedSession& s);
RecordedSession recorded_session_from_json(const nlohmann::json& j);

}  // namespace logitctl
