// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#pragma once

/**
 * @file controller.hpp
 * @brief Token-level control loop: observe -> predict -> control -> sample -> update.
 *
 * One Generation owns its RuntimeState, rollback buffer, RNG and cache handle
 * and is driven from a single thread. Contract, vocabulary and config are
 * shared read-only.
 *
 * The composite correct action pops up to `rollback_depth` snapshots (one per
 * sampled token), truncates the model cache to the restored position, and
 * re-steers every position up to and including the one that triggered the
 * correction with mask + amplified bias over the allowlist.
 */

#include <any>
#include <chrono>
#include <cstddef>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "logitctl/contract.hpp"
#include "logitctl/drift.hpp"
#include "logitctl/logit_core.hpp"
#include "logitctl/policy.hpp"

namespace logitctl {

// ============================================================================
// Model adapter
// ============================================================================

/// Opaque per-generation prefix cache. `length` counts cached positions,
/// prompt included; `state` belongs to the adapter.
struct CacheHandle {
  std::size_t length = 0;
  std::any state;
};

struct StepContext {
  std::span<const TokenId> prefix;  // prompt followed by generated tokens
  std::size_t prompt_len = 0;
  CacheHandle& cache;
};

/// Step-wise decoding backend. Implementations must be deterministic given
/// the prefix, and step() after truncate(k) must reproduce the logits an
/// uncached step would give for the same prefix.
class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;
  virtual std::size_t vocab_size() const = 0;
  /// Next-token logits for ctx.prefix; extends ctx.cache to cover it.
  virtual LogitVector step(StepContext ctx) = 0;
  /// Drops cached positions at and beyond keep_len.
  virtual void truncate(CacheHandle& cache, std::size_t keep_len) = 0;
  /// Whether one instance may serve concurrent generations.
  virtual bool concurrent_safe() const { return false; }
};

// ============================================================================
// Runtime state
// ============================================================================

struct RuntimeState {
  std::vector<TokenId> tokens;
  LogitVector logits_last;
  ProbDistribution dist_last;
  double entropy_last = 0.0;
  ContractState contract_state;
  double drift_last = 0.0;
  double failure_last = 0.0;
  int corrections = 0;
  int steps_since_progress = 0;
  std::size_t cache_len = 0;
};

struct Snapshot {
  std::size_t tokens_len = 0;
  ContractState contract_state;
  std::size_t cache_len = 0;
  int steps_since_progress = 0;
};

/// Ring of the most recent snapshots, oldest dropped first.
class RollbackBuffer {
 public:
  explicit RollbackBuffer(std::size_t capacity) : capacity_(capacity) {}

  void push(const Snapshot& s);
  /// Pops min(n, size()) snapshots and returns the oldest one popped along
  /// with the count. Returns nullopt when empty or n == 0.
  std::optional<std::pair<Snapshot, std::size_t>> pop(std::size_t n);
  std::size_t size() const { return ring_.size(); }
  bool empty() const { return ring_.empty(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::deque<Snapshot> ring_;
};

// ============================================================================
// Configuration and results
// ============================================================================

struct SamplingConfig {
  SamplingMode mode = SamplingMode::Greedy;
  std::uint64_t seed = 0;
};

struct ControllerConfig {
  LadderConfig ladder;
  HeuristicWeights heuristic;
  std::optional<FailureClassifier> classifier;  // absent: F_t = 0
  SamplingConfig sampling;
  std::size_t max_tokens = 128;
};

enum class Termination { Done, Failed, MaxTokens, Deadlock };

std::string_view to_string(Termination t);

struct StepRecord {
  std::size_t step = 0;
  std::size_t position = 0;  // generated tokens before this step
  StageTag stage = StageTag::PreStart;
  DriftFeatures features;
  double drift = 0.0;
  double failure = 0.0;
  double rho = 0.0;
  ActionKind action = ActionKind::Noop;
  bool resteer = false;  // sampled inside a correction's re-steer window
  TokenId token = 0;
  int rolled_back = 0;   // tokens dropped immediately before this step
  LogitVector raw_logits;
};

struct RunResult {
  std::vector<TokenId> prompt;
  std::vector<TokenId> tokens;
  std::string text;
  bool valid = false;
  ValidationReport report;
  std::vector<StepRecord> steps;
  int corrections = 0;
  int max_rollback_used = 0;
  double wall_ms = 0.0;
  double cost = 0.0;
  Termination termination = Termination::MaxTokens;
  ContractState final_state;
  std::vector<std::string> warnings;
};

// ============================================================================
// Single-step control (observe, predict, control)
// ============================================================================

struct ControlOutcome {
  ProbDistribution dist;
  double entropy = 0.0;
  TokenSet allowed;
  DriftFeatures features;
  double drift = 0.0;
  double failure = 0.0;
  double rho = 0.0;
  /// As decided by the ladder; may be Correct.
  ControlAction action;
  /// Logits to sample from. For Correct this is the re-steered vector.
  LogitVector controlled;
  /// Tokens the caller should drop before re-stepping (Correct only).
  int rollback_request = 0;
  bool deadlock = false;
};

/// Everything the loop does for one position short of sampling. Pure.
ControlOutcome control_step(const LogitVector& logits, const ContractState& state,
                            int steps_since_progress, int corrections,
                            std::size_t rollback_available, const Contract& contract,
                            const Vocabulary& vocab, const ControllerConfig& cfg);

/// mask(allowed) followed by bias(allowed, resteer_amplification * beta).
LogitVector resteer(const LogitVector& logits, const TokenSet& allowed, const LadderConfig& cfg);

// ============================================================================
// Generation
// ============================================================================

class Generation {
 public:
  Generation(ModelAdapter& model, std::span<const TokenId> prompt, const Contract& contract,
             const Vocabulary& vocab, ControllerConfig cfg);

  bool finished() const { return termination_.has_value(); }
  /// One loop iteration: a sampled token, a correction, or termination.
  void advance();
  RunResult run();

  /// Rolls back min(n, available) tokens and re-steers through
  /// `trigger_position`. Returns false, recording a warning, if the budget is
  /// spent or the buffer is empty.
  bool correct_step(std::size_t trigger_position);

  const RuntimeState& state() const { return state_; }
  const RollbackBuffer& buffer() const { return buffer_; }
  RunResult result() const;

 private:
  LogitVector observe();
  void commit(const LogitVector& raw, const ControlOutcome& outcome, ActionKind recorded,
              const ControlAction& costed, const LogitVector& controlled, int rolled_back);
  void finish(Termination t);
  bool resteering() const;

  ModelAdapter& model_;
  std::vector<TokenId> prompt_;
  const Contract& contract_;
  const Vocabulary& vocab_;
  ControllerConfig cfg_;

  RuntimeState state_;
  RollbackBuffer buffer_;
  CacheHandle cache_;
  std::mt19937_64 rng_;
  std::optional<std::size_t> resteer_until_;

  std::vector<StepRecord> records_;
  std::vector<std::string> warnings_;
  int max_rollback_used_ = 0;
  double cost_ = 0.0;
  std::optional<Termination> termination_;
  std::chrono::steady_clock::time_point started_;
  double wall_ms_ = 0.0;
};

/// Runs one generation to completion. Exactly one attempt, no retries.
RunResult generate(ModelAdapter& model, std::span<const TokenId> prompt, const Contract& contract,
                   const Vocabulary& vocab, const ControllerConfig& cfg);

/// Recomputes every recorded step from scratch (fresh cache each time) and
/// checks the raw logits bit-for-bit, the token history, and the final
/// contract stage.
bool replay_check(const RunResult& result, ModelAdapter& model, const Contract& contract,
                  const Vocabulary& vocab);

}  // namespace logitctl
