// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#pragma once

// Deterministic toy adapters for tests and the synthetic benchmark.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "logitctl/controller.hpp"

namespace logitctl {

/// Emits script[i] at generated position i, then repeats the last entry.
/// Stateless apart from the cache length, so safe to share.
class ScriptedModel : public ModelAdapter {
 public:
  explicit ScriptedModel(std::vector<LogitVector> script);

  /// One peaked vector per token: `peak` on the token, 0 elsewhere.
  static ScriptedModel peaked(std::span<const TokenId> tokens, std::size_t vocab_size,
                              double peak = 10.0);

  std::size_t vocab_size() const override { return vocab_size_; }
  LogitVector step(StepContext ctx) override;
  void truncate(CacheHandle& cache, std::size_t keep_len) override;
  bool concurrent_safe() const override { return true; }

 private:
  std::vector<LogitVector> script_;
  std::size_t vocab_size_ = 0;
};

struct FailureProneConfig {
  std::string target;  // the intended valid output
  double p_preamble = 0.0;
  double p_fence = 0.0;
  double p_trailing = 0.0;
  double peak = 5.0;
  double noise_sigma = 0.5;
  std::uint64_t seed = 0;
};

/**
 * Model that "wants" to write `target` but, per seed, may open with a chatty
 * preamble, wrap the record in a markdown fence, or slip a trailing comma
 * before the closing brace. At every position the intended token gets
 * `peak`; all logits get seeded Gaussian noise.
 *
 * The intended token is a function of the prefix only:
 *   - before the first '{': the next junk token while the prefix still follows
 *     the junk script, otherwise '{'
 *   - after it: the next byte of target given how much of the record has been
 *     written, ", " one byte early when the trailing flaw is on, '}' once the
 *     record is at least as long as target
 *
 * Vocabulary: the 95 printable ASCII bytes, '\n', then the distractors
 * "Sure", "Here", "```", "json", "``` ", ", ".
 */
class FailureProneModel : public ModelAdapter {
 public:
  struct Plan {
    bool preamble = false;
    bool fence = false;
    bool trailing = false;
    std::vector<TokenId> junk;  // opening tokens before '{'
  };

  explicit FailureProneModel(FailureProneConfig cfg);

  static const Vocabulary& vocabulary();
  static TokenId byte_token(unsigned char c);

  const Plan& plan() const { return plan_; }
  const FailureProneConfig& config() const { return cfg_; }

  std::size_t vocab_size() const override { return vocabulary().size(); }
  LogitVector step(StepContext ctx) override;
  void truncate(CacheHandle& cache, std::size_t keep_len) override;
  bool concurrent_safe() const override { return true; }

  /// Intended next token after `generated`. Exposed for tests.
  TokenId intended(std::span<const TokenId> generated) const;

 private:
  struct Pos {
    bool in_body = false;
    bool on_script = true;
    std::size_t junk_seen = 0;
    std::size_t body_len = 0;
  };
  Pos advance(Pos p, TokenId t) const;
  TokenId intended_at(const Pos& p) const;

  FailureProneConfig cfg_;
  Plan plan_;
  std::vector<TokenId> target_tokens_;
};

}  // namespace logitctl
