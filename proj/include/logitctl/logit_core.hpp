// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#pragma once

/**
 * @file logit_core.hpp
 * @brief Distribution math over a token vocabulary and the primitive logit
 *        manipulations (bias, temperature, mask) the controller is built on.
 *
 * All math is done in double precision. A suppressed logit is stored as
 * -infinity and always maps to probability exactly 0, so "invalid mass is
 * zero after masking" can be asserted with ==, not a tolerance.
 *
 * Tie-breaking is lowest-token-id everywhere (argmax, top_k, greedy sample).
 */

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace logitctl {

using TokenId = std::int32_t;

/// Sorted, duplicate-free list of token ids.
using TokenSet = std::vector<TokenId>;

/// Thrown for non-finite logits, out-of-range parameters and bad token ids.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown by apply_mask when the allowlist is empty.
class ContractDeadlock : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kSuppressed = -std::numeric_limits<double>::infinity();

inline bool is_suppressed(double v) { return v == kSuppressed; }

TokenSet make_token_set(std::vector<TokenId> ids);
bool contains(const TokenSet& set, TokenId id);

// ============================================================================
// Vocabulary
// ============================================================================

/// Token ids are exactly 0..size()-1; every entry has nonempty text.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> texts);

  /// One single-byte token per character of `chars`, in order.
  static Vocabulary from_chars(std::string_view chars);

  std::size_t size() const { return texts_.size(); }
  const std::string& text(TokenId id) const;
  const std::vector<std::string>& texts() const { return texts_; }
  bool contains_id(TokenId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < texts_.size();
  }
  std::optional<TokenId> find(std::string_view text) const;

  /// Greedy longest-match tokenization. Returns nullopt if some byte cannot
  /// be covered by any token.
  std::optional<std::vector<TokenId>> tokenize(std::string_view text) const;

  std::string decode(std::span<const TokenId> ids) const;

 private:
  std::vector<std::string> texts_;
};

// ============================================================================
// Logits and distributions
// ============================================================================

struct LogitVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool suppressed(std::size_t i) const { return is_suppressed(values[i]); }
  bool operator==(const LogitVector&) const = default;
};

struct ProbDistribution {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  bool operator==(const ProbDistribution&) const = default;
};

struct ScoredToken {
  TokenId id;
  double prob;
  bool operator==(const ScoredToken&) const = default;
};

enum class SamplingMode { Greedy, Multinomial };

/// Max-subtracted softmax of values/temperature. Suppressed entries get 0.
/// Throws InvalidInput on NaN/+inf entries, temperature <= 0, or when every
/// entry is suppressed.
ProbDistribution softmax(const LogitVector& logits, double temperature = 1.0);

/// Shannon entropy in nats with 0 ln 0 = 0.
double entropy(const ProbDistribution& dist);

/// k highest-probability entries, descending, ties to the lower id.
std::vector<ScoredToken> top_k(const ProbDistribution& dist, std::size_t k);

/// Index of the largest probability, lowest id on ties.
TokenId argmax(const ProbDistribution& dist);

/// values[i] += beta for i in favored; suppressed entries stay suppressed.
LogitVector apply_bias(const LogitVector& logits, const TokenSet& favored, double beta);

/// values[i] /= tau for 0 < tau <= 1. The controller never widens variance.
LogitVector apply_temperature(const LogitVector& logits, double tau);

/// Suppress every entry outside `allowed`. Throws ContractDeadlock if empty.
LogitVector apply_mask(const LogitVector& logits, const TokenSet& allowed);

/// Uniform double in [0, 1) with 53 random bits. Independent of the
/// standard library's distribution implementations, so streams are portable.
double uniform01(std::mt19937_64& rng);

/// Greedy: argmax. Multinomial: inverse-CDF draw using one uniform01 call.
TokenId sample(const ProbDistribution& dist, SamplingMode mode, std::mt19937_64& rng);

/// Sum of probabilities of ids not in `allowed`.
double invalid_mass(const ProbDistribution& dist, const TokenSet& allowed);

std::string_view to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(std::string_view s);

}  // namespace logitctl
