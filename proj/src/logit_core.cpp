// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#include "logitctl/logit_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace logitctl {

TokenSet make_token_set(std::vector<TokenId> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

bool contains(const TokenSet& set, TokenId id) {
  return std::binary_search(set.begin(), set.end(), id);
}

// ----------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> texts) : texts_(std::move(texts)) {
  for (std::size_t i = 0; i < texts_.size(); ++i) {
    if (texts_[i].empty()) {
      throw InvalidInput("vocabulary entry " + std::to_string(i) + " has empty text");
    }
  }
}

Vocabulary Vocabulary::from_chars(std::string_view chars) {
  std::vector<std::string> texts;
  texts.reserve(chars.size());
  for (char c : chars) texts.emplace_back(1, c);
  return Vocabulary(std::move(texts));
}

const std::string& Vocabulary::text(TokenId id) const {
  if (!contains_id(id)) {
    throw InvalidInput("token id " + std::to_string(id) + " outside vocabulary");
  }
  return texts_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view text) const {
  for (std::size_t i = 0; i < texts_.size(); ++i) {
    if (texts_[i] == text) return static_cast<TokenId>(i);
  }
  return std::nullopt;
}

std::optional<std::vector<TokenId>> Vocabulary::tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t best_len = 0;
    TokenId best = -1;
    for (std::size_t i = 0; i < texts_.size(); ++i) {
      const auto& t = texts_[i];
      if (t.size() > best_len && text.compare(pos, t.size(), t) == 0) {
        best_len = t.size();
        best = static_cast<TokenId>(i);
      }
    }
    if (best < 0) return std::nullopt;
    out.push_back(best);
    pos += best_len;
  }
  return out;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) out += text(id);
  return out;
}

// ----------------------------------------------------------------------------
// Distribution math

ProbDistribution softmax(const LogitVector& logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidInput("softmax temperature must be a positive finite real");
  }
  double max_v = kSuppressed;
  for (double v : logits.values) {
    if (is_suppressed(v)) continue;
    if (!std::isfinite(v)) throw InvalidInput("non-finite logit");
    max_v = std::max(max_v, v);
  }
  if (is_suppressed(max_v)) throw InvalidInput("every logit is suppressed");

  ProbDistribution out;
  out.probs.resize(logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits.suppressed(i)) continue;
    out.probs[i] = std::exp((logits.values[i] - max_v) / temperature);
    total += out.probs[i];
  }
  for (double& p : out.probs) p /= total;
  return out;
}

double entropy(const ProbDistribution& dist) {
  double h = 0.0;
  for (double p : dist.probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<ScoredToken> top_k(const ProbDistribution& dist, std::size_t k) {
  if (k < 1 || k > dist.size()) throw InvalidInput("top_k: k out of range");
  std::vector<ScoredToken> all;
  all.reserve(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) {
    all.push_back({static_cast<TokenId>(i), dist.probs[i]});
  }
  auto by_prob = [](const ScoredToken& a, const ScoredToken& b) {
    return a.prob != b.prob ? a.prob > b.prob : a.id < b.id;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), by_prob);
  all.resize(k);
  return all;
}

TokenId argmax(const ProbDistribution& dist) {
  if (dist.probs.empty()) throw InvalidInput("argmax of empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < dist.size(); ++i) {
    if (dist.probs[i] > dist.probs[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

LogitVector apply_bias(const LogitVector& logits, const TokenSet& favored, double beta) {
  if (!std::isfinite(beta)) throw InvalidInput("bias must be finite");
  LogitVector out = logits;
  for (TokenId id : favored) {
    if (id < 0 || static_cast<std::size_t>(id) >= out.size()) {
      throw InvalidInput("bias: token id " + std::to_string(id) + " outside vocabulary");
    }
    auto& v = out.values[static_cast<std::size_t>(id)];
    if (!is_suppressed(v)) v += beta;
  }
  return out;
}

LogitVector apply_temperature(const LogitVector& logits, double tau) {
  if (!(tau > 0.0) || tau > 1.0) throw InvalidInput("temperature must be in (0, 1]");
  LogitVector out = logits;
  if (tau == 1.0) return out;
  for (double& v : out.values) {
    if (!is_suppressed(v)) v /= tau;
  }
  return out;
}

LogitVector apply_mask(const LogitVector& logits, const TokenSet& allowed) {
  if (allowed.empty()) throw ContractDeadlock("mask with empty allowlist");
  LogitVector out;
  out.values.assign(logits.size(), kSuppressed);
  for (TokenId id : allowed) {
    if (id < 0 || static_cast<std::size_t>(id) >= logits.size()) {
      throw InvalidInput("mask: token id " + std::to_string(id) + " outside vocabulary");
    }
    out.values[static_cast<std::size_t>(id)] = logits.values[static_cast<std::size_t>(id)];
  }
  return out;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

TokenId sample(const ProbDistribution& dist, SamplingMode mode, std::mt19937_64& rng) {
  if (mode == SamplingMode::Greedy) return argmax(dist);

  const double u = uniform01(rng);
  double cumulative = 0.0;
  TokenId last_nonzero = -1;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist.probs[i] <= 0.0) continue;
    last_nonzero = static_cast<TokenId>(i);
    cumulative += dist.probs[i];
    if (u < cumulative) return last_nonzero;
  }
  // Rounding left cumulative slightly below 1.
  if (last_nonzero < 0) throw InvalidInput("sample from all-zero distribution");
  return last_nonzero;
}

double invalid_mass(const ProbDistribution& dist, const TokenSet& allowed) {
  double mass = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (!contains(allowed, static_cast<TokenId>(i))) mass += dist.probs[i];
  }
  return std::clamp(mass, 0.0, 1.0);
}

std::string_view to_string(SamplingMode mode) {
  return mode == SamplingMode::Greedy ? "greedy" : "multinomial";
}

SamplingMode sampling_mode_from_string(std::string_view s) {
  if (s == "greedy") return SamplingMode::Greedy;
  if (s == "multinomial") return SamplingMode::Multinomial;
  throw InvalidInput("unknown sampling mode: " + std::string(s));
}

}  // namespace logitctl
