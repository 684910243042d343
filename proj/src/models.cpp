// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#include "logitctl/models.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace logitctl {

// ----------------------------------------------------------------------------
// ScriptedModel

ScriptedModel::ScriptedModel(std::vector<LogitVector> script) : script_(std::move(script)) {
  if (script_.empty()) throw InvalidInput("ScriptedModel: empty script");
  vocab_size_ = script_.front().size();
  for (const auto& z : script_) {
    if (z.size() != vocab_size_) throw InvalidInput("ScriptedModel: ragged script");
  }
}

ScriptedModel ScriptedModel::peaked(std::span<const TokenId> tokens, std::size_t vocab_size,
                                    double peak) {
  std::vector<LogitVector> script;
  for (TokenId t : tokens) {
    LogitVector z{std::vector<double>(vocab_size, 0.0)};
    z.values.at(static_cast<std::size_t>(t)) = peak;
    script.push_back(std::move(z));
  }
  return ScriptedModel(std::move(script));
}

LogitVector ScriptedModel::step(StepContext ctx) {
  if (ctx.prefix.size() < ctx.prompt_len) throw InvalidInput("prefix shorter than prompt");
  const std::size_t i = ctx.prefix.size() - ctx.prompt_len;
  ctx.cache.length = ctx.prefix.size();
  return script_[std::min(i, script_.size() - 1)];
}

void ScriptedModel::truncate(CacheHandle& cache, std::size_t keep_len) {
  cache.length = std::min(cache.length, keep_len);
}

// ----------------------------------------------------------------------------
// FailureProneModel

namespace {

constexpr TokenId kNewline = 95;
constexpr TokenId kSure = 96;
constexpr TokenId kHere = 97;
constexpr TokenId kFence = 98;
constexpr TokenId kJson = 99;
constexpr TokenId kCommaSpace = 101;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double open_unit(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal draw keyed by (seed, position, token).
double keyed_gaussian(std::uint64_t seed, std::size_t position, TokenId token) {
  const std::uint64_t key =
      splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(position) * 0x100000001B3ull +
                                   static_cast<std::uint64_t>(token)));
  const double u1 = open_unit(key);
  const double u2 = open_unit(splitmix64(key));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

const Vocabulary& FailureProneModel::vocabulary() {
  static const Vocabulary vocab = [] {
    std::vector<std::string> texts;
    for (int c = 0x20; c <= 0x7E; ++c) texts.emplace_back(1, static_cast<char>(c));
    texts.emplace_back("\n");
    for (const char* d : {"Sure", "Here", "```", "json", "``` ", ", "}) texts.emplace_back(d);
    return Vocabulary(std::move(texts));
  }();
  return vocab;
}

TokenId FailureProneModel::byte_token(unsigned char c) {
  if (c == '\n') return kNewline;
  if (c < 0x20 || c > 0x7E) throw InvalidInput("FailureProneModel: byte outside the vocabulary");
  return static_cast<TokenId>(c - 0x20);
}

FailureProneModel::FailureProneModel(FailureProneConfig cfg) : cfg_(std::move(cfg)) {
  for (double p : {cfg_.p_preamble, cfg_.p_fence, cfg_.p_trailing}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("FailureProneModel: probability outside [0, 1]");
  }
  if (!std::isfinite(cfg_.peak) || !(cfg_.noise_sigma >= 0.0) || !std::isfinite(cfg_.noise_sigma)) {
    throw InvalidInput("FailureProneModel: peak and noise_sigma must be finite, sigma >= 0");
  }
  if (cfg_.target.empty() || cfg_.target.front() != '{') {
    throw InvalidInput("FailureProneModel: target must start with '{'");
  }
  for (unsigned char c : cfg_.target) target_tokens_.push_back(byte_token(c));

  std::mt19937_64 rng(splitmix64(cfg_.seed));
  plan_.preamble = uniform01(rng) < cfg_.p_preamble;
  plan_.fence = uniform01(rng) < cfg_.p_fence;
  plan_.trailing = uniform01(rng) < cfg_.p_trailing;
  const TokenId opener = uniform01(rng) < 0.5 ? kSure : kHere;
  if (plan_.preamble) plan_.junk.insert(plan_.junk.end(), {opener, byte_token(':'), kNewline});
  if (plan_.fence) plan_.junk.insert(plan_.junk.end(), {kFence, kJson, kNewline});
}

FailureProneModel::Pos FailureProneModel::advance(Pos p, TokenId t) const {
  const std::string& text = vocabulary().text(t);
  if (p.in_body) {
    p.body_len += text.size();
    return p;
  }
  if (const auto brace = text.find('{'); brace != std::string::npos) {
    p.in_body = true;
    p.body_len = text.size() - brace;
    return p;
  }
  if (p.on_script && p.junk_seen < plan_.junk.size() && plan_.junk[p.junk_seen] == t) {
    ++p.junk_seen;
  } else {
    p.on_script = false;
  }
  return p;
}

TokenId FailureProneModel::intended_at(const Pos& p) const {
  if (!p.in_body) {
    if (p.on_script && p.junk_seen < plan_.junk.size()) return plan_.junk[p.junk_seen];
    return byte_token('{');
  }
  const std::size_t n = target_tokens_.size();
  if (plan_.trailing && p.body_len + 1 == n) return kCommaSpace;
  if (p.body_len < n) return target_tokens_[p.body_len];
  return byte_token('}');
}

TokenId FailureProneModel::intended(std::span<const TokenId> generated) const {
  Pos p;
  for (TokenId t : generated) p = advance(p, t);
  return intended_at(p);
}

LogitVector FailureProneModel::step(StepContext ctx) {
  if (ctx.prefix.size() < ctx.prompt_len) throw InvalidInput("prefix shorter than prompt");
  const std::size_t generated = ctx.prefix.size() - ctx.prompt_len;

  auto* states = std::any_cast<std::vector<Pos>>(&ctx.cache.state);
  if (!states || ctx.cache.length < ctx.prompt_len) {
    ctx.cache.state = std::vector<Pos>{Pos{}};
    ctx.cache.length = ctx.prompt_len;
    states = std::any_cast<std::vector<Pos>>(&ctx.cache.state);
  }
  // states[i] is the position state after i generated tokens.
  if (states->size() > generated + 1) {
    throw std::logic_error("FailureProneModel: cache holds positions beyond the prefix");
  }
  for (std::size_t i = states->size() - 1; i < generated; ++i) {
    states->push_back(advance(states->back(), ctx.prefix[ctx.prompt_len + i]));
  }
  ctx.cache.length = ctx.prefix.size();

  const std::size_t v = vocab_size();
  LogitVector z{std::vector<double>(v, 0.0)};
  if (cfg_.noise_sigma > 0.0) {
    for (std::size_t t = 0; t < v; ++t) {
      z.values[t] =
          cfg_.noise_sigma * keyed_gaussian(cfg_.seed, generated, static_cast<TokenId>(t));
    }
  }
  z.values[static_cast<std::size_t>(intended_at(states->back()))] += cfg_.peak;
  return z;
}

void FailureProneModel::truncate(CacheHandle& cache, std::size_t keep_len) {
  auto* states = std::any_cast<std::vector<Pos>>(&cache.state);
  if (!states) {
    cache.length = 0;
    return;
  }
  const std::size_t prompt_len = cache.length - (states->size() - 1);
  if (keep_len < prompt_len) {
    cache.state.reset();
    cache.length = 0;
    return;
  }
  states->resize(std::min(states->size(), keep_len - prompt_len + 1));
  cache.length = prompt_len + states->size() - 1;
}

}  // namespace logitctl
