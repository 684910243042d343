// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#include "logitctl/session.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <random>

namespace logitctl {

namespace {

bool made_progress(const ContractState& before, const ContractState& after) {
  return before.stage != after.stage || before.keys_emitted != after.keys_emitted ||
         before.key_char_cursor != after.key_char_cursor;
}

}  // namespace

HookSession::HookSession(ContractSpec spec, PolicyConfig policy, Vocabulary vocab, bool mask_only)
    : contract_(Contract::compile(std::move(spec))),
      vocab_(std::move(vocab)),
      mask_only_(mask_only),
      buffer_(static_cast<std::size_t>(std::max(policy.ladder.max_rollback_depth, 0))) {
  policy.ladder.check();
  if (vocab_.size() == 0) throw InvalidInput("session: empty vocabulary");
  cfg_.ladder = policy.ladder;
  cfg_.heuristic = policy.heuristic;
  cfg_.classifier = policy.classifier;
  state_.contract_state = contract_.initial_state();
}

HookSession HookSession::open(std::string_view contract_json, std::string_view policy_json,
                              std::vector<std::string> vocab_table, bool mask_only) {
  return HookSession(parse_contract_spec(contract_json), parse_policy(policy_json),
                     Vocabulary(std::move(vocab_table)), mask_only);
}

void HookSession::sync(std::span<const TokenId> ids) {
  auto& tokens = state_.tokens;
  if (pending_len_) {
    if (ids.size() != *pending_len_ || !std::equal(ids.begin(), ids.end(), tokens.begin())) {
      throw InvalidInput("session: expected the prefix truncated by the last rollback request");
    }
    pending_len_.reset();
    return;
  }
  if (ids.size() < tokens.size() || !std::equal(tokens.begin(), tokens.end(), ids.begin())) {
    throw InvalidInput("session: token history does not extend the previous call");
  }
  for (std::size_t i = tokens.size(); i < ids.size(); ++i) {
    const TokenId t = ids[i];
    if (!vocab_.contains_id(t)) throw InvalidInput("session: token id out of range");
    buffer_.push({tokens.size(), state_.contract_state, tokens.size(), state_.steps_since_progress});
    const ContractState before = state_.contract_state;
    if (!is_absorbing(before.stage)) {
      state_.contract_state = contract_.step(before, t, vocab_, Enforcement::Enforcing).state;
    }
    state_.steps_since_progress =
        made_progress(before, state_.contract_state) ? 0 : state_.steps_since_progress + 1;
    tokens.push_back(t);
    if (resteer_until_ && tokens.size() > *resteer_until_) resteer_until_.reset();
  }
  state_.cache_len = tokens.size();
}

int HookSession::roll_back(std::size_t trigger) {
  auto popped = buffer_.pop(static_cast<std::size_t>(cfg_.ladder.rollback_depth));
  const auto& [snap, depth] = *popped;
  state_.tokens.resize(snap.tokens_len);
  state_.contract_state = snap.contract_state;
  state_.steps_since_progress = snap.steps_since_progress;
  state_.cache_len = snap.cache_len;
  ++state_.corrections;
  resteer_until_ = trigger;
  pending_len_ = snap.tokens_len;
  pending_correct_depth_ = static_cast<int>(depth);
  return static_cast<int>(depth);
}

StepExchange HookSession::step(std::span<const TokenId> ids, std::span<const double> logits) {
  if (logits.size() != vocab_.size()) {
    throw InvalidInput("session: logits length " + std::to_string(logits.size()) +
                       " does not match vocabulary size " + std::to_string(vocab_.size()));
  }
  sync(ids);
  ++steps_;

  StepExchange out;
  out.logits.assign(logits.begin(), logits.end());
  const LogitVector z{out.logits};
  const bool enabled = !cfg_.ladder.disabled();
  out.stage = state_.contract_state.stage;

  if (deadlocked_ || out.stage == StageTag::Done) {
    out.done = true;
    return out;
  }
  if (out.stage == StageTag::Failed) {
    if (enabled && !mask_only_ && state_.corrections < cfg_.ladder.max_corrections &&
        !buffer_.empty()) {
      out.rollback_request = roll_back(state_.tokens.size() - 1);
      out.action = ActionKind::Correct;
      return out;
    }
    out.done = true;
    return out;
  }

  const int corrections_seen = state_.corrections - (pending_correct_depth_ ? 1 : 0);
  ControlOutcome c = control_step(z, state_.contract_state, state_.steps_since_progress,
                                  corrections_seen, buffer_.size(), contract_, vocab_, cfg_);
  state_.logits_last = z;
  state_.dist_last = c.dist;
  state_.entropy_last = c.entropy;
  state_.drift_last = c.drift;
  state_.failure_last = c.failure;
  out.rho = c.rho;

  if (c.deadlock) {
    deadlocked_ = true;
    pending_correct_depth_.reset();
    out.done = true;
    return out;
  }

  if (pending_correct_depth_) {
    out.logits = resteer(z, c.allowed, cfg_.ladder).values;
    out.action = ActionKind::Correct;
    cost_ += action_cost(ControlAction::correct(*pending_correct_depth_));
    pending_correct_depth_.reset();
    return out;
  }
  if (resteer_until_ && state_.tokens.size() <= *resteer_until_) {
    out.logits = resteer(z, c.allowed, cfg_.ladder).values;
    out.action = ActionKind::Mask;
    cost_ += action_cost(ControlAction::mask());
    return out;
  }
  if (c.action.kind == ActionKind::Correct) {
    if (!mask_only_ && !buffer_.empty()) {
      out.rollback_request = roll_back(state_.tokens.size());
      out.action = ActionKind::Correct;
      out.logits = c.controlled.values;
      return out;
    }
    c.action = ControlAction::mask();
    c.controlled = apply_mask(z, c.allowed);
  }
  out.logits = c.controlled.values;
  out.action = c.action.kind;
  cost_ += action_cost(c.action);
  return out;
}

SessionSummary HookSession::summary() const {
  SessionSummary s;
  s.stage = state_.contract_state.stage;
  s.valid_so_far = !deadlocked_ && s.stage != StageTag::Failed;
  s.corrections = state_.corrections;
  s.cost = cost_;
  s.steps = steps_;
  return s;
}

// ----------------------------------------------------------------------------
// Driver and exchange files

RecordedSession drive_session(HookSession& session, ModelAdapter& model,
                              std::span<const TokenId> prompt, const SamplingConfig& sampling,
                              std::size_t max_tokens) {
  RecordedSession rec;
  std::mt19937_64 rng(sampling.seed);
  std::vector<TokenId> ids;
  CacheHandle cache;
  for (;;) {
    // Same order as Generation: a failed stage may still roll back at the limit.
    if (ids.size() >= max_tokens && session.summary().stage != StageTag::Failed) break;
    std::vector<TokenId> prefix(prompt.begin(), prompt.end());
    prefix.insert(prefix.end(), ids.begin(), ids.end());
    const LogitVector z = model.step({prefix, prompt.size(), cache});
    StepExchange out = session.step(ids, z.values);
    rec.steps.push_back({ids, z.values, out});
    if (out.rollback_request > 0) {
      ids.resize(ids.size() - static_cast<std::size_t>(out.rollback_request));
      model.truncate(cache, prompt.size() + ids.size());
      continue;
    }
    if (out.done) break;
    ids.push_back(sample(softmax(LogitVector{out.logits}), sampling.mode, rng));
  }
  rec.tokens = ids;
  rec.summary = session.summary();
  return rec;
}

std::string f64_to_hex(std::span<const double> values) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(values.size() * 16);
  for (double v : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      const auto byte = static_cast<unsigned>((bits >> (8 * b)) & 0xFF);
      out += kDigits[byte >> 4];
      out += kDigits[byte & 0xF];
    }
  }
  return out;
}

std::vector<double> f64_from_hex(std::string_view hex) {
  if (hex.size() % 16 != 0) throw InvalidInput("f64_from_hex: length not a multiple of 16");
  auto nibble = [](char c) -> unsigned {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
    throw InvalidInput("f64_from_hex: bad hex digit");
  };
  std::vector<double> out;
  for (std::size_t i = 0; i < hex.size(); i += 16) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      const std::uint64_t byte = nibble(hex[i + 2 * b]) << 4 | nibble(hex[i + 2 * b + 1]);
      bits |= byte << (8 * b);
    }
    out.push_back(std::bit_cast<double>(bits));
  }
  return out;
}

nlohmann::json to_json(const RecordedSession& s) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& st : s.steps) {
    steps.push_back({{"ids", st.ids},
                     {"logits", f64_to_hex(st.logits)},
                     {"out_logits", f64_to_hex(st.out.logits)},
                     {"rollback_request", st.out.rollback_request},
                     {"done", st.out.done}});
  }
  return {{"run_id", s.run_id},
          {"steps", steps},
          {"tokens", s.tokens},
          {"summary",
           {{"valid_so_far", s.summary.valid_so_far},
            {"corrections", s.summary.corrections},
            {"cost", s.summary.cost}}}};
}

RecordedSession recorded_session_from_json(const nlohmann::json& j) {
  RecordedSession s;
  s.run_id = j.value("run_id", std::string());
  for (const auto& st : j.at("steps")) {
    RecordedStep r;
    r.ids = st.at("ids").get<std::vector<TokenId>>();
    r.logits = f64_from_hex(st.at("logits").get<std::string>());
    r.out.logits = f64_from_hex(st.at("out_logits").get<std::string>());
    r.out.rollback_request = st.at("rollback_request").get<int>();
    r.out.done = st.at("done").get<bool>();
    s.steps.push_back(std::move(r));
  }
  s.tokens = j.at("tokens").get<std::vector<TokenId>>();
  const auto& sum = j.at("summary");
  s.summary.valid_so_far = sum.at("valid_so_far").get<bool>();
  s.summary.corrections = sum.at("corrections").get<int>();
  s.summary.cost = sum.at("cost").get<double>();
  return s;
}

}  // namespace logitctl
