// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#include "logitctl/controller.hpp"

#include <algorithm>
#include <stdexcept>

namespace logitctl {

void RollbackBuffer::push(const Snapshot& s) {
  if (capacity_ == 0) return;
  if (ring_.size() == capacity_) ring_.pop_front();
  ring_.push_back(s);
}

std::optional<std::pair<Snapshot, std::size_t>> RollbackBuffer::pop(std::size_t n) {
  const std::size_t k = std::min(n, ring_.size());
  if (k == 0) return std::nullopt;
  Snapshot oldest = ring_[ring_.size() - k];
  ring_.erase(ring_.end() - static_cast<std::ptrdiff_t>(k), ring_.end());
  return std::make_pair(oldest, k);
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Done: return "done";
    case Termination::Failed: return "failed";
    case Termination::MaxTokens: return "max_tokens";
    case Termination::Deadlock: return "deadlock";
  }
  return "?";
}

LogitVector resteer(const LogitVector& logits, const TokenSet& allowed, const LadderConfig& cfg) {
  return apply_bias(apply_mask(logits, allowed), allowed, cfg.resteer_amplification * cfg.beta);
}

ControlOutcome control_step(const LogitVector& logits, const ContractState& state,
                            int steps_since_progress, int corrections,
                            std::size_t rollback_available, const Contract& contract,
                            const Vocabulary& vocab, const ControllerConfig& cfg) {
  if (logits.size() != vocab.size()) {
    throw InvalidInput("control_step: logit vector size " + std::to_string(logits.size()) +
                       " does not match vocabulary size " + std::to_string(vocab.size()));
  }
  ControlOutcome out;
  out.dist = softmax(logits);
  out.entropy = entropy(out.dist);
  out.allowed = contract.allowlist(state, vocab);
  out.features = extract_features(out.dist, state, out.allowed, steps_since_progress, corrections,
                                  cfg.ladder.max_corrections, vocab.size());
  out.drift = heuristic_drift(out.features, cfg.heuristic);
  out.failure = cfg.classifier ? failure_prob(*cfg.classifier, out.features) : 0.0;
  out.rho = risk(out.drift, out.failure);

  if (cfg.ladder.disabled()) {
    out.action = ControlAction::noop();
    out.controlled = logits;
    return out;
  }
  if (out.allowed.empty()) {
    out.deadlock = true;
    out.action = ControlAction::noop();
    out.controlled = logits;
    return out;
  }

  out.action = decide(out.rho, is_structural(state.stage), corrections, cfg.ladder);
  if (out.action.kind == ActionKind::Correct) {
    out.rollback_request =
        static_cast<int>(std::min<std::size_t>(out.action.rollback, rollback_available));
    out.controlled = resteer(logits, out.allowed, cfg.ladder);
  } else {
    out.controlled = apply(out.action, logits, out.allowed);
  }
  return out;
}

// ----------------------------------------------------------------------------
// Generation

namespace {

bool made_progress(const ContractState& before, const ContractState& after) {
  return before.stage != after.stage || before.keys_emitted != after.keys_emitted ||
         before.key_char_cursor != after.key_char_cursor;
}

}  // namespace

Generation::Generation(ModelAdapter& model, std::span<const TokenId> prompt,
                       const Contract& contract, const Vocabulary& vocab, ControllerConfig cfg)
    : model_(model),
      prompt_(prompt.begin(), prompt.end()),
      contract_(contract),
      vocab_(vocab),
      cfg_(std::move(cfg)),
      buffer_(static_cast<std::size_t>(std::max(cfg_.ladder.max_rollback_depth, 0))),
      rng_(cfg_.sampling.seed),
      started_(std::chrono::steady_clock::now()) {
  cfg_.ladder.check();
  if (model_.vocab_size() != vocab_.size()) {
    throw InvalidInput("model vocabulary size does not match the tokenizer vocabulary");
  }
  state_.contract_state = contract_.initial_state();
}

LogitVector Generation::observe() {
  std::vector<TokenId> seq(prompt_);
  seq.insert(seq.end(), state_.tokens.begin(), state_.tokens.end());
  LogitVector z = model_.step({seq, prompt_.size(), cache_});
  if (z.size() != vocab_.size()) throw InvalidInput("model returned a logit vector of wrong size");
  state_.cache_len = cache_.length;
  return z;
}

bool Generation::resteering() const {
  return resteer_until_ && state_.tokens.size() <= *resteer_until_;
}

void Generation::commit(const LogitVector& raw, const ControlOutcome& outcome,
                        ActionKind recorded, const ControlAction& costed,
                        const LogitVector& controlled, int rolled_back) {
  const auto dist = softmax(controlled);
  const TokenId token = sample(dist, cfg_.sampling.mode, rng_);

  buffer_.push({state_.tokens.size(), state_.contract_state, state_.cache_len,
                state_.steps_since_progress});

  StepRecord rec;
  rec.step = records_.size();
  rec.position = state_.tokens.size();
  rec.stage = state_.contract_state.stage;
  rec.features = outcome.features;
  rec.drift = outcome.drift;
  rec.failure = outcome.failure;
  rec.rho = outcome.rho;
  rec.action = recorded;
  rec.resteer = resteering() || recorded == ActionKind::Correct;
  rec.token = token;
  rec.rolled_back = rolled_back;
  rec.raw_logits = raw;
  records_.push_back(std::move(rec));

  state_.logits_last = raw;
  state_.dist_last = outcome.dist;
  state_.entropy_last = outcome.entropy;
  state_.drift_last = outcome.drift;
  state_.failure_last = outcome.failure;

  state_.tokens.push_back(token);
  const ContractState before = state_.contract_state;
  state_.contract_state = contract_.step(before, token, vocab_, Enforcement::Enforcing).state;
  state_.steps_since_progress =
      made_progress(before, state_.contract_state) ? 0 : state_.steps_since_progress + 1;
  cost_ += action_cost(costed);

  if (resteer_until_ && state_.tokens.size() > *resteer_until_) resteer_until_.reset();
}

void Generation::finish(Termination t) {
  termination_ = t;
  wall_ms_ = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started_)
                 .count();
}

bool Generation::correct_step(std::size_t trigger_position) {
  if (finished()) return false;
  if (state_.corrections >= cfg_.ladder.max_corrections) {
    warnings_.emplace_back("correct_step: correction budget exhausted");
    return false;
  }
  auto popped = buffer_.pop(static_cast<std::size_t>(cfg_.ladder.rollback_depth));
  if (!popped) {
    warnings_.emplace_back("correct_step: rollback buffer empty");
    return false;
  }
  const auto& [snap, depth] = *popped;
  state_.tokens.resize(snap.tokens_len);
  state_.contract_state = snap.contract_state;
  state_.steps_since_progress = snap.steps_since_progress;
  model_.truncate(cache_, snap.cache_len);
  state_.cache_len = cache_.length;
  ++state_.corrections;
  max_rollback_used_ = std::max(max_rollback_used_, static_cast<int>(depth));
  resteer_until_ = trigger_position;

  const LogitVector z = observe();
  // Features see the budget as it was when the correction fired.
  const ControlOutcome outcome =
      control_step(z, state_.contract_state, state_.steps_since_progress, state_.corrections - 1,
                   buffer_.size(), contract_, vocab_, cfg_);
  if (outcome.allowed.empty()) {
    finish(Termination::Deadlock);
    return true;
  }
  commit(z, outcome, ActionKind::Correct, ControlAction::correct(static_cast<int>(depth)),
         resteer(z, outcome.allowed, cfg_.ladder), static_cast<int>(depth));
  return true;
}

void Generation::advance() {
  if (finished()) return;
  const bool enabled = !cfg_.ladder.disabled();
  const StageTag stage = state_.contract_state.stage;

  if (stage == StageTag::Done) return finish(Termination::Done);
  if (stage == StageTag::Failed) {
    if (enabled && state_.corrections < cfg_.ladder.max_corrections && !buffer_.empty()) {
      correct_step(state_.tokens.size() - 1);
      return;
    }
    return finish(Termination::Failed);
  }
  if (state_.tokens.size() >= cfg_.max_tokens) return finish(Termination::MaxTokens);

  const LogitVector z = observe();
  ControlOutcome outcome =
      control_step(z, state_.contract_state, state_.steps_since_progress, state_.corrections,
                   buffer_.size(), contract_, vocab_, cfg_);
  if (outcome.deadlock) return finish(Termination::Deadlock);

  if (resteering()) {
    commit(z, outcome, ActionKind::Mask, ControlAction::mask(),
           resteer(z, outcome.allowed, cfg_.ladder), 0);
    return;
  }

  if (outcome.action.kind == ActionKind::Correct) {
    if (!buffer_.empty()) {
      correct_step(state_.tokens.size());
      return;
    }
    warnings_.emplace_back("correct requested with empty rollback buffer; masking instead");
    outcome.action = ControlAction::mask();
    outcome.controlled = apply_mask(z, outcome.allowed);
  }
  commit(z, outcome, outcome.action.kind, outcome.action, outcome.controlled, 0);
}

RunResult Generation::run() {
  while (!finished()) advance();
  return result();
}

RunResult Generation::result() const {
  RunResult r;
  r.prompt = prompt_;
  r.tokens = state_.tokens;
  r.text = vocab_.decode(state_.tokens);
  r.report = validate(r.text, contract_.spec());
  r.valid = r.report.valid;
  r.steps = records_;
  r.corrections = state_.corrections;
  r.max_rollback_used = max_rollback_used_;
  r.wall_ms = wall_ms_;
  r.cost = cost_;
  r.termination = termination_.value_or(Termination::MaxTokens);
  r.final_state = state_.contract_state;
  r.warnings = warnings_;
  return r;
}

RunResult generate(ModelAdapter& model, std::span<const TokenId> prompt, const Contract& contract,
                   const Vocabulary& vocab, const ControllerConfig& cfg) {
  Generation g(model, prompt, contract, vocab, cfg);
  return g.run();
}

bool replay_check(const RunResult& result, ModelAdapter& model, const Contract& contract,
                  const Vocabulary& vocab) {
  std::vector<TokenId> seq;
  for (const auto& rec : result.steps) {
    if (rec.position + static_cast<std::size_t>(rec.rolled_back) != seq.size()) return false;
    seq.resize(rec.position);
    std::vector<TokenId> prefix(result.prompt);
    prefix.insert(prefix.end(), seq.begin(), seq.end());
    CacheHandle fresh;
    const LogitVector z = model.step({prefix, result.prompt.size(), fresh});
    if (z.values.size() != rec.raw_logits.values.size()) return false;
    for (std::size_t i = 0; i < z.values.size(); ++i) {
      if (z.values[i] != rec.raw_logits.values[i]) return false;
    }
    seq.push_back(rec.token);
  }
  if (seq != result.tokens || vocab.decode(seq) != result.text) return false;

  ContractState state = contract.initial_state();
  for (TokenId t : seq) state = contract.step(state, t, vocab, Enforcement::Enforcing).state;
  return state.stage == result.final_state.stage;
}

}  // namespace logitctl
