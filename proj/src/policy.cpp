// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#include "logitctl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace logitctl {

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::Noop: return "noop";
    case ActionKind::Bias: return "bias";
    case ActionKind::Temperature: return "temperature";
    case ActionKind::Mask: return "mask";
    case ActionKind::Correct: return "correct";
  }
  return "?";
}

ActionKind action_kind_from_string(std::string_view s) {
  if (s == "noop") return ActionKind::Noop;
  if (s == "bias") return ActionKind::Bias;
  if (s == "temperature") return ActionKind::Temperature;
  if (s == "mask") return ActionKind::Mask;
  if (s == "correct") return ActionKind::Correct;
  throw InvalidInput("unknown action: " + std::string(s));
}

void LadderConfig::check() const {
  const auto& t = thresholds;
  if (!disabled()) {
    if (!(0.0 <= t[0] && t[0] < t[1] && t[1] < t[2] && t[2] < t[3] && t[3] <= 1.0)) {
      throw InvalidInput("thresholds must satisfy 0 <= t1 < t2 < t3 < t4 <= 1");
    }
  }
  if (!std::isfinite(beta)) throw InvalidInput("beta must be finite");
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidInput("tau must be in (0, 1]");
  if (rollback_depth < 1) throw InvalidInput("rollback_depth must be >= 1");
  if (rollback_depth > max_rollback_depth) {
    throw InvalidInput("rollback_depth exceeds max_rollback_depth");
  }
  if (max_corrections < 0) throw InvalidInput("max_corrections must be >= 0");
  if (value_stage_cap == ActionKind::Correct) {
    throw InvalidInput("value_stage_cap may not be correct");
  }
  if (!std::isfinite(resteer_amplification) || resteer_amplification < 1.0) {
    throw InvalidInput("resteer_amplification must be >= 1");
  }
  if (!std::isfinite(lambda) || lambda < 0.0) throw InvalidInput("lambda must be >= 0");
}

LadderConfig LadderConfig::baseline() {
  LadderConfig cfg;
  cfg.thresholds = {1.0, 1.0, 1.0, 1.0};
  return cfg;
}

ControlAction decide(double rho, bool stage_is_structural, int corrections_used,
                     const LadderConfig& cfg) {
  if (cfg.disabled()) return ControlAction::noop();
  const auto& t = cfg.thresholds;

  ControlAction action;
  if (rho < t[0]) {
    action = ControlAction::noop();
  } else if (rho < t[1]) {
    action = ControlAction::bias(cfg.beta);
  } else if (rho < t[2]) {
    action = ControlAction::temperature(cfg.tau, cfg.beta, !cfg.temperature_only_band);
  } else if (rho < t[3]) {
    action = ControlAction::mask();
  } else {
    action = corrections_used < cfg.max_corrections ? ControlAction::correct(cfg.rollback_depth)
                                                    : ControlAction::mask();
  }

  if (stage_is_structural) return action;

  // Inside a value body: never correct, mask only if explicitly allowed.
  ActionKind cap = cfg.value_stage_cap;
  if (cfg.allow_value_stage_mask) cap = std::max(cap, ActionKind::Mask);
  cap = std::min(cap, ActionKind::Mask);
  if (action.kind <= cap) return action;
  switch (cap) {
    case ActionKind::Noop: return ControlAction::noop();
    case ActionKind::Bias: return ControlAction::bias(cfg.beta);
    case ActionKind::Temperature:
      return ControlAction::temperature(cfg.tau, cfg.beta, !cfg.temperature_only_band);
    default: return ControlAction::mask();
  }
}

LogitVector apply(const ControlAction& action, const LogitVector& logits, const TokenSet& allowed) {
  switch (action.kind) {
    case ActionKind::Noop:
      return logits;
    case ActionKind::Bias:
      return apply_bias(logits, allowed, action.beta);
    case ActionKind::Temperature: {
      auto out = apply_temperature(logits, action.tau);
      return action.with_bias ? apply_bias(out, allowed, action.beta) : out;
    }
    case ActionKind::Mask:
      return apply_mask(logits, allowed);
    case ActionKind::Correct:
      break;
  }
  throw std::logic_error("apply: correct is a controller-level action");
}

double action_cost(const ControlAction& action) {
  switch (action.kind) {
    case ActionKind::Noop: return 0.0;
    case ActionKind::Bias: return 1.0;
    case ActionKind::Temperature: return 2.0;
    case ActionKind::Mask: return 3.0;
    case ActionKind::Correct: return 5.0 + action.rollback;
  }
  return 0.0;
}

}  // namespace logitctl
