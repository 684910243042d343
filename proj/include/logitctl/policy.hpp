// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#pragma once

// Graduated intervention ladder: risk bands -> control actions.

#include <array>
#include <string_view>

#include "logitctl/logit_core.hpp"

namespace logitctl {

/// Ordered by strength: Noop < Bias < Temperature < Mask < Correct.
enum class ActionKind : std::uint8_t { Noop, Bias, Temperature, Mask, Correct };

std::string_view to_string(ActionKind kind);
ActionKind action_kind_from_string(std::string_view s);

struct ControlAction {
  ActionKind kind = ActionKind::Noop;
  double beta = 0.0;
  double tau = 1.0;
  int rollback = 0;               // Correct only, >= 1
  bool with_bias = false;         // Temperature band also biases toward the allowlist

  static ControlAction noop() { return {}; }
  static ControlAction bias(double beta) { return {ActionKind::Bias, beta, 1.0, 0, true}; }
  static ControlAction temperature(double tau, double beta, bool with_bias) {
    return {ActionKind::Temperature, with_bias ? beta : 0.0, tau, 0, with_bias};
  }
  static ControlAction mask() { return {ActionKind::Mask, 0.0, 1.0, 0, false}; }
  static ControlAction correct(int n) { return {ActionKind::Correct, 0.0, 1.0, n, false}; }
};

struct LadderConfig {
  /// Band edges theta1 < theta2 < theta3 < theta4. theta1 >= 1 disables the
  /// controller entirely (baseline pass-through, no forced corrections).
  std::array<double, 4> thresholds{0.2, 0.4, 0.6, 0.85};
  double beta = 4.0;
  double tau = 0.7;
  int rollback_depth = 2;
  int max_rollback_depth = 3;
  int max_corrections = 4;
  /// Strongest action permitted inside value bodies.
  ActionKind value_stage_cap = ActionKind::Bias;
  /// Lets the Mask band act inside value bodies (Correct never does).
  bool allow_value_stage_mask = false;
  bool temperature_only_band = false;
  /// Re-steer bias after a rollback is resteer_amplification * beta.
  double resteer_amplification = 2.0;
  /// Reporting-only weight of intervention cost.
  double lambda = 0.1;

  bool disabled() const { return thresholds[0] >= 1.0; }

  /// Throws InvalidInput on violated invariants.
  void check() const;

  /// theta1 = 1: every step is Noop.
  static LadderConfig baseline();
};

/// Pure ladder decision with stage gating and the correction budget.
ControlAction decide(double rho, bool stage_is_structural, int corrections_used,
                     const LadderConfig& cfg);

/// Applies a primitive action. Correct is a controller-level composite and
/// raises std::logic_error here.
LogitVector apply(const ControlAction& action, const LogitVector& logits, const TokenSet& allowed);

/// Noop 0, Bias 1, Temperature 2, Mask 3, Correct 5 + n.
double action_cost(const ControlAction& action);

}  // namespace logitctl
