// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#include <doctest.h>

#include "logitctl/policy.hpp"

using namespace logitctl;

namespace {

ActionKind expected_band(double rho, const LadderConfig& c) {
  const auto& t = c.thresholds;
  if (rho < t[0]) return ActionKind::Noop;
  if (rho < t[1]) return ActionKind::Bias;
  if (rho < t[2]) return ActionKind::Temperature;
  if (rho < t[3]) return ActionKind::Mask;
  return ActionKind::Correct;
}

}  // namespace

TEST_CASE("ladder bands over a rho grid, stages and budgets") {
  const LadderConfig cfg;
  for (int budget_used = 0; budget_used <= 5; ++budget_used) {
    for (bool structural : {true, false}) {
      ActionKind prev = ActionKind::Noop;
      for (int i = 0; i <= 100; ++i) {
        const double rho = i / 100.0;
        const auto a = decide(rho, structural, budget_used, cfg);
        ActionKind want = expected_band(rho, cfg);
        if (want == ActionKind::Correct && budget_used >= cfg.max_corrections) want = ActionKind::Mask;
        if (!structural) want = std::min(want, cfg.value_stage_cap);
        CHECK_MESSAGE(a.kind == want, "rho=" << rho << " structural=" << structural);
        CHECK(a.kind >= prev);  // monotone in rho
        prev = a.kind;
        if (!structural) CHECK(a.kind <= ActionKind::Bias);
        if (a.kind == ActionKind::Correct) CHECK(a.rollback == cfg.rollback_depth);
        if (a.kind == ActionKind::Bias) CHECK(a.beta == cfg.beta);
        if (a.kind == ActionKind::Temperature) {
          CHECK(a.tau == cfg.tau);
          CHECK(a.with_bias);
        }
      }
    }
  }
}

TEST_CASE("band edges are half-open") {
  const LadderConfig cfg;
  CHECK(decide(0.2 - 1e-12, true, 0, cfg).kind == ActionKind::Noop);
  CHECK(decide(0.2, true, 0, cfg).kind == ActionKind::Bias);
  CHECK(decide(0.4, true, 0, cfg).kind == ActionKind::Temperature);
  CHECK(decide(0.6, true, 0, cfg).kind == ActionKind::Mask);
  CHECK(decide(0.85, true, 0, cfg).kind == ActionKind::Correct);
  CHECK(decide(1.0, true, 0, cfg).kind == ActionKind::Correct);
}

TEST_CASE("value-stage gating options") {
  LadderConfig cfg;
  cfg.allow_value_stage_mask = true;
  CHECK(decide(0.7, false, 0, cfg).kind == ActionKind::Mask);
  CHECK(decide(0.95, false, 0, cfg).kind == ActionKind::Mask);
  cfg.allow_value_stage_mask = false;
  cfg.value_stage_cap = ActionKind::Noop;
  CHECK(decide(0.95, false, 0, cfg).kind == ActionKind::Noop);
  cfg.value_stage_cap = ActionKind::Temperature;
  cfg.temperature_only_band = true;
  const auto t = decide(0.95, false, 0, cfg);
  CHECK(t.kind == ActionKind::Temperature);
  CHECK_FALSE(t.with_bias);
  CHECK(t.beta == 0.0);
}

TEST_CASE("disabled ladder is always noop") {
  const auto cfg = LadderConfig::baseline();
  CHECK(cfg.disabled());
  for (int i = 0; i <= 100; ++i) CHECK(decide(i / 100.0, true, 0, cfg).kind == ActionKind::Noop);
  CHECK_NOTHROW(cfg.check());
}

TEST_CASE("ladder config validation") {
  LadderConfig c;
  CHECK_NOTHROW(c.check());
  c.thresholds = {0.4, 0.2, 0.6, 0.8};
  CHECK_THROWS_AS(c.check(), InvalidInput);
  c = {};
  c.tau = 1.5;
  CHECK_THROWS_AS(c.check(), InvalidInput);
  c = {};
  c.rollback_depth = 4;
  CHECK_THROWS_AS(c.check(), InvalidInput);
  c = {};
  c.rollback_depth = 0;
  CHECK_THROWS_AS(c.check(), InvalidInput);
  c = {};
  c.value_stage_cap = ActionKind::Correct;
  CHECK_THROWS_AS(c.check(), InvalidInput);
  c = {};
  c.max_corrections = -1;
  CHECK_THROWS_AS(c.check(), InvalidInput);
  c = {};
  c.resteer_amplification = 0.5;
  CHECK_THROWS_AS(c.check(), InvalidInput);
}

TEST_CASE("applying actions") {
  const LogitVector z{{1.0, 2.0, 3.0}};
  const TokenSet allowed{0};
  CHECK(apply(ControlAction::noop(), z, allowed) == z);
  CHECK(apply(ControlAction::bias(4.0), z, allowed).values[0] == 5.0);
  const auto t = apply(ControlAction::temperature(0.5, 4.0, true), z, allowed);
  CHECK(t.values[0] == 6.0);
  CHECK(t.values[2] == 6.0);
  const auto m = apply(ControlAction::mask(), z, allowed);
  CHECK(m.suppressed(1));
  CHECK_THROWS_AS(apply(ControlAction::correct(2), z, allowed), std::logic_error);
}

TEST_CASE("action costs and names") {
  CHECK(action_cost(ControlAction::noop()) == 0.0);
  CHECK(action_cost(ControlAction::bias(4)) == 1.0);
  CHECK(action_cost(ControlAction::temperature(0.7, 4, true)) == 2.0);
  CHECK(action_cost(ControlAction::mask()) == 3.0);
  CHECK(action_cost(ControlAction::correct(2)) == 7.0);
  for (auto k : {ActionKind::Noop, ActionKind::Bias, ActionKind::Temperature, ActionKind::Mask,
                 ActionKind::Correct}) {
    CHECK(action_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(action_kind_from_string("retry"), InvalidInput);
}
