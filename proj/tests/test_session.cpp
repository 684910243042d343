// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#include <doctest.h>

#include <cmath>
#include <cstring>

#include "logitctl/harness.hpp"
#include "logitctl/session.hpp"

using namespace logitctl;

namespace {

const BenchmarkSuite& structured() {
  static const BenchmarkSuite s = load_suite(LOGITCTL_DATA_DIR "/suites/structured.json");
  return s;
}

PolicyConfig default_policy() { return PolicyConfig{}; }

/// One host driving one session, one exchange per tick.
struct Host {
  FailureProneModel model;
  std::vector<TokenId> prompt;
  std::vector<TokenId> ids;
  CacheHandle cache;
  std::mt19937_64 rng;
  SamplingMode mode;
  std::size_t max_tokens;
  bool finished = false;
  std::vector<std::string> hex_out;

  Host(const TaskSpec& task, std::uint64_t seed, SamplingMode m, std::size_t max)
      : model(model_config(task, seed)),
        prompt(*FailureProneModel::vocabulary().tokenize(task.name + ":\n")),
        rng(seed),
        mode(m),
        max_tokens(max) {}

  void tick(HookSession& s) {
    std::vector<TokenId> prefix(prompt);
    prefix.insert(prefix.end(), ids.begin(), ids.end());
    const auto z = model.step({prefix, prompt.size(), cache});
    const auto out = s.step(ids, z.values);
    hex_out.push_back(f64_to_hex(out.logits));
    if (out.rollback_request > 0) {
      ids.resize(ids.size() - static_cast<std::size_t>(out.rollback_request));
      model.truncate(cache, prompt.size() + ids.size());
      return;
    }
    if (out.done || ids.size() >= max_tokens) {
      finished = true;
      return;
    }
    ids.push_back(sample(softmax(LogitVector{out.logits}), mode, rng));
  }
};

}  // namespace

TEST_CASE("hex float encoding is exact, including infinities") {
  const std::vector<double> v{0.0, -0.0, 1.5, -kSuppressed, kSuppressed, 5e-324, 1e308,
                              0.1 + 0.2};
  const auto hex = f64_to_hex(v);
  CHECK(hex.size() == v.size() * 16);
  CHECK(hex.substr(0, 16) == "0000000000000000");
  CHECK(hex.substr(32, 16) == "000000000000f83f");  // 1.5 little-endian
  const auto back = f64_from_hex(hex);
  REQUIRE(back.size() == v.size());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::memcmp(&back[i], &v[i], 8) == 0);
  CHECK_THROWS_AS(f64_from_hex("abc"), InvalidInput);
  CHECK_THROWS_AS(f64_from_hex("zz00000000000000"), InvalidInput);
}

TEST_CASE("a host-driven session makes the same decisions as Generation") {
  const auto& suite = structured();
  const auto& v = FailureProneModel::vocabulary();
  int with_corrections = 0;
  for (const auto& task : suite.tasks) {
    const auto seeds = task.seeds();
    for (std::size_t i = 0; i < 25; ++i) {
      const auto seed = seeds[i];
      const auto prompt = *v.tokenize(task.name + ":\n");
      for (auto mode : {SamplingMode::Greedy, SamplingMode::Multinomial}) {
        ControllerConfig cfg;
        cfg.sampling = {mode, seed};
        cfg.max_tokens = suite.max_tokens;
        FailureProneModel a(model_config(task, seed));
        const auto r = generate(a, prompt, Contract::compile(task.contract), v, cfg);

        HookSession s(task.contract, default_policy(), v);
        FailureProneModel b(model_config(task, seed));
        const auto rec = drive_session(s, b, prompt, cfg.sampling, cfg.max_tokens);
        CHECK(rec.tokens == r.tokens);
        CHECK(rec.summary.corrections == r.corrections);
        CHECK(rec.summary.cost == doctest::Approx(r.cost).epsilon(1e-12));
        CHECK(rec.summary.valid_so_far == (r.termination != Termination::Failed &&
                                           r.termination != Termination::Deadlock));
        with_corrections += r.corrections > 0;
      }
    }
  }
  CHECK(with_corrections > 0);
}

TEST_CASE("recorded exchanges replay byte for byte") {
  const auto doc = parse_json(read_file(LOGITCTL_DATA_DIR "/exchanges/golden.json"), "golden");
  const auto contract = doc.at("contract").dump();
  const auto policy = doc.at("policy").dump();
  const auto vocab = doc.at("vocab").get<std::vector<std::string>>();
  std::size_t steps = 0, rollbacks = 0;
  for (const auto& js : doc.at("sessions")) {
    const auto rec = recorded_session_from_json(js);
    auto s = HookSession::open(contract, policy, vocab, doc.at("mask_only").get<bool>());
    for (const auto& st : rec.steps) {
      const auto out = s.step(st.ids, st.logits);
      CHECK(f64_to_hex(out.logits) == f64_to_hex(st.out.logits));
      CHECK(out.rollback_request == st.out.rollback_request);
      CHECK(out.done == st.out.done);
      ++steps;
      rollbacks += st.out.rollback_request > 0;
    }
    const auto sum = s.summary();
    CHECK(sum.corrections == rec.summary.corrections);
    CHECK(sum.valid_so_far == rec.summary.valid_so_far);
    CHECK(sum.cost == rec.summary.cost);
  }
  CHECK(steps >= 50);
  CHECK(rollbacks >= 1);
}

TEST_CASE("interleaved sessions do not interfere") {
  const auto& suite = structured();
  const auto& v = FailureProneModel::vocabulary();
  const auto& t0 = suite.tasks[0];
  const auto& t1 = suite.tasks[1];
  for (std::size_t i = 0; i < 10; ++i) {
    const auto s0 = t0.seeds()[i], s1 = t1.seeds()[i];
    // Alone.
    Host a0(t0, s0, SamplingMode::Multinomial, 160), a1(t1, s1, SamplingMode::Multinomial, 160);
    HookSession x0(t0.contract, default_policy(), v), x1(t1.contract, default_policy(), v);
    while (!a0.finished) a0.tick(x0);
    while (!a1.finished) a1.tick(x1);
    // Interleaved.
    Host b0(t0, s0, SamplingMode::Multinomial, 160), b1(t1, s1, SamplingMode::Multinomial, 160);
    HookSession y0(t0.contract, default_policy(), v), y1(t1.contract, default_policy(), v);
    while (!b0.finished || !b1.finished) {
      if (!b0.finished) b0.tick(y0);
      if (!b1.finished) b1.tick(y1);
    }
    CHECK(a0.hex_out == b0.hex_out);
    CHECK(a1.hex_out == b1.hex_out);
    CHECK(a0.ids == b0.ids);
    CHECK(a1.ids == b1.ids);
  }
}

TEST_CASE("protocol violations are rejected") {
  const auto& task = structured().tasks[0];
  const auto& v = FailureProneModel::vocabulary();
  // Mask-only, so uniform logits never trigger a rollback here.
  HookSession s(task.contract, default_policy(), v, /*mask_only=*/true);
  const std::vector<double> z(v.size(), 0.0);
  CHECK_THROWS_AS(s.step({}, std::vector<double>(3, 0.0)), InvalidInput);
  const std::vector<TokenId> open{FailureProneModel::byte_token('{')};
  s.step({}, z);
  s.step(open, z);
  // Rewriting history.
  const std::vector<TokenId> other{FailureProneModel::byte_token('x')};
  CHECK_THROWS_AS(s.step(other, z), InvalidInput);
  // Unknown token id.
  const std::vector<TokenId> bad{open[0], 9999};
  CHECK_THROWS_AS(s.step(bad, z), InvalidInput);

  CHECK_THROWS_AS(HookSession::open("{", "baseline", {"a"}), ConfigError);
  CHECK_THROWS_AS(HookSession::open(R"({"keys":[{"name":"a","type":"integer"}]})", "{\"beta\":",
                                    {"a"}),
                  ConfigError);
  CHECK_THROWS_AS(HookSession::open(R"({"keys":[{"name":"a","type":"integer"}]})", "baseline", {}),
                  InvalidInput);
}

TEST_CASE("a host must honour a rollback request") {
  const auto v = Vocabulary::from_chars("{}\":,a0123456789x");
  ContractSpec spec;
  spec.keys = {{"a", ValueType::Integer, {}}};
  HookSession s(spec, default_policy(), v);
  const auto ids = *v.tokenize(R"({"a":1x)");
  auto peaked = [&](std::size_t n) {
    std::vector<double> z(v.size(), 0.0);
    if (n < ids.size()) z[static_cast<std::size_t>(ids[n])] = 10.0;
    return z;
  };
  std::vector<TokenId> seen;
  StepExchange out;
  for (std::size_t n = 0; n <= ids.size(); ++n) {
    seen.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n));
    out = s.step(seen, peaked(n));
    if (n < ids.size()) REQUIRE(out.rollback_request == 0);
  }
  REQUIRE(out.rollback_request == 2);
  CHECK_THROWS_AS(s.step(seen, peaked(0)), InvalidInput);
  seen.resize(seen.size() - 2);
  const auto again = s.step(seen, peaked(seen.size()));
  CHECK(again.rollback_request == 0);
  CHECK(again.action == ActionKind::Correct);
  CHECK(s.summary().corrections == 1);
}

TEST_CASE("mask-only sessions never request a rollback") {
  const auto& suite = structured();
  const auto& v = FailureProneModel::vocabulary();
  for (const auto& task : suite.tasks) {
    for (std::size_t i = 0; i < 20; ++i) {
      const auto seed = task.seeds()[i];
      HookSession s(task.contract, default_policy(), v, /*mask_only=*/true);
      FailureProneModel m(model_config(task, seed));
      const auto prompt = *v.tokenize(task.name + ":\n");
      const auto rec = drive_session(s, m, prompt, {SamplingMode::Greedy, seed}, 160);
      for (const auto& st : rec.steps) CHECK(st.out.rollback_request == 0);
      CHECK(rec.summary.corrections == 0);
    }
  }
}

TEST_CASE("recorded sessions round-trip through JSON") {
  const auto& task = structured().tasks[0];
  const auto& v = FailureProneModel::vocabulary();
  HookSession s(task.contract, default_policy(), v);
  FailureProneModel m(model_config(task, 11));
  const auto prompt = *v.tokenize(task.name + ":\n");
  auto rec = drive_session(s, m, prompt, {SamplingMode::Greedy, 11}, 160);
  rec.run_id = "x/11";
  const auto j = to_json(rec);
  const auto back = recorded_session_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.steps.size() == rec.steps.size());
}
