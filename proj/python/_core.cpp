// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

// Python hook surface. Adds no control logic: every call forwards to the core.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <memory>
#include <mutex>

#include "logitctl/config_io.hpp"
#include "logitctl/session.hpp"

namespace py = pybind11;
using namespace logitctl;

namespace {

struct Entry {
  explicit Entry(HookSession s) : session(std::move(s)) {}
  std::mutex mu;  // one logical caller per session
  HookSession session;
};

class Registry {
 public:
  std::int64_t add(HookSession s) {
    auto e = std::make_shared<Entry>(std::move(s));
    std::lock_guard lock(mu_);
    const auto id = next_++;
    entries_.emplace(id, std::move(e));
    return id;
  }
  std::shared_ptr<Entry> get(std::int64_t id) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(id);
    if (it == entries_.end()) throw py::key_error("unknown session " + std::to_string(id));
    return it->second;
  }
  std::shared_ptr<Entry> take(std::int64_t id) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(id);
    if (it == entries_.end()) throw py::key_error("unknown session " + std::to_string(id));
    auto e = std::move(it->second);
    entries_.erase(it);
    return e;
  }

 private:
  std::mutex mu_;
  std::int64_t next_ = 1;
  std::map<std::int64_t, std::shared_ptr<Entry>> entries_;
};

Registry& registry() {
  static Registry r;
  return r;
}

py::dict summary_dict(const SessionSummary& s) {
  py::dict d;
  d["valid_so_far"] = s.valid_so_far;
  d["corrections"] = s.corrections;
  d["cost"] = s.cost;
  d["steps"] = s.steps;
  d["stage"] = std::string(to_string(s.stage));
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Per-step logits hook for stage-aware structured-output control";

  // Translators run newest first, so the subclass goes last.
  const auto invalid = py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", invalid.ptr());

  m.def(
      "open_session",
      [](const std::string& contract_json, const std::string& policy_json,
         std::vector<std::string> vocab, bool mask_only) {
        return registry().add(HookSession::open(contract_json, policy_json, std::move(vocab),
                                                mask_only));
      },
      py::arg("contract_json"), py::arg("policy_json"), py::arg("vocab"),
      py::arg("mask_only") = false,
      "Open a session; policy_json may also be 'baseline' or 'default'. Returns its id.");

  m.def(
      "step",
      [](std::int64_t id, const std::vector<TokenId>& ids, const std::vector<double>& logits) {
        auto e = registry().get(id);
        StepExchange out;
        {
          py::gil_scoped_release release;
          std::lock_guard lock(e->mu);
          out = e->session.step(ids, logits);
        }
        py::dict d;
        d["logits"] = out.logits;
        d["rollback_request"] = out.rollback_request;
        d["done"] = out.done;
        d["action"] = std::string(to_string(out.action));
        d["rho"] = out.rho;
        return d;
      },
      py::arg("session_id"), py::arg("ids"), py::arg("logits"),
      "Exchange raw logits for controlled logits at the next position.");

  m.def(
      "summary",
      [](std::int64_t id) {
        auto e = registry().get(id);
        std::lock_guard lock(e->mu);
        return summary_dict(e->session.summary());
      },
      py::arg("session_id"));

  m.def(
      "close_session",
      [](std::int64_t id) {
        auto e = registry().take(id);
        std::lock_guard lock(e->mu);
        return summary_dict(e->session.summary());
      },
      py::arg("session_id"), "Release a session and return its final summary.");

  m.def(
      "validate",
      [](const std::string& text, const std::string& contract_json) {
        const auto report = validate(text, parse_contract_spec(contract_json));
        py::list diags;
        for (const auto& d : report.diagnostics) {
          py::dict x;
          x["code"] = std::string(to_string(d.code));
          x["position"] = d.position;
          x["message"] = d.message;
          diags.append(x);
        }
        py::dict out;
        out["valid"] = report.valid;
        out["diagnostics"] = diags;
        return out;
      },
      py::arg("text"), py::arg("contract_json"));

  m.def(
      "softmax",
      [](const std::vector<double>& logits, double temperature) {
        return softmax(LogitVector{logits}, temperature).probs;
      },
      py::arg("logits"), py::arg("temperature") = 1.0);

  m.def("f64_to_hex", [](const std::vector<double>& v) { return f64_to_hex(v); });
  m.def("f64_from_hex", [](const std::string& hex) { return f64_from_hex(hex); });
}
