// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#pragma once

// Exhaustive cross-check of the stage machine against the validator over a
// small vocabulary. Two independent enumerations:
//
//   traces:  DFS over admissible token sequences; every trace that reaches
//            Done must validate.
//   strings: DFS over byte strings pruned by the validator and a lower bound
//            on the bytes still needed; every valid string must reach Done
//            once greedily tokenized.
//
// Over strings of at most `max_chars` bytes, the set of Done-reaching texts
// must equal the set of valid texts that end in '}'.

#include <algorithm>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "logitctl/contract.hpp"
#include "logitctl/logit_core.hpp"

namespace logitctl::testing {

struct EnumerationResult {
  std::size_t trace_nodes = 0;
  std::size_t done_traces = 0;
  std::size_t string_nodes = 0;
  std::size_t valid_strings = 0;
  std::vector<std::string> unsound;      // Done-reaching but invalid
  std::vector<std::string> incomplete;   // valid but not Done after tokenization
  std::vector<std::string> only_traces;  // in the trace set, missing from the string set
  std::vector<std::string> only_strings;

  bool ok() const {
    return unsound.empty() && incomplete.empty() && only_traces.empty() && only_strings.empty();
  }
};

inline ContractState run_contract(const Contract& c, const Vocabulary& vocab,
                                  const std::vector<TokenId>& ids) {
  ContractState s = c.initial_state();
  for (TokenId t : ids) s = c.step(s, t, vocab, Enforcement::Enforcing).state;
  return s;
}

/// True when no extension of `text` can validate.
inline bool dead_prefix(std::string_view text, const ValidationReport& r) {
  if (r.valid) return false;
  if (r.has(DiagnosticCode::ExtraPrefix)) return true;
  for (const auto& d : r.diagnostics) {
    if (d.code == DiagnosticCode::ParseError) return d.position < text.size();
  }
  return true;  // closed record with a semantic failure
}

/// Lower bound on the bytes any valid completion of `text` still needs, or
/// npos when none exists: a key spells no declared name, a value opens a
/// container, or a quoted value cannot match its key's type. Uses only JSON
/// lexical structure, the validator's literal key and constant match, its
/// scalar-only value types and the fact that every declared key is required. Malformed input falls back to a loose bound and
/// is left to the validator.
inline std::size_t completion_bound(std::string_view text, const ContractSpec& spec) {
  constexpr auto kNone = std::string_view::npos;
  enum class At { Open, KeyOrClose, Key, Colon, Value, CommaOrClose, Closed };
  At at = At::Open;
  bool in_string = false, key_string = false, escape = false;
  std::string key_text, value_text;
  const KeySpec* current = nullptr;
  std::vector<bool> seen(spec.keys.size(), false);
  auto key_prefix_ok = [&] {
    for (const auto& k : spec.keys) {
      if (k.name.compare(0, key_text.size(), key_text) == 0) return true;
    }
    return false;
  };
  for (char c : text) {
    if (in_string) {
      if (key_string) {
        if (c == '"') {
          for (std::size_t i = 0; i < spec.keys.size(); ++i) {
            if (spec.keys[i].name == key_text) {
              in_string = false;
              seen[i] = true;
              current = &spec.keys[i];
              at = At::Colon;
            }
          }
          if (in_string) return kNone;
          continue;
        }
        key_text += c;
        if (c == '\\' || !key_prefix_ok()) return kNone;  // names are spelled literally
        continue;
      }
      if (current && current->const_value && c != '"') {
        value_text += c;  // constants are spelled literally
        if (current->const_value->compare(0, value_text.size(), value_text) != 0) return kNone;
      }
      if (escape) {
        escape = false;
      } else if (c == '\\') {
        escape = true;
      } else if (c == '"') {
        in_string = false;
        at = At::CommaOrClose;
      }
      continue;
    }
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') continue;
    switch (at) {
      case At::Open:
        if (c == '{') at = At::KeyOrClose;
        break;
      case At::KeyOrClose:
      case At::Key:
        if (c == '"') {
          in_string = key_string = true;
          key_text.clear();
        } else if (c == '}' && at == At::KeyOrClose) {
          at = At::Closed;
        } else {
          return 1;
        }
        break;
      case At::Colon:
        if (c != ':') return 1;
        at = At::Value;
        break;
      case At::Value:
        if (c == '"') {
          if (current && current->type != ValueType::String && current->type != ValueType::Const) {
            return kNone;  // a quoted value is the wrong type here
          }
          in_string = true;
          key_string = escape = false;
          value_text.clear();
        } else if (c == '{' || c == '[') {
          return kNone;  // no value type admits an object or array
        } else {
          at = At::CommaOrClose;
        }
        break;
      case At::CommaOrClose:
        if (c == ',') at = At::Key;
        if (c == '}') at = At::Closed;
        break;
      case At::Closed:
        return 0;
    }
  }
  // Each unseen key still needs at least `,"name":1`.
  std::size_t members = 0, largest = 0;
  for (std::size_t i = 0; i < spec.keys.size(); ++i) {
    if (seen[i]) continue;
    members += spec.keys[i].name.size() + 5;
    largest = std::max(largest, spec.keys[i].name.size() + 5);
  }
  if (in_string) {
    if (!key_string) return 2 + members;  // `"}`
    return 4 + members - largest;         // `":1}`, this key counted as the largest
  }
  switch (at) {
    case At::Open: return 1 + std::max<std::size_t>(members, 1);  // {"a":1}
    case At::KeyOrClose:
    case At::Key: return std::max<std::size_t>(members, 1);  // "a":1,"b":1}
    case At::Colon: return 3 + members;                      // :1}
    case At::Value: return 2 + members;                      // 1}
    case At::CommaOrClose: return 1 + members;
    case At::Closed: return 0;
  }
  return 1;
}

inline EnumerationResult enumerate_equivalence(const ContractSpec& spec, const Vocabulary& vocab,
                                               std::size_t max_chars) {
  const Contract contract = Contract::compile(spec);
  EnumerationResult res;
  std::set<std::string> done_texts;
  std::set<std::string> valid_texts;

  // Traces.
  std::string text;
  std::function<void(const ContractState&)> walk = [&](const ContractState& s) {
    for (std::size_t id = 0; id < vocab.size(); ++id) {
      const std::string& tok = vocab.text(static_cast<TokenId>(id));
      if (text.size() + tok.size() > max_chars) continue;
      const AdmitResult r = contract.token_admissible(s, tok);
      if (!r.accepted) continue;
      ++res.trace_nodes;
      text += tok;
      if (r.next.stage == StageTag::Done) {
        ++res.done_traces;
        done_texts.insert(text);
        if (!validate(text, spec).valid) res.unsound.push_back(text);
      } else if (!is_absorbing(r.next.stage)) {
        walk(r.next);
      }
      text.resize(text.size() - tok.size());
    }
  };
  walk(contract.initial_state());

  // Strings over the vocabulary's byte alphabet.
  std::set<char> alphabet_set;
  for (const auto& t : vocab.texts()) alphabet_set.insert(t.begin(), t.end());
  const std::vector<char> alphabet(alphabet_set.begin(), alphabet_set.end());
  std::string s;
  std::function<void()> grow = [&] {
    for (char c : alphabet) {
      s.push_back(c);
      ++res.string_nodes;
      const ValidationReport r = validate(s, spec);
      if (r.valid) {
        ++res.valid_strings;
        if (s.back() == '}') valid_texts.insert(s);
        const auto ids = vocab.tokenize(s);
        if (!ids || run_contract(contract, vocab, *ids).stage != StageTag::Done) {
          res.incomplete.push_back(s);
        }
      }
      if (dead_prefix(s, r)) {
        s.pop_back();
        continue;
      }
      const std::size_t need = completion_bound(s, spec);
      if (need != std::string_view::npos && s.size() + std::max<std::size_t>(need, 1) <= max_chars) {
        grow();
      }
      s.pop_back();
    }
  };
  grow();

  std::set_difference(done_texts.begin(), done_texts.end(), valid_texts.begin(), valid_texts.end(),
                      std::back_inserter(res.only_traces));
  std::set_difference(valid_texts.begin(), valid_texts.end(), done_texts.begin(), done_texts.end(),
                      std::back_inserter(res.only_strings));
  return res;
}

struct EnumerationCase {
  std::string name;
  ContractSpec spec;
  Vocabulary vocab;
  std::size_t max_chars;
};

inline KeySpec key(std::string name, ValueType type, std::optional<std::string> value = {}) {
  return KeySpec{std::move(name), type, std::move(value)};
}

/// Byte vocabularies of at most 20 tokens, depth 12, one case per value type,
/// plus whitespace and unordered multi-byte cases.
inline std::vector<EnumerationCase> enumeration_cases() {
  std::vector<EnumerationCase> out;
  auto spec1 = [](KeySpec k) {
    ContractSpec s;
    s.keys = {std::move(k)};
    return s;
  };
  out.push_back({"string value", spec1(key("a", ValueType::String)),
                 Vocabulary::from_chars("{}\":,ab\\nu0 xt-.1e/"), 12});
  out.push_back({"integer value", spec1(key("a", ValueType::Integer)),
                 Vocabulary::from_chars("{}\":,ab0129-.eE+ x"), 12});
  out.push_back({"number value", spec1(key("a", ValueType::Number)),
                 Vocabulary::from_chars("{}\":,a019-.eE+ xb"), 12});
  out.push_back({"boolean value", spec1(key("a", ValueType::Boolean)),
                 Vocabulary::from_chars("{}\":,atrufls e1n"), 12});
  out.push_back({"const value", spec1(key("k", ValueType::Const, "ab")),
                 Vocabulary::from_chars("{}\":,kabc x1\\"), 12});
  {
    ContractSpec s = spec1(key("a", ValueType::Integer));
    s.allow_whitespace = true;
    out.push_back({"whitespace allowed", s, Vocabulary::from_chars("{}\":,a01- \n\tx"), 12});
  }
  {
    ContractSpec s = spec1(key("a", ValueType::String));
    s.permit_raw_newlines = true;
    out.push_back({"raw newlines permitted", s, Vocabulary::from_chars("{}\":,ab\n\\n x"), 12});
  }
  {
    ContractSpec s;
    s.keys = {key("a", ValueType::Integer), key("b", ValueType::Integer)};
    s.ordered = false;
    out.push_back({"two keys unordered, multi-byte tokens", s,
                   Vocabulary({"{\"", "\":", ",\"", "\"}", "a", "b", "1", "0", "-", "{", "}", "\"",
                               ":", ",", "ab", "1,", ".", "x", "\"a\"", "e"}),
                   15});
  }
  {
    ContractSpec s;
    s.keys = {key("a", ValueType::Boolean), key("b", ValueType::Const, "c")};
    out.push_back({"two keys ordered, multi-byte tokens", s,
                   Vocabulary({"{\"a\":", "true", "false", ",\"b\":", "\"c\"", "}", "{", "\"",
                               "a", "b", "c", ":", ",", "t", "f", "tr", "ue", "\"c\"}", "x", " "}),
                   24});
  }
  return out;
}

}  // namespace logitctl::testing
