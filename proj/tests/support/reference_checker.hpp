// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#pragma once

// Test-only second opinion on record validity. Built on nlohmann's SAX parser
// and a brace scanner; it shares no code with validate.cpp.

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "logitctl/contract.hpp"

namespace logitctl::testing {

struct RefVerdict {
  bool valid = false;
  std::set<DiagnosticCode> codes;
};

namespace ref_detail {

inline bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

/// Result of scanning from the first '{' to its matching close.
struct Scan {
  bool closed = false;
  std::size_t end = 0;          // one past the matching '}'
  bool ws_outside_strings = false;
  std::vector<std::string> raw_strings;  // every string literal, in order, unescaped bytes kept
  std::string patched;          // span with raw '\n' inside strings turned into "\\n"
};

inline Scan scan(std::string_view text, std::size_t open) {
  Scan s;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  std::string current;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
        current += c;
        s.patched += c;
        continue;
      }
      if (c == '\\') {
        escaped = true;
        current += c;
        s.patched += c;
        continue;
      }
      if (c == '"') {
        in_string = false;
        s.raw_strings.push_back(current);
        s.patched += c;
        continue;
      }
      current += c;
      s.patched += (c == '\n') ? std::string("\\n") : std::string(1, c);
      continue;
    }
    s.patched += c;
    if (c == '"') {
      in_string = true;
      current.clear();
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      if (--depth == 0) {
        s.closed = true;
        s.end = i + 1;
        return s;
      }
    } else if (is_ws(c)) {
      s.ws_outside_strings = true;
    }
  }
  return s;
}

enum class Kind { String, Integral, Fractional, Boolean, Null, Container };

struct TopMember {
  std::string key;
  bool key_escaped = false;
  Kind kind = Kind::Null;
  std::string string_value;
  bool string_escaped = false;
  std::size_t number_length = 0;
};

/// Collects the members of the outermost object.
class Collector : public nlohmann::json_sax<nlohmann::json> {
 public:
  explicit Collector(const std::vector<std::string>& raw_strings) : raw_(raw_strings) {}

  std::vector<TopMember> members;
  bool top_is_object = false;

  bool null() override { return scalar(Kind::Null); }
  bool boolean(bool) override { return scalar(Kind::Boolean); }
  bool number_integer(number_integer_t v) override {
    if (depth_ == 1) {
      members.back().number_length = std::to_string(v).size();
    }
    return scalar(Kind::Integral);
  }
  bool number_unsigned(number_unsigned_t v) override {
    if (depth_ == 1) {
      members.back().number_length = std::to_string(v).size();
    }
    return scalar(Kind::Integral);
  }
  bool number_float(number_float_t, const string_t& raw) override {
    const bool integral = raw.find_first_of(".eE") == string_t::npos;
    if (depth_ == 1) members.back().number_length = raw.size();
    return scalar(integral ? Kind::Integral : Kind::Fractional);
  }
  bool string(string_t& value) override {
    const bool escaped = next_raw_has_escape();
    if (depth_ == 1) {
      members.back().string_value = value;
      members.back().string_escaped = escaped;
    }
    return scalar(Kind::String);
  }
  bool binary(binary_t&) override { return false; }
  bool start_object(std::size_t) override {
    if (depth_ == 0) top_is_object = true;
    if (depth_ == 1) members.back().kind = Kind::Container;
    ++depth_;
    return true;
  }
  bool key(string_t& value) override {
    const bool escaped = next_raw_has_escape();
    if (depth_ == 1) {
      TopMember m;
      m.key = value;
      m.key_escaped = escaped;
      members.push_back(std::move(m));
    }
    return true;
  }
  bool end_object() override {
    --depth_;
    return true;
  }
  bool start_array(std::size_t) override {
    if (depth_ == 1) members.back().kind = Kind::Container;
    ++depth_;
    return true;
  }
  bool end_array() override {
    --depth_;
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override {
    return false;
  }

 private:
  bool scalar(Kind k) {
    if (depth_ == 1) members.back().kind = k;
    return true;
  }
  bool next_raw_has_escape() {
    const bool e = next_ < raw_.size() && raw_[next_].find('\\') != std::string::npos;
    ++next_;
    return e;
  }

  const std::vector<std::string>& raw_;
  std::size_t next_ = 0;
  int depth_ = 0;
};

inline bool only_ws(std::string_view s) { return std::all_of(s.begin(), s.end(), is_ws); }

}  // namespace ref_detail

inline RefVerdict reference_check(std::string_view text, const ContractSpec& spec) {
  using namespace ref_detail;
  RefVerdict v;
  auto& codes = v.codes;

  const std::size_t open = text.find('{');
  const std::string_view prefix = open == std::string_view::npos ? text : text.substr(0, open);
  if (!spec.allow_preamble && !prefix.empty() && !(spec.allow_whitespace && only_ws(prefix))) {
    codes.insert(DiagnosticCode::ExtraPrefix);
  }
  if (open == std::string_view::npos) {
    codes.insert(DiagnosticCode::ParseError);
    return v;
  }

  const Scan s = scan(text, open);
  if (!s.closed || (!spec.allow_whitespace && s.ws_outside_strings)) {
    codes.insert(DiagnosticCode::ParseError);
    return v;
  }
  const std::string span = spec.permit_raw_newlines
                               ? s.patched
                               : std::string(text.substr(open, s.end - open));
  Collector collector(s.raw_strings);
  const bool ok = nlohmann::json::sax_parse(span, &collector, nlohmann::json::input_format_t::json,
                                            /*strict=*/true);
  if (!ok || !collector.top_is_object) {
    codes.insert(DiagnosticCode::ParseError);
    return v;
  }

  std::vector<bool> seen(spec.keys.size(), false);
  std::ptrdiff_t highest = -1;
  for (const auto& m : collector.members) {
    std::ptrdiff_t index = -1;
    for (std::size_t i = 0; i < spec.keys.size(); ++i) {
      if (!m.key_escaped && spec.keys[i].name == m.key) index = static_cast<std::ptrdiff_t>(i);
    }
    if (index < 0) {
      codes.insert(DiagnosticCode::UnknownKey);
      continue;
    }
    if (seen[static_cast<std::size_t>(index)]) {
      codes.insert(DiagnosticCode::DuplicateKey);
      continue;
    }
    seen[static_cast<std::size_t>(index)] = true;
    if (spec.ordered && index < highest) codes.insert(DiagnosticCode::WrongOrder);
    highest = std::max(highest, index);

    const KeySpec& k = spec.keys[static_cast<std::size_t>(index)];
    bool type_ok = true;
    switch (k.type) {
      case ValueType::String: type_ok = m.kind == Kind::String; break;
      case ValueType::Integer:
        type_ok = m.kind == Kind::Integral && m.number_length <= kMaxNumberLength;
        break;
      case ValueType::Number:
        type_ok = (m.kind == Kind::Integral || m.kind == Kind::Fractional) &&
                  m.number_length <= kMaxNumberLength;
        break;
      case ValueType::Boolean: type_ok = m.kind == Kind::Boolean; break;
      case ValueType::Const:
        type_ok = m.kind == Kind::String && !m.string_escaped && m.string_value == *k.const_value;
        break;
    }
    if (!type_ok) codes.insert(DiagnosticCode::WrongType);
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    codes.insert(DiagnosticCode::MissingKey);
  }
  const std::string_view suffix = text.substr(s.end);
  if (!suffix.empty() && !(spec.allow_whitespace && only_ws(suffix))) {
    codes.insert(DiagnosticCode::ExtraSuffix);
  }
  v.valid = codes.empty();
  return v;
}

inline std::set<DiagnosticCode> code_set(const ValidationReport& r) {
  std::set<DiagnosticCode> out;
  for (const auto& d : r.diagnostics) out.insert(d.code);
  return out;
}

}  // namespace logitctl::testing
