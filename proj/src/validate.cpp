// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

// Recursive-descent validator. Deliberately shares nothing with the stage
// machine in contract.cpp; the test suite checks the two against each other.

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>

#include "logitctl/contract.hpp"

namespace logitctl {

std::string_view to_string(DiagnosticCode code) {
  switch (code) {
    case DiagnosticCode::ParseError: return "parse_error";
    case DiagnosticCode::MissingKey: return "missing_key";
    case DiagnosticCode::WrongType: return "wrong_type";
    case DiagnosticCode::WrongOrder: return "wrong_order";
    case DiagnosticCode::ExtraPrefix: return "extra_prefix";
    case DiagnosticCode::ExtraSuffix: return "extra_suffix";
    case DiagnosticCode::UnknownKey: return "unknown_key";
    case DiagnosticCode::DuplicateKey: return "duplicate_key";
  }
  return "?";
}

bool ValidationReport::has(DiagnosticCode code) const {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [code](const Diagnostic& d) { return d.code == code; });
}

bool syntactically_valid(const ValidationReport& report) {
  return !report.has(DiagnosticCode::ParseError) && !report.has(DiagnosticCode::ExtraPrefix) &&
         !report.has(DiagnosticCode::ExtraSuffix);
}

namespace {

enum class JsonKind { String, Number, Boolean, Null, Object, Array };

struct ParsedValue {
  JsonKind kind = JsonKind::Null;
  std::size_t position = 0;
  std::string_view raw;  // for strings: the bytes between the quotes
  bool integral = false;
};

struct Member {
  std::string_view key;
  std::size_t key_position;
  ParsedValue value;
};

struct ParseFailure {
  std::size_t position;
  std::string message;
};

bool json_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool only_ws(std::string_view s) { return std::all_of(s.begin(), s.end(), json_ws); }

class JsonParser {
 public:
  JsonParser(std::string_view text, std::size_t pos, const ContractSpec& spec)
      : text_(text), pos_(pos), spec_(spec) {}

  std::size_t pos() const { return pos_; }
  const std::optional<ParseFailure>& failure() const { return failure_; }

  /// Parses the top-level object, collecting its members.
  bool parse_record(std::vector<Member>& members) {
    if (!expect('{')) return false;
    if (!skip_ws()) return false;
    if (peek() == '}') {
      ++pos_;
      return true;
    }
    while (true) {
      if (!skip_ws()) return false;
      Member m;
      m.key_position = pos_;
      if (peek() != '"') return fail("expected key string");
      if (!parse_string(m.key)) return false;
      if (!skip_ws() || !expect(':') || !skip_ws()) return false;
      if (!parse_value(m.value)) return false;
      members.push_back(m);
      if (!skip_ws()) return false;
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == '}') {
        ++pos_;
        return true;
      }
      return fail("expected ',' or '}'");
    }
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  int peek() const { return at_end() ? -1 : static_cast<unsigned char>(text_[pos_]); }

  bool fail(std::string message) {
    if (!failure_) failure_ = ParseFailure{pos_, std::move(message)};
    return false;
  }

  bool expect(char c) {
    if (peek() != static_cast<unsigned char>(c)) return fail(std::string("expected '") + c + "'");
    ++pos_;
    return true;
  }

  bool skip_ws() {
    while (!at_end() && json_ws(text_[pos_])) {
      if (!spec_.allow_whitespace) return fail("whitespace not permitted");
      ++pos_;
    }
    return true;
  }

  bool parse_string(std::string_view& raw) {
    ++pos_;  // opening quote
    const std::size_t begin = pos_;
    while (true) {
      if (at_end()) return fail("unterminated string");
      const auto c = static_cast<unsigned char>(text_[pos_]);
      if (c == '"') {
        raw = text_.substr(begin, pos_ - begin);
        ++pos_;
        return true;
      }
      if (c == '\\') {
        ++pos_;
        if (at_end()) return fail("unterminated escape");
        const char e = text_[pos_];
        if (e == 'u') {
          for (int i = 0; i < 4; ++i) {
            ++pos_;
            if (at_end() || !std::isxdigit(static_cast<unsigned char>(text_[pos_]))) {
              return fail("bad \\u escape");
            }
          }
        } else if (std::string_view("\"\\/bfnrt").find(e) == std::string_view::npos) {
          return fail("bad escape");
        }
        ++pos_;
        continue;
      }
      if (c < 0x20 && !(c == '\n' && spec_.permit_raw_newlines)) {
        return fail("raw control character in string");
      }
      ++pos_;
    }
  }

  bool digits() {
    const std::size_t start = pos_;
    while (!at_end() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
    return pos_ > start;
  }

  bool parse_number(ParsedValue& v) {
    const std::size_t start = pos_;
    v.integral = true;
    if (peek() == '-') ++pos_;
    if (peek() == '0') {
      ++pos_;
    } else if (peek() >= '1' && peek() <= '9') {
      digits();
    } else {
      return fail("bad number");
    }
    if (peek() == '.') {
      v.integral = false;
      ++pos_;
      if (!digits()) return fail("expected fraction digits");
    }
    if (peek() == 'e' || peek() == 'E') {
      v.integral = false;
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      if (!digits()) return fail("expected exponent digits");
    }
    v.raw = text_.substr(start, pos_ - start);
    return true;
  }

  bool parse_word(std::string_view word) {
    for (char w : word) {
      if (peek() != static_cast<unsigned char>(w)) return fail("bad literal");
      ++pos_;
    }
    return true;
  }

  bool parse_value(ParsedValue& v) {
    v.position = pos_;
    const int c = peek();
    if (c == '"') {
      v.kind = JsonKind::String;
      return parse_string(v.raw);
    }
    if (c == '-' || (c >= '0' && c <= '9')) {
      v.kind = JsonKind::Number;
      return parse_number(v);
    }
    if (c == 't' || c == 'f') {
      v.kind = JsonKind::Boolean;
      return parse_word(c == 't' ? "true" : "false");
    }
    if (c == 'n') {
      v.kind = JsonKind::Null;
      return parse_word("null");
    }
    if (c == '{' || c == '[') return parse_container(v, static_cast<char>(c));
    return fail("expected value");
  }

  // Nested containers are parsed only so they can be reported as wrong_type.
  bool parse_container(ParsedValue& v, char open) {
    v.kind = open == '{' ? JsonKind::Object : JsonKind::Array;
    const char close = open == '{' ? '}' : ']';
    ++pos_;
    if (!skip_ws()) return false;
    if (peek() == static_cast<unsigned char>(close)) {
      ++pos_;
      return true;
    }
    while (true) {
      if (!skip_ws()) return false;
      if (open == '{') {
        std::string_view key;
        if (peek() != '"') return fail("expected key string");
        if (!parse_string(key) || !skip_ws() || !expect(':') || !skip_ws()) return false;
      }
      ParsedValue inner;
      if (!parse_value(inner) || !skip_ws()) return false;
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == static_cast<unsigned char>(close)) {
        ++pos_;
        return true;
      }
      return fail("unterminated container");
    }
  }

  std::string_view text_;
  std::size_t pos_;
  const ContractSpec& spec_;
  std::optional<ParseFailure> failure_;
};

std::optional<std::string> type_mismatch(const KeySpec& key, const ParsedValue& v) {
  switch (key.type) {
    case ValueType::String:
      if (v.kind != JsonKind::String) return "expected string";
      break;
    case ValueType::Integer:
      if (v.kind != JsonKind::Number || !v.integral) return "expected integer";
      if (v.raw.size() > kMaxNumberLength) return "number too long";
      break;
    case ValueType::Number:
      if (v.kind != JsonKind::Number) return "expected number";
      if (v.raw.size() > kMaxNumberLength) return "number too long";
      break;
    case ValueType::Boolean:
      if (v.kind != JsonKind::Boolean) return "expected boolean";
      break;
    case ValueType::Const:
      if (v.kind != JsonKind::String || v.raw != *key.const_value) {
        return "expected constant \"" + *key.const_value + "\"";
      }
      break;
  }
  return std::nullopt;
}

}  // namespace

ValidationReport validate(std::string_view text, const ContractSpec& spec) {
  ValidationReport report;
  auto add = [&report](DiagnosticCode code, std::size_t pos, std::string msg) {
    report.diagnostics.push_back({code, pos, std::move(msg)});
  };

  const std::size_t open = text.find('{');
  const std::string_view prefix = text.substr(0, std::min(open, text.size()));
  if (!spec.allow_preamble && !prefix.empty() && (!spec.allow_whitespace || !only_ws(prefix))) {
    add(DiagnosticCode::ExtraPrefix, 0, "content before the JSON object");
  }
  if (open == std::string_view::npos) {
    add(DiagnosticCode::ParseError, text.size(), "no JSON object found");
    report.valid = false;
    return report;
  }

  JsonParser parser(text, open, spec);
  std::vector<Member> members;
  if (!parser.parse_record(members)) {
    const auto& f = *parser.failure();
    add(DiagnosticCode::ParseError, f.position, f.message);
    report.valid = false;
    return report;
  }
  const std::size_t end = parser.pos();

  std::vector<bool> seen(spec.keys.size(), false);
  std::ptrdiff_t last_index = -1;
  for (const auto& m : members) {
    auto it = std::find_if(spec.keys.begin(), spec.keys.end(),
                           [&](const KeySpec& k) { return k.name == m.key; });
    if (it == spec.keys.end()) {
      add(DiagnosticCode::UnknownKey, m.key_position, "unknown key \"" + std::string(m.key) + "\"");
      continue;
    }
    const auto index = it - spec.keys.begin();
    if (seen[static_cast<std::size_t>(index)]) {
      add(DiagnosticCode::DuplicateKey, m.key_position, "duplicate key \"" + it->name + "\"");
      continue;
    }
    seen[static_cast<std::size_t>(index)] = true;
    if (spec.ordered && index < last_index) {
      add(DiagnosticCode::WrongOrder, m.key_position, "key \"" + it->name + "\" out of order");
    }
    last_index = std::max(last_index, index);
    if (auto why = type_mismatch(*it, m.value)) {
      add(DiagnosticCode::WrongType, m.value.position, "key \"" + it->name + "\": " + *why);
    }
  }
  for (std::size_t i = 0; i < spec.keys.size(); ++i) {
    if (!seen[i]) add(DiagnosticCode::MissingKey, end, "missing key \"" + spec.keys[i].name + "\"");
  }

  const std::string_view suffix = text.substr(end);
  if (!suffix.empty() && (!spec.allow_whitespace || !only_ws(suffix))) {
    add(DiagnosticCode::ExtraSuffix, end, "content after the JSON object");
  }

  report.valid = report.diagnostics.empty();
  return report;
}

}  // namespace logitctl
