// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#include "logitctl/contract.hpp"

#include <set>
#include <stdexcept>

namespace logitctl {

namespace {

bool is_digit(unsigned char ch) { return ch >= '0' && ch <= '9'; }

bool is_hex(unsigned char ch) {
  return is_digit(ch) || (ch >= 'a' && ch <= 'f') || (ch >= 'A' && ch <= 'F');
}

bool needs_escape(std::string_view s) {
  for (unsigned char ch : s) {
    if (ch == '"' || ch == '\\' || ch < 0x20) return true;
  }
  return false;
}

bool number_phase_accepting(NumberPhase p) {
  return p == NumberPhase::Zero || p == NumberPhase::Int || p == NumberPhase::Frac ||
         p == NumberPhase::ExpDigits;
}

std::uint64_t bit(std::size_t i) { return std::uint64_t{1} << i; }

}  // namespace

bool is_structural(StageTag tag) {
  switch (tag) {
    case StageTag::InStringValue:
    case StageTag::InStringEscape:
    case StageTag::InNumberValue:
    case StageTag::InLiteralValue:
      return false;
    default:
      return true;
  }
}

bool is_absorbing(StageTag tag) { return tag == StageTag::Done || tag == StageTag::Failed; }

std::string_view to_string(StageTag tag) {
  switch (tag) {
    case StageTag::PreStart: return "PreStart";
    case StageTag::ExpectKey: return "ExpectKey";
    case StageTag::InKeyName: return "InKeyName";
    case StageTag::ExpectColon: return "ExpectColon";
    case StageTag::ExpectValue: return "ExpectValue";
    case StageTag::InStringValue: return "InStringValue";
    case StageTag::InStringEscape: return "InStringEscape";
    case StageTag::InNumberValue: return "InNumberValue";
    case StageTag::InLiteralValue: return "InLiteralValue";
    case StageTag::ExpectCommaOrEnd: return "ExpectCommaOrEnd";
    case StageTag::Done: return "Done";
    case StageTag::Failed: return "Failed";
  }
  return "?";
}

std::string_view to_string(ValueType type) {
  switch (type) {
    case ValueType::String: return "string";
    case ValueType::Integer: return "integer";
    case ValueType::Number: return "number";
    case ValueType::Boolean: return "boolean";
    case ValueType::Const: return "const";
  }
  return "?";
}

ValueType value_type_from_string(std::string_view s) {
  if (s == "string") return ValueType::String;
  if (s == "integer") return ValueType::Integer;
  if (s == "number") return ValueType::Number;
  if (s == "boolean") return ValueType::Boolean;
  if (s == "const") return ValueType::Const;
  throw SpecError("unknown value type: " + std::string(s));
}

// ----------------------------------------------------------------------------
// Compilation

Contract::Contract(ContractSpec spec) : spec_(std::move(spec)) {
  const_literals_.reserve(spec_.keys.size());
  for (const auto& k : spec_.keys) {
    const_literals_.push_back(k.type == ValueType::Const ? "\"" + *k.const_value + "\"" : std::string{});
  }
}

Contract Contract::compile(ContractSpec spec) {
  if (spec.keys.size() > kMaxKeys) throw SpecError("too many keys");
  std::set<std::string> seen;
  for (const auto& k : spec.keys) {
    if (k.name.empty()) throw SpecError("empty key name");
    if (needs_escape(k.name)) throw SpecError("key name needs JSON escaping: " + k.name);
    if (!seen.insert(k.name).second) throw SpecError("duplicate key name: " + k.name);
    if (k.type == ValueType::Const) {
      if (!k.const_value) throw SpecError("const key without value: " + k.name);
      if (needs_escape(*k.const_value)) throw SpecError("const value needs JSON escaping: " + k.name);
    }
  }
  return Contract(std::move(spec));
}

ContractState Contract::initial_state() const { return ContractState{}; }

std::uint64_t Contract::all_keys_mask() const {
  return spec_.keys.size() == 64 ? ~std::uint64_t{0} : bit(spec_.keys.size()) - 1;
}

bool Contract::is_ws(unsigned char ch) const {
  return spec_.allow_whitespace && (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r');
}

std::string_view Contract::literal_text(const ContractState& s) const {
  switch (s.literal) {
    case LiteralKind::True: return "true";
    case LiteralKind::False: return "false";
    case LiteralKind::Const:
      return const_literals_[static_cast<std::size_t>(s.current_key_index)];
    case LiteralKind::None: break;
  }
  return {};
}

// ----------------------------------------------------------------------------
// Character transitions

ContractState Contract::complete_value(ContractState s) const {
  s.keys_emitted++;
  s.emitted_mask |= bit(static_cast<std::size_t>(s.current_key_index));
  s.current_key_index = -1;
  s.key_char_cursor = 0;
  s.value_char_count = 0;
  s.pending_literal_cursor = 0;
  s.candidate_mask = 0;
  s.number_phase = NumberPhase::Sign;
  s.literal = LiteralKind::None;
  s.escape_hex_remaining = 0;
  s.stage = StageTag::ExpectCommaOrEnd;
  return s;
}

std::optional<ContractState> Contract::after_value(const ContractState& s, unsigned char ch) const {
  ContractState n = s;
  if (is_ws(ch)) return n;
  if (ch == ',' && s.keys_emitted < spec_.keys.size()) {
    n.stage = StageTag::ExpectKey;
    return n;
  }
  if (ch == '}' && s.keys_emitted == spec_.keys.size()) {
    n.stage = StageTag::Done;
    return n;
  }
  return std::nullopt;
}

std::optional<ContractState> Contract::start_value(const ContractState& s, unsigned char ch) const {
  ContractState n = s;
  const auto idx = static_cast<std::size_t>(s.current_key_index);
  const KeySpec& key = spec_.keys[idx];
  switch (key.type) {
    case ValueType::String:
      if (ch != '"') return std::nullopt;
      n.stage = StageTag::InStringValue;
      n.value_char_count = 0;
      return n;
    case ValueType::Const:
      if (ch != static_cast<unsigned char>(const_literals_[idx][0])) return std::nullopt;
      n.stage = StageTag::InLiteralValue;
      n.literal = LiteralKind::Const;
      n.pending_literal_cursor = 1;
      return n;
    case ValueType::Boolean:
      if (ch != 't' && ch != 'f') return std::nullopt;
      n.stage = StageTag::InLiteralValue;
      n.literal = ch == 't' ? LiteralKind::True : LiteralKind::False;
      n.pending_literal_cursor = 1;
      return n;
    case ValueType::Integer:
    case ValueType::Number:
      if (ch == '-') {
        n.number_phase = NumberPhase::Sign;
      } else if (ch == '0') {
        n.number_phase = NumberPhase::Zero;
      } else if (is_digit(ch)) {
        n.number_phase = NumberPhase::Int;
      } else {
        return std::nullopt;
      }
      n.stage = StageTag::InNumberValue;
      n.value_char_count = 1;
      return n;
  }
  return std::nullopt;
}

std::optional<ContractState> Contract::in_number(const ContractState& s, unsigned char ch) const {
  const bool integer_only =
      spec_.keys[static_cast<std::size_t>(s.current_key_index)].type == ValueType::Integer;
  std::optional<NumberPhase> next;
  switch (s.number_phase) {
    case NumberPhase::Sign:
      if (ch == '0') next = NumberPhase::Zero;
      else if (is_digit(ch)) next = NumberPhase::Int;
      break;
    case NumberPhase::Zero:
    case NumberPhase::Int:
      if (s.number_phase == NumberPhase::Int && is_digit(ch)) next = NumberPhase::Int;
      else if (!integer_only && ch == '.') next = NumberPhase::Dot;
      else if (!integer_only && (ch == 'e' || ch == 'E')) next = NumberPhase::Exp;
      break;
    case NumberPhase::Dot:
      if (is_digit(ch)) next = NumberPhase::Frac;
      break;
    case NumberPhase::Frac:
      if (is_digit(ch)) next = NumberPhase::Frac;
      else if (ch == 'e' || ch == 'E') next = NumberPhase::Exp;
      break;
    case NumberPhase::Exp:
      if (ch == '+' || ch == '-') next = NumberPhase::ExpSign;
      else if (is_digit(ch)) next = NumberPhase::ExpDigits;
      break;
    case NumberPhase::ExpSign:
    case NumberPhase::ExpDigits:
      if (is_digit(ch)) next = NumberPhase::ExpDigits;
      break;
  }
  if (next) {
    if (s.value_char_count >= kMaxNumberLength) return std::nullopt;
    ContractState n = s;
    n.number_phase = *next;
    n.value_char_count++;
    return n;
  }
  if (!number_phase_accepting(s.number_phase)) return std::nullopt;
  // The terminator is consumed by the delimiter stage.
  return after_value(complete_value(s), ch);
}

AdmitResult Contract::admit_char(const ContractState& s, unsigned char ch) const {
  if (is_absorbing(s.stage)) {
    throw std::logic_error("admit_char called on absorbing stage " + std::string(to_string(s.stage)));
  }
  std::optional<ContractState> next;
  ContractState n = s;

  switch (s.stage) {
    case StageTag::PreStart:
      if (ch == '{') {
        n.stage = spec_.keys.empty() ? StageTag::ExpectCommaOrEnd : StageTag::ExpectKey;
        next = n;
      } else if (spec_.allow_preamble || is_ws(ch)) {
        next = n;
      }
      break;

    case StageTag::ExpectKey:
      if (is_ws(ch)) {
        next = n;
      } else if (ch == '"' && s.keys_emitted < spec_.keys.size()) {
        n.stage = StageTag::InKeyName;
        n.key_char_cursor = 0;
        n.candidate_mask = spec_.ordered ? bit(s.keys_emitted) : (all_keys_mask() & ~s.emitted_mask);
        next = n;
      }
      break;

    case StageTag::InKeyName: {
      const std::size_t cursor = s.key_char_cursor;
      if (ch == '"') {
        for (std::size_t i = 0; i < spec_.keys.size(); ++i) {
          if ((s.candidate_mask & bit(i)) && spec_.keys[i].name.size() == cursor) {
            n.stage = StageTag::ExpectColon;
            n.current_key_index = static_cast<std::int16_t>(i);
            n.candidate_mask = 0;
            next = n;
            break;
          }
        }
      } else {
        std::uint64_t narrowed = 0;
        for (std::size_t i = 0; i < spec_.keys.size(); ++i) {
          const auto& name = spec_.keys[i].name;
          if ((s.candidate_mask & bit(i)) && name.size() > cursor &&
              static_cast<unsigned char>(name[cursor]) == ch) {
            narrowed |= bit(i);
          }
        }
        if (narrowed != 0) {
          n.candidate_mask = narrowed;
          n.key_char_cursor++;
          next = n;
        }
      }
      break;
    }

    case StageTag::ExpectColon:
      if (is_ws(ch)) {
        next = n;
      } else if (ch == ':') {
        n.stage = StageTag::ExpectValue;
        next = n;
      }
      break;

    case StageTag::ExpectValue:
      next = is_ws(ch) ? std::optional<ContractState>(n) : start_value(s, ch);
      break;

    case StageTag::InStringValue:
      if (ch == '"') {
        next = complete_value(s);
      } else if (ch == '\\') {
        n.stage = StageTag::InStringEscape;
        n.escape_hex_remaining = 0;
        next = n;
      } else if (ch >= 0x20 || (ch == '\n' && spec_.permit_raw_newlines)) {
        n.value_char_count++;
        next = n;
      }
      break;

    case StageTag::InStringEscape:
      if (s.escape_hex_remaining > 0) {
        if (is_hex(ch)) {
          n.escape_hex_remaining--;
          if (n.escape_hex_remaining == 0) n.stage = StageTag::InStringValue;
          next = n;
        }
      } else if (ch == 'u') {
        n.escape_hex_remaining = 4;
        next = n;
      } else if (ch == '"' || ch == '\\' || ch == '/' || ch == 'b' || ch == 'f' || ch == 'n' ||
                 ch == 'r' || ch == 't') {
        n.stage = StageTag::InStringValue;
        n.value_char_count++;
        next = n;
      }
      break;

    case StageTag::InNumberValue:
      next = in_number(s, ch);
      break;

    case StageTag::InLiteralValue: {
      const auto lit = literal_text(s);
      if (s.pending_literal_cursor < lit.size() &&
          static_cast<unsigned char>(lit[s.pending_literal_cursor]) == ch) {
        n.pending_literal_cursor++;
        next = n.pending_literal_cursor == lit.size() ? complete_value(n) : n;
      }
      break;
    }

    case StageTag::ExpectCommaOrEnd:
      next = after_value(s, ch);
      break;

    case StageTag::Done:
    case StageTag::Failed:
      break;
  }

  if (!next) return {false, s};
  return {true, *next};
}

AdmitResult Contract::token_admissible(const ContractState& state, std::string_view token_text) const {
  ContractState cur = state;
  for (std::size_t i = 0; i < token_text.size(); ++i) {
    if (is_absorbing(cur.stage)) return {false, state};
    auto r = admit_char(cur, static_cast<unsigned char>(token_text[i]));
    if (!r.accepted) return {false, state};
    cur = r.next;
  }
  return {!token_text.empty(), token_text.empty() ? state : cur};
}

TokenSet Contract::allowlist(const ContractState& state, const Vocabulary& vocab) const {
  TokenSet out;
  if (is_absorbing(state.stage)) return out;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (token_admissible(state, vocab.texts()[i]).accepted) out.push_back(static_cast<TokenId>(i));
  }
  return out;
}

StepOutcome Contract::step(const ContractState& state, TokenId token, const Vocabulary& vocab,
                           Enforcement mode) const {
  if (is_absorbing(state.stage)) return {state, false};
  auto r = token_admissible(state, vocab.text(token));
  if (r.accepted) return {r.next, false};
  if (mode == Enforcement::Enforcing) {
    ContractState failed = state;
    failed.stage = StageTag::Failed;
    return {failed, true};
  }
  return {state, true};
}

}  // namespace logitctl
