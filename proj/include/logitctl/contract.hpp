// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The logitctl Authors

#pragma once

/**
 * @file contract.hpp
 * @brief Output contracts for flat JSON records.
 *
 * A ContractSpec is compiled into a character-level stage machine. Tokens are
 * judged by folding admit_char over their bytes, so multi-character tokens
 * that straddle structural boundaries (e.g. `","`) are handled uniformly and
 * admissibility is prefix-compositional:
 *
 *   admissible(s, a ++ b)  <=>  admissible(s, a) && admissible(next(s, a), b)
 *
 * validate() is a separate recursive-descent parser that shares no code with
 * the stage machine. The two are cross-checked by brute-force enumeration in
 * the test suite.
 *
 * Closed records only: every key is required, unknown keys are rejected, and
 * keys and const values are matched by their literal spelling.
 */

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "logitctl/logit_core.hpp"

namespace logitctl {

/// Thrown by Contract::compile and the spec loaders.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ValueType : std::uint8_t { String, Integer, Number, Boolean, Const };

struct KeySpec {
  std::string name;
  ValueType type = ValueType::String;
  /// Required for ValueType::Const; the value is a JSON string spelled exactly.
  std::optional<std::string> const_value;

  bool operator==(const KeySpec&) const = default;
};

struct ContractSpec {
  std::vector<KeySpec> keys;
  bool ordered = true;
  bool allow_whitespace = false;
  /// When true, any bytes before the first '{' are tolerated.
  bool allow_preamble = false;
  /// When false (default), a raw '\n' inside a string value is inadmissible.
  bool permit_raw_newlines = false;

  bool operator==(const ContractSpec&) const = default;
};

enum class StageTag : std::uint8_t {
  PreStart,
  ExpectKey,
  InKeyName,
  ExpectColon,
  ExpectValue,
  InStringValue,
  InStringEscape,
  InNumberValue,
  InLiteralValue,
  ExpectCommaOrEnd,
  Done,
  Failed,
};

/// False only inside value bodies (string, escape, number, literal).
bool is_structural(StageTag tag);
bool is_absorbing(StageTag tag);
std::string_view to_string(StageTag tag);
std::string_view to_string(ValueType type);
ValueType value_type_from_string(std::string_view s);

enum class NumberPhase : std::uint8_t { Sign, Zero, Int, Dot, Frac, Exp, ExpSign, ExpDigits };

enum class LiteralKind : std::uint8_t { None, True, False, Const };

/// Small value type; meaningful only together with the Contract it came from.
struct ContractState {
  StageTag stage = StageTag::PreStart;
  std::uint16_t keys_emitted = 0;
  std::int16_t current_key_index = -1;
  std::uint16_t key_char_cursor = 0;
  std::uint16_t value_char_count = 0;
  std::uint16_t pending_literal_cursor = 0;
  std::uint64_t emitted_mask = 0;
  /// Keys still consistent with the key-name bytes read so far.
  std::uint64_t candidate_mask = 0;
  NumberPhase number_phase = NumberPhase::Sign;
  LiteralKind literal = LiteralKind::None;
  /// Hex digits still owed after a \u escape.
  std::uint8_t escape_hex_remaining = 0;

  bool operator==(const ContractState&) const = default;
};

struct AdmitResult {
  bool accepted = false;
  ContractState next;
};

enum class Enforcement { Enforcing, Observing };

struct StepOutcome {
  ContractState state;
  bool violated = false;
};

inline constexpr std::size_t kMaxNumberLength = 64;
inline constexpr std::size_t kMaxKeys = 64;

class Contract {
 public:
  /// Throws SpecError on empty/duplicate key names, names that need JSON
  /// escaping, const keys without a value, or more than kMaxKeys keys.
  static Contract compile(ContractSpec spec);

  const ContractSpec& spec() const { return spec_; }
  const KeySpec& key(std::size_t index) const { return spec_.keys.at(index); }
  std::size_t key_count() const { return spec_.keys.size(); }
  ContractState initial_state() const;

  /// Deterministic one-byte transition. On rejection `next` equals `state`.
  /// Throws std::logic_error if `state` is Done or Failed.
  AdmitResult admit_char(const ContractState& state, unsigned char ch) const;

  /// Folds admit_char over the bytes of `token_text`.
  AdmitResult token_admissible(const ContractState& state, std::string_view token_text) const;

  /// Ids of every admissible token. Empty for absorbing states.
  TokenSet allowlist(const ContractState& state, const Vocabulary& vocab) const;

  /// Done and Failed are fixed points. An inadmissible token moves to Failed
  /// when enforcing, and leaves the state unchanged (violated=true) otherwise.
  StepOutcome step(const ContractState& state, TokenId token, const Vocabulary& vocab,
                   Enforcement mode = Enforcement::Enforcing) const;

 private:
  explicit Contract(ContractSpec spec);

  bool is_ws(unsigned char ch) const;
  std::string_view literal_text(const ContractState& state) const;
  std::uint64_t all_keys_mask() const;
  ContractState complete_value(ContractState s) const;
  std::optional<ContractState> after_value(const ContractState& s, unsigned char ch) const;
  std::optional<ContractState> in_number(const ContractState& s, unsigned char ch) const;
  std::optional<ContractState> start_value(const ContractState& s, unsigned char ch) const;

  ContractSpec spec_;
  std::vector<std::string> const_literals_;
};

// ============================================================================
// Independent full-output validation
// ============================================================================

enum class DiagnosticCode : std::uint8_t {
  ParseError,
  MissingKey,
  WrongType,
  WrongOrder,
  ExtraPrefix,
  ExtraSuffix,
  UnknownKey,
  DuplicateKey,
};

std::string_view to_string(DiagnosticCode code);

struct Diagnostic {
  DiagnosticCode code;
  std::size_t position = 0;
  std::string message;
};

struct ValidationReport {
  bool valid = true;
  std::vector<Diagnostic> diagnostics;

  bool has(DiagnosticCode code) const;
};

/// Recursive-descent check of `text` against `spec`. Never throws on bad
/// input; every failure found is reported.
ValidationReport validate(std::string_view text, const ContractSpec& spec);

/// True when the output parses as a single JSON object with no stray prefix
/// or suffix, regardless of keys and types.
bool syntactically_valid(const ValidationReport& report);

}  // namespace logitctl
