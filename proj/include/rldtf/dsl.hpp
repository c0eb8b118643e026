#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace rldtf {

using Token = std::int32_t;
using TokenSeq = std::vector<Token>;

enum class Modulation : std::uint8_t { BPSK, QPSK, QAM16, QAM64, QAM256 };
enum class CodeRate : std::uint8_t { R1_3, R1_2, R2_3, R3_4, R5_6 };
enum class Receiver : std::uint8_t { Conventional, Neural };

int bits_per_symbol(Modulation m);
double code_rate_value(CodeRate r);

inline constexpr std::array<int, 16> kPrbValues = {4,  8,  12, 16, 20, 24, 28, 32,
                                                   36, 40, 44, 48, 52, 56, 60, 64};
inline constexpr std::array<int, 3> kLayerValues = {1, 2, 4};
inline constexpr int kMaxRetx = 3;

struct OrchestrationPlan {
  Modulation modulation = Modulation::BPSK;
  CodeRate code_rate = CodeRate::R1_3;
  int n_prb = 4;
  int layers = 1;
  Receiver receiver = Receiver::Conventional;
  int n_retx = 0;

  auto operator<=>(const OrchestrationPlan&) const = default;
};

// Checks every field against its enumerated domain.
bool is_valid(const OrchestrationPlan& plan);

// Token classes in grammar order. The six plan fields follow the four
// prompt-bin classes.
enum class TokenClass : std::uint8_t {
  Structural,
  SnrBin,
  ThrBin,
  DelBin,
  BerBin,
  Mod,
  CodeRate,
  Prb,
  Layers,
  Receiver,
  Retx,
};

inline constexpr int kNumPlanFields = 6;
inline constexpr int kPlanLength = kNumPlanFields + 1;  // fields + EOS
inline constexpr int kPromptLength = 6;
inline constexpr std::size_t kPlanSpaceSize = 5 * 5 * 16 * 3 * 2 * 4;

inline constexpr Token kBosTask = 0;
inline constexpr Token kSep = 1;
inline constexpr Token kEos = 2;
inline constexpr Token kPad = 3;

class Vocabulary {
 public:
  Vocabulary();

  std::size_t size() const { return names_.size(); }
  const std::string& name(Token id) const;
  // Throws std::out_of_range for unknown names.
  Token id(std::string_view name) const;
  bool contains(Token id) const { return id >= 0 && static_cast<std::size_t>(id) < size(); }

  TokenClass token_class(Token id) const;
  // Index of the token within its class (e.g. PRB_16 -> 3).
  int value_index(Token id) const;
  // First id of a class and its cardinality.
  Token class_offset(TokenClass c) const;
  int class_size(TokenClass c) const;
  Token token_for(TokenClass c, int value_index) const;

  bool operator==(const Vocabulary& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::vector<TokenClass> classes_;
  std::vector<int> value_index_;
  std::unordered_map<std::string, Token> ids_;
};

Vocabulary build_vocab();
// Process-wide immutable instance.
const Vocabulary& vocab();

// Field-domain indices for a plan in grammar order (MOD, CR, PRB, LAY, RX, RETX).
std::array<int, kNumPlanFields> field_indices(const OrchestrationPlan& plan);
OrchestrationPlan plan_from_indices(const std::array<int, kNumPlanFields>& idx);
TokenClass field_class(int field);

TokenSeq tokenize_plan(const OrchestrationPlan& plan);

enum class ParseErrorKind : std::uint8_t {
  MissingField,
  OutOfOrderField,
  WrongTokenClass,
  MissingEos,
  TrailingTokens,
};

struct ParseError {
  ParseErrorKind kind;
  std::size_t position;
  std::string message;
};

std::string_view to_string(ParseErrorKind kind);

class ParseResult {
 public:
  ParseResult(OrchestrationPlan plan) : value_(plan) {}  // NOLINT(implicit)
  ParseResult(ParseError error) : value_(std::move(error)) {}  // NOLINT(implicit)

  bool ok() const { return std::holds_alternative<OrchestrationPlan>(value_); }
  explicit operator bool() const { return ok(); }
  const OrchestrationPlan& plan() const { return std::get<OrchestrationPlan>(value_); }
  const ParseError& error() const { return std::get<ParseError>(value_); }

 private:
  std::variant<OrchestrationPlan, ParseError> value_;
};

// Total on any token sequence; succeeds only on exactly the sequences
// tokenize_plan can produce.
ParseResult parse_plan(std::span<const Token> tokens);

// All plans in lexicographic field order, RETX varying fastest.
const std::vector<OrchestrationPlan>& enumerate_plans();
std::size_t plan_index(const OrchestrationPlan& plan);

std::string describe(const OrchestrationPlan& plan);

}  // namespace rldtf
