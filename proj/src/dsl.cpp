#include "rldtf/dsl.hpp"

#include <stdexcept>

namespace rldtf {

namespace {

struct ClassSpec {
  TokenClass cls;
  std::vector<std::string> names;
};

std::vector<ClassSpec> class_specs() {
  std::vector<ClassSpec> specs;
  specs.push_back({TokenClass::Structural, {"BOS_TASK", "SEP", "EOS", "PAD"}});
  auto numbered = [](const char* prefix, int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(std::string(prefix) + std::to_string(i));
    return out;
  };
  specs.push_back({TokenClass::SnrBin, numbered("SNR_", 16)});
  specs.push_back({TokenClass::ThrBin, numbered("THR_", 16)});
  specs.push_back({TokenClass::DelBin, numbered("DEL_", 8)});
  specs.push_back({TokenClass::BerBin, numbered("BER_", 8)});
  specs.push_back({TokenClass::Mod, {"MOD_BPSK", "MOD_QPSK", "MOD_QAM16", "MOD_QAM64", "MOD_QAM256"}});
  specs.push_back({TokenClass::CodeRate, {"CR_1/3", "CR_1/2", "CR_2/3", "CR_3/4", "CR_5/6"}});
  std::vector<std::string> prb;
  for (int v : kPrbValues) prb.push_back("PRB_" + std::to_string(v));
  specs.push_back({TokenClass::Prb, prb});
  specs.push_back({TokenClass::Layers, {"LAY_1", "LAY_2", "LAY_4"}});
  specs.push_back({TokenClass::Receiver, {"RX_conv", "RX_neural"}});
  specs.push_back({TokenClass::Retx, {"RETX_0", "RETX_1", "RETX_2", "RETX_3"}});
  return specs;
}

constexpr std::array<int, kNumPlanFields> kFieldSizes = {5, 5, 16, 3, 2, 4};
constexpr std::array<const char*, kNumPlanFields> kFieldNames = {"MOD", "CR", "PRB", "LAY", "RX", "RETX"};

bool is_plan_field(TokenClass c) {
  return static_cast<int>(c) >= static_cast<int>(TokenClass::Mod);
}

}  // namespace

int bits_per_symbol(Modulation m) {
  switch (m) {
    case Modulation::BPSK: return 1;
    case Modulation::QPSK: return 2;
    case Modulation::QAM16: return 4;
    case Modulation::QAM64: return 6;
    case Modulation::QAM256: return 8;
  }
  throw std::invalid_argument("unknown modulation");
}

double code_rate_value(CodeRate r) {
  switch (r) {
    case CodeRate::R1_3: return 1.0 / 3.0;
    case CodeRate::R1_2: return 1.0 / 2.0;
    case CodeRate::R2_3: return 2.0 / 3.0;
    case CodeRate::R3_4: return 3.0 / 4.0;
    case CodeRate::R5_6: return 5.0 / 6.0;
  }
  throw std::invalid_argument("unknown code rate");
}

bool is_valid(const OrchestrationPlan& p) {
  auto in = [](auto v, auto lo, auto hi) { return v >= lo && v <= hi; };
  bool prb_ok = false;
  for (int v : kPrbValues) prb_ok = prb_ok || v == p.n_prb;
  bool lay_ok = false;
  for (int v : kLayerValues) lay_ok = lay_ok || v == p.layers;
  return in(static_cast<int>(p.modulation), 0, 4) && in(static_cast<int>(p.code_rate), 0, 4) &&
         prb_ok && lay_ok && in(static_cast<int>(p.receiver), 0, 1) && in(p.n_retx, 0, kMaxRetx);
}

Vocabulary::Vocabulary() {
  for (const auto& spec : class_specs()) {
    for (std::size_t i = 0; i < spec.names.size(); ++i) {
      ids_.emplace(spec.names[i], static_cast<Token>(names_.size()));
      names_.push_back(spec.names[i]);
      classes_.push_back(spec.cls);
      value_index_.push_back(static_cast<int>(i));
    }
  }
}

const std::string& Vocabulary::name(Token id) const {
  if (!contains(id)) throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
  return names_[static_cast<std::size_t>(id)];
}

Token Vocabulary::id(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) throw std::out_of_range("unknown token name '" + std::string(name) + "'");
  return it->second;
}

TokenClass Vocabulary::token_class(Token id) const {
  if (!contains(id)) throw std::out_of_range("token id outside vocabulary");
  return classes_[static_cast<std::size_t>(id)];
}

int Vocabulary::value_index(Token id) const {
  if (!contains(id)) throw std::out_of_range("token id outside vocabulary");
  return value_index_[static_cast<std::size_t>(id)];
}

Token Vocabulary::class_offset(TokenClass c) const {
  for (std::size_t i = 0; i < classes_.size(); ++i)
    if (classes_[i] == c) return static_cast<Token>(i);
  throw std::logic_error("empty token class");
}

int Vocabulary::class_size(TokenClass c) const {
  int n = 0;
  for (auto k : classes_) n += (k == c);
  return n;
}

Token Vocabulary::token_for(TokenClass c, int value_index) const {
  if (value_index < 0 || value_index >= class_size(c)) throw std::out_of_range("class value index out of range");
  return class_offset(c) + value_index;
}

Vocabulary build_vocab() { return Vocabulary(); }

const Vocabulary& vocab() {
  static const Vocabulary v;
  return v;
}

TokenClass field_class(int field) {
  return static_cast<TokenClass>(static_cast<int>(TokenClass::Mod) + field);
}

std::array<int, kNumPlanFields> field_indices(const OrchestrationPlan& p) {
  int prb = -1;
  for (std::size_t i = 0; i < kPrbValues.size(); ++i)
    if (kPrbValues[i] == p.n_prb) prb = static_cast<int>(i);
  int lay = -1;
  for (std::size_t i = 0; i < kLayerValues.size(); ++i)
    if (kLayerValues[i] == p.layers) lay = static_cast<int>(i);
  if (prb < 0 || lay < 0 || !is_valid(p)) throw std::invalid_argument("plan field outside its domain");
  return {static_cast<int>(p.modulation), static_cast<int>(p.code_rate), prb, lay,
          static_cast<int>(p.receiver), p.n_retx};
}

OrchestrationPlan plan_from_indices(const std::array<int, kNumPlanFields>& idx) {
  for (int f = 0; f < kNumPlanFields; ++f)
    if (idx[f] < 0 || idx[f] >= kFieldSizes[f]) throw std::out_of_range("plan field index out of range");
  OrchestrationPlan p;
  p.modulation = static_cast<Modulation>(idx[0]);
  p.code_rate = static_cast<CodeRate>(idx[1]);
  p.n_prb = kPrbValues[idx[2]];
  p.layers = kLayerValues[idx[3]];
  p.receiver = static_cast<Receiver>(idx[4]);
  p.n_retx = idx[5];
  return p;
}

TokenSeq tokenize_plan(const OrchestrationPlan& plan) {
  const auto idx = field_indices(plan);
  const auto& v = vocab();
  TokenSeq out;
  out.reserve(kPlanLength);
  for (int f = 0; f < kNumPlanFields; ++f) out.push_back(v.token_for(field_class(f), idx[f]));
  out.push_back(kEos);
  return out;
}

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::MissingField: return "missing field";
    case ParseErrorKind::OutOfOrderField: return "out-of-order field";
    case ParseErrorKind::WrongTokenClass: return "wrong token class";
    case ParseErrorKind::MissingEos: return "missing EOS";
    case ParseErrorKind::TrailingTokens: return "trailing tokens";
  }
  return "unknown";
}

ParseResult parse_plan(std::span<const Token> tokens) {
  const auto& v = vocab();
  auto fail = [](ParseErrorKind k, std::size_t pos, std::string detail) {
    return ParseError{k, pos, std::string(to_string(k)) + " at position " + std::to_string(pos) + ": " + detail};
  };
  std::array<int, kNumPlanFields> idx{};
  for (int f = 0; f < kNumPlanFields; ++f) {
    const auto pos = static_cast<std::size_t>(f);
    const std::string expected = std::string("expected ") + kFieldNames[static_cast<std::size_t>(f)] + " field";
    if (pos >= tokens.size()) return fail(ParseErrorKind::MissingField, pos, "sequence ended, " + expected);
    const Token t = tokens[pos];
    if (!v.contains(t)) return fail(ParseErrorKind::WrongTokenClass, pos, "token id " + std::to_string(t) + " not in vocabulary");
    const TokenClass c = v.token_class(t);
    if (c == field_class(f)) {
      idx[f] = v.value_index(t);
    } else if (t == kEos) {
      return fail(ParseErrorKind::MissingField, pos, "EOS before all fields, " + expected);
    } else if (is_plan_field(c)) {
      return fail(ParseErrorKind::OutOfOrderField, pos, v.name(t) + " where " + expected);
    } else {
      return fail(ParseErrorKind::WrongTokenClass, pos, v.name(t) + " is not a plan token");
    }
  }
  const std::size_t eos_pos = kNumPlanFields;
  if (tokens.size() <= eos_pos || tokens[eos_pos] != kEos)
    return fail(ParseErrorKind::MissingEos, eos_pos, "plan not terminated");
  if (tokens.size() > eos_pos + 1)
    return fail(ParseErrorKind::TrailingTokens, eos_pos + 1, std::to_string(tokens.size() - eos_pos - 1) + " token(s) after EOS");
  return plan_from_indices(idx);
}

const std::vector<OrchestrationPlan>& enumerate_plans() {
  static const std::vector<OrchestrationPlan> plans = [] {
    std::vector<OrchestrationPlan> out;
    out.reserve(kPlanSpaceSize);
    std::array<int, kNumPlanFields> idx{};
    for (idx[0] = 0; idx[0] < kFieldSizes[0]; ++idx[0])
      for (idx[1] = 0; idx[1] < kFieldSizes[1]; ++idx[1])
        for (idx[2] = 0; idx[2] < kFieldSizes[2]; ++idx[2])
          for (idx[3] = 0; idx[3] < kFieldSizes[3]; ++idx[3])
            for (idx[4] = 0; idx[4] < kFieldSizes[4]; ++idx[4])
              for (idx[5] = 0; idx[5] < kFieldSizes[5]; ++idx[5]) out.push_back(plan_from_indices(idx));
    return out;
  }();
  return plans;
}

std::size_t plan_index(const OrchestrationPlan& plan) {
  const auto idx = field_indices(plan);
  std::size_t k = 0;
  for (int f = 0; f < kNumPlanFields; ++f) k = k * static_cast<std::size_t>(kFieldSizes[f]) + static_cast<std::size_t>(idx[f]);
  return k;
}

std::string describe(const OrchestrationPlan& plan) {
  const auto toks = tokenize_plan(plan);
  std::string s;
  for (int f = 0; f < kNumPlanFields; ++f) {
    if (f) s += ' ';
    s += vocab().name(toks[static_cast<std::size_t>(f)]);
  }
  return s;
}

}  // namespace rldtf
