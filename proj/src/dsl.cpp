#include "qapt/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

namespace qapt::dsl {

namespace {

constexpr std::array<std::string_view, 3> kQueryNames = {"FinalValue", "ChangeSign", "IncreaseOf"};
constexpr std::array<std::string_view, 2> kClauseNames = {"SetTo", "IncreaseBy"};

enum class Tok { Ident, Number, LParen, RParen, Comma, End };

struct Token {
  Tok kind;
  std::string_view text;
  std::size_t pos;
  double number = 0.0;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::Number: return "number " + std::string(t.text);
    default: return "'" + std::string(t.text) + "'";
  }
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_number_char(char c) {
  return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == 'e' || c == 'E' || c == '+' || c == '-';
}

class Lexer {
public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::size_t start = pos_;
    if (pos_ == src_.size()) return {Tok::End, {}, start};

    const char c = src_[pos_];
    switch (c) {
      case '(': ++pos_; return {Tok::LParen, src_.substr(start, 1), start};
      case ')': ++pos_; return {Tok::RParen, src_.substr(start, 1), start};
      case ',': ++pos_; return {Tok::Comma, src_.substr(start, 1), start};
      default: break;
    }
    if (is_ident_start(c)) {
      while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
      return {Tok::Ident, src_.substr(start, pos_ - start), start};
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.') {
      ++pos_;
      while (pos_ < src_.size() && is_number_char(src_[pos_])) ++pos_;
      const auto text = src_.substr(start, pos_ - start);
      const auto value = parse_number(text);
      if (!value) throw SyntaxError("malformed number '" + std::string(text) + "'", start, {"number"});
      return {Tok::Number, text, start, *value};
    }
    throw SyntaxError("unexpected character '" + std::string(1, c) + "'", start,
                      {"identifier", "number", "(", ")", ","});
  }

private:
  std::string_view src_;
  std::size_t pos_ = 0;
};

template <std::size_t N>
std::vector<std::string> names_of(const std::array<std::string_view, N>& arr) {
  return {arr.begin(), arr.end()};
}

std::vector<std::string> param_names() {
  std::vector<std::string> out;
  for (Param p : boxmodel::kAllParams) out.emplace_back(boxmodel::name(p));
  return out;
}

std::vector<std::string> variable_names() {
  std::vector<std::string> out;
  for (Variable v : boxmodel::kAllVariables) out.emplace_back(boxmodel::name(v));
  return out;
}

class Parser {
public:
  explicit Parser(std::string_view src) : lex_(src) { advance(); }

  Program program() {
    Program p{};
    p.query = query();
    expect(Tok::LParen, "(");
    run_function();
    expect(Tok::LParen, "(");
    p.run = clauses();
    expect(Tok::Comma, ",");
    p.variable = variable();
    expect(Tok::RParen, ")");
    if (cur_.kind != Tok::End)
      throw SyntaxError("trailing input after program: " + describe(cur_), cur_.pos, {"end of input"});
    if (pending_) throw *pending_;
    return p;
  }

private:
  void advance() { cur_ = lex_.next(); }

  /// Keeps the first validation problem; syntax errors later in the text take precedence.
  void defer(ValidationError e) {
    if (!pending_) pending_.emplace(std::move(e));
  }

  [[noreturn]] void fail(std::vector<std::string> expected) {
    std::string msg = "expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) msg += (i ? " or " : "") + expected[i];
    msg += ", got " + describe(cur_);
    throw SyntaxError(msg, cur_.pos, std::move(expected));
  }

  void expect(Tok kind, std::string_view spelling) {
    if (cur_.kind != kind) fail({std::string(spelling)});
    advance();
  }

  Token ident(const std::vector<std::string>& expected) {
    if (cur_.kind != Tok::Ident) fail(expected);
    Token t = cur_;
    advance();
    return t;
  }

  Query query() {
    const auto expected = names_of(kQueryNames);
    const Token t = ident(expected);
    if (auto q = query_from_name(t.text)) return *q;
    defer(ValidationError("unknown query function '" + std::string(t.text) + "'", t.pos, expected));
    return Query{};
  }

  void run_function() {
    const Token t = ident({std::string(kRunFunction)});
    if (t.text != kRunFunction)
      defer(ValidationError("unknown run function '" + std::string(t.text) + "'", t.pos, {std::string(kRunFunction)}));
  }

  RunExpr clauses() {
    RunExpr run;
    if (cur_.kind == Tok::RParen) {
      advance();
      return run;
    }
    std::set<Param> seen;
    while (true) {
      if (run.clauses.size() == kMaxClauses) {
        Violation v{Violation::Rule::TooManyClauses, std::nullopt, run.clauses.size()};
        defer(ValidationError(v.message(), cur_.pos, {")"}, {v}));
      }
      run.clauses.push_back(clause(seen, run.clauses.size()));
      if (cur_.kind == Tok::RParen) {
        advance();
        return run;
      }
      if (cur_.kind != Tok::Comma) fail({",", ")"});
      advance();
    }
  }

  Clause clause(std::set<Param>& seen, std::size_t index) {
    const auto kinds = names_of(kClauseNames);
    const Token head = ident(index == 0 ? std::vector<std::string>{"SetTo", "IncreaseBy", ")"} : kinds);
    const auto kind = clause_kind_from_name(head.text);
    if (!kind) defer(ValidationError("unknown clause function '" + std::string(head.text) + "'", head.pos, kinds));
    expect(Tok::LParen, "(");

    const Token pt = ident(param_names());
    const auto param = boxmodel::param_from_name(pt.text);
    if (!param) defer(ValidationError("unknown parameter '" + std::string(pt.text) + "'", pt.pos, param_names()));
    if (param && !seen.insert(*param).second) {
      std::vector<std::string> unused;
      for (Param q : boxmodel::kAllParams)
        if (!seen.contains(q)) unused.emplace_back(boxmodel::name(q));
      Violation v{Violation::Rule::DuplicateParam, *param, index};
      defer(ValidationError(v.message(), pt.pos, std::move(unused), {v}));
    }
    expect(Tok::Comma, ",");

    if (cur_.kind != Tok::Number) fail({"number"});
    const Token num = cur_;
    advance();
    Clause c{kind.value_or(ClauseKind{}), param.value_or(Param{}), num.number};
    if (c.param == Param::Steps && (c.value != std::floor(c.value) || c.value < 1)) {
      Violation v{Violation::Rule::NonIntegerSteps, c.param, index};
      defer(ValidationError(v.message(), num.pos, {"positive integer"}, {v}));
    }
    expect(Tok::RParen, ")");
    return c;
  }

  Variable variable() {
    const auto expected = variable_names();
    const Token t = ident(expected);
    if (auto v = boxmodel::variable_from_name(t.text)) return *v;
    defer(ValidationError("unknown variable '" + std::string(t.text) + "'", t.pos, expected));
    return Variable{};
  }

  Lexer lex_;
  Token cur_{};
  std::optional<ValidationError> pending_;
};

}  // namespace

std::string_view name(Query q) { return kQueryNames[static_cast<std::size_t>(q)]; }
std::string_view name(ClauseKind k) { return kClauseNames[static_cast<std::size_t>(k)]; }

std::optional<Query> query_from_name(std::string_view s) {
  for (Query q : kAllQueries)
    if (name(q) == s) return q;
  return std::nullopt;
}

std::optional<ClauseKind> clause_kind_from_name(std::string_view s) {
  if (s == "SetTo") return ClauseKind::SetTo;
  if (s == "IncreaseBy") return ClauseKind::IncreaseBy;
  return std::nullopt;
}

std::string_view name(Violation::Rule r) {
  switch (r) {
    case Violation::Rule::TooManyClauses: return "TooManyClauses";
    case Violation::Rule::DuplicateParam: return "DuplicateParam";
    case Violation::Rule::NonIntegerSteps: return "NonIntegerSteps";
    case Violation::Rule::NonFiniteValue: return "NonFiniteValue";
  }
  return "";
}

std::string Violation::message() const {
  std::string out(name(rule));
  if (param) out += "(" + std::string(boxmodel::name(*param)) + ")";
  switch (rule) {
    case Rule::TooManyClauses: out += ": at most 3 clauses are allowed"; break;
    case Rule::DuplicateParam: out += ": parameter set by more than one clause"; break;
    case Rule::NonIntegerSteps: out += ": N must be a positive integer"; break;
    case Rule::NonFiniteValue: out += ": clause value must be finite"; break;
  }
  return out;
}

Program parse(std::string_view text) { return Parser(text).program(); }

std::string print_program(const Program& p) {
  std::string out(name(p.query));
  out += "(";
  out += kRunFunction;
  out += "(";
  for (std::size_t i = 0; i < p.run.clauses.size(); ++i) {
    const Clause& c = p.run.clauses[i];
    if (i) out += ",";
    out += name(c.kind);
    out += "(";
    out += boxmodel::name(c.param);
    out += ",";
    out += format_number(c.value);
    out += ")";
  }
  out += "),";
  out += boxmodel::name(p.variable);
  out += ")";
  return out;
}

std::vector<Violation> validate(const Program& p) {
  std::vector<Violation> out;
  if (p.run.clauses.size() > kMaxClauses) out.push_back({Violation::Rule::TooManyClauses, std::nullopt, kMaxClauses});
  std::set<Param> seen;
  for (std::size_t i = 0; i < p.run.clauses.size(); ++i) {
    const Clause& c = p.run.clauses[i];
    if (!seen.insert(c.param).second) out.push_back({Violation::Rule::DuplicateParam, c.param, i});
    if (!std::isfinite(c.value))
      out.push_back({Violation::Rule::NonFiniteValue, c.param, i});
    else if (c.param == Param::Steps && (c.value != std::floor(c.value) || c.value < 1))
      out.push_back({Violation::Rule::NonIntegerSteps, c.param, i});
  }
  return out;
}

std::string format_number(double value) {
  if (value == 0.0) return "0";
  if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");

  char buf[64];
  auto fixed_end = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed).ptr;
  std::string fixed(buf, fixed_end);

  const double mag = std::fabs(value);
  if (mag >= 1e-3 && mag < 1e4) return fixed;

  auto sci_end = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::scientific).ptr;
  std::string sci(buf, sci_end);
  // "5.8e+04" -> "5.8e4", "4.24e-06" -> "4.24e-6"
  const auto e = sci.find('e');
  std::string mantissa = sci.substr(0, e + 1);
  std::string_view exp = std::string_view(sci).substr(e + 1);
  bool negative = false;
  if (!exp.empty() && (exp.front() == '+' || exp.front() == '-')) {
    negative = exp.front() == '-';
    exp.remove_prefix(1);
  }
  while (exp.size() > 1 && exp.front() == '0') exp.remove_prefix(1);
  sci = mantissa + (negative ? "-" : "") + std::string(exp);

  return sci.size() <= fixed.size() ? sci : fixed;
}

std::optional<double> parse_number(std::string_view text) {
  std::size_t i = 0;
  const auto digits = [&] {
    const std::size_t start = i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    return i > start;
  };
  if (i < text.size() && text[i] == '-') ++i;
  if (!digits()) return std::nullopt;
  if (i < text.size() && text[i] == '.') {
    ++i;
    if (!digits()) return std::nullopt;
  }
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) ++i;
    if (!digits()) return std::nullopt;
  }
  if (i != text.size()) return std::nullopt;

  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace qapt::dsl
