#pragma once

#include "qapt/boxmodel.hpp"
#include "qapt/error.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qapt::dsl {

using boxmodel::Param;
using boxmodel::Variable;

enum class Query { FinalValue, ChangeSign, IncreaseOf };
enum class ClauseKind { SetTo, IncreaseBy };

inline constexpr std::array<Query, 3> kAllQueries = {Query::FinalValue, Query::ChangeSign, Query::IncreaseOf};
inline constexpr std::size_t kMaxClauses = 3;
inline constexpr std::string_view kRunFunction = "four_box_model";

std::string_view name(Query q);
std::string_view name(ClauseKind k);
std::optional<Query> query_from_name(std::string_view s);
std::optional<ClauseKind> clause_kind_from_name(std::string_view s);

struct Clause {
  ClauseKind kind;
  Param param;
  double value;

  bool operator==(const Clause&) const = default;
};

struct RunExpr {
  std::vector<Clause> clauses;

  bool operator==(const RunExpr&) const = default;
};

struct Program {
  Query query;
  RunExpr run;
  Variable variable;

  bool operator==(const Program&) const = default;
};

struct Violation {
  enum class Rule { TooManyClauses, DuplicateParam, NonIntegerSteps, NonFiniteValue };

  Rule rule;
  std::optional<Param> param;  // set for the per-clause rules
  std::size_t clause_index = 0;

  std::string message() const;
  bool operator==(const Violation&) const = default;
};

std::string_view name(Violation::Rule r);

/// Program text that is well formed but names something outside the closed
/// language, or breaks a RunExpr/Clause invariant.
class ValidationError : public ParseError {
public:
  ValidationError(const std::string& what, std::size_t position, std::vector<std::string> expected,
                  std::vector<Violation> violations = {})
      : ParseError(what, position, std::move(expected)), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
  std::vector<Violation> violations_;
};

/// Throws SyntaxError or ValidationError; whitespace between tokens is ignored.
Program parse(std::string_view text);

/// Canonical single-line form with no whitespace.
std::string print_program(const Program& p);

/// Empty iff every RunExpr and Clause invariant holds.
std::vector<Violation> validate(const Program& p);

/// Shortest round-trippable decimal text for a number. Fixed notation is used
/// for magnitudes in [1e-3, 1e4); elsewhere the shorter of fixed and
/// scientific wins, ties going to scientific ("5.8e4", "2.6e7", "4.24e-6").
std::string format_number(double value);

/// Strict full-text number syntax: -?digits(.digits)?([eE][+-]?digits)?
std::optional<double> parse_number(std::string_view text);

}  // namespace qapt::dsl
