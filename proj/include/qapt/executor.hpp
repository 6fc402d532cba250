#pragma once

#include "qapt/boxmodel.hpp"
#include "qapt/dsl.hpp"

#include <json.hpp>

#include <span>
#include <string>
#include <vector>

namespace qapt::executor {

struct Answer {
  enum class Kind { Number, Boolean };

  Kind kind = Kind::Number;
  double number = 0.0;  // meaningful for Number
  bool truth = false;   // meaningful for Boolean
  std::string unit;
  std::vector<std::string> warnings;

  bool operator==(const Answer&) const = default;
};

/// Relative tolerance used by IncreaseOf.
inline constexpr double kIncreaseRelTol = 1e-9;

/// Applies clauses on top of `defaults`. SetTo assigns, IncreaseBy adds to the
/// default. Throws InvalidParams when the result breaks a parameter invariant.
boxmodel::Params resolve(const dsl::RunExpr& run,
                         const boxmodel::Params& defaults = boxmodel::default_params(),
                         const boxmodel::Constants& constants = boxmodel::default_constants());

// Query functions over a single series.
double final_value(std::span<const double> series);
/// True iff some step's sign differs from the first step's; a zero matches
/// either sign.
bool changes_sign(std::span<const double> series);
/// True iff last - first > kIncreaseRelTol * |first|.
bool increases(std::span<const double> series);

struct Execution {
  Answer answer;
  boxmodel::RunOutput run;
};

/// Runs the simulator for p and keeps the full run alongside the answer.
Execution execute_full(const dsl::Program& p, const boxmodel::Constants& constants = boxmodel::default_constants());

Answer execute(const dsl::Program& p, const boxmodel::Constants& constants = boxmodel::default_constants());

/// {"kind": "number"|"bool", "value": ..., "unit": ..., "warnings": [...]}
nlohmann::ordered_json to_json(const Answer& a);
Answer answer_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const boxmodel::Params& p);

}  // namespace qapt::executor
