#include "qapt/executor.hpp"

#include "qapt/error.hpp"

#include <cmath>

namespace qapt::executor {

using boxmodel::Param;

boxmodel::Params resolve(const dsl::RunExpr& run, const boxmodel::Params& defaults,
                         const boxmodel::Constants& constants) {
  boxmodel::Params p = defaults;
  for (const dsl::Clause& c : run.clauses) {
    const double value = c.kind == dsl::ClauseKind::SetTo ? c.value : defaults.get(c.param) + c.value;
    p.set(c.param, value);
  }
  if (auto problems = boxmodel::check(p, constants); !problems.empty()) {
    std::string msg = "resolved parameters are invalid:";
    for (const auto& s : problems) msg += " " + s + ";";
    throw InvalidParams(msg);
  }
  return p;
}

double final_value(std::span<const double> series) { return series.back(); }

bool changes_sign(std::span<const double> series) {
  if (series.empty()) return false;
  const auto sign = [](double x) { return (x > 0) - (x < 0); };
  const int first = sign(series.front());
  if (first == 0) return false;
  for (double x : series)
    if (sign(x) == -first) return true;
  return false;
}

bool increases(std::span<const double> series) {
  if (series.empty()) return false;
  return series.back() - series.front() > kIncreaseRelTol * std::fabs(series.front());
}

Execution execute_full(const dsl::Program& p, const boxmodel::Constants& constants) {
  if (auto violations = dsl::validate(p); !violations.empty())
    throw dsl::ValidationError(violations.front().message(), 0, {}, violations);

  Execution ex{{}, boxmodel::run(resolve(p.run, boxmodel::default_params(), constants), constants)};
  const auto series = ex.run.series(p.variable);
  Answer& a = ex.answer;
  a.unit = std::string(boxmodel::unit(p.variable));
  a.warnings = ex.run.warnings;
  switch (p.query) {
    case dsl::Query::FinalValue:
      a.kind = Answer::Kind::Number;
      a.number = final_value(series);
      break;
    case dsl::Query::ChangeSign:
      a.kind = Answer::Kind::Boolean;
      a.truth = changes_sign(series);
      break;
    case dsl::Query::IncreaseOf:
      a.kind = Answer::Kind::Boolean;
      a.truth = increases(series);
      break;
  }
  return ex;
}

Answer execute(const dsl::Program& p, const boxmodel::Constants& constants) {
  return execute_full(p, constants).answer;
}

nlohmann::ordered_json to_json(const Answer& a) {
  nlohmann::ordered_json j;
  if (a.kind == Answer::Kind::Number) {
    j["kind"] = "number";
    j["value"] = a.number;
  } else {
    j["kind"] = "bool";
    j["value"] = a.truth;
  }
  j["unit"] = a.unit;
  j["warnings"] = a.warnings;
  return j;
}

Answer answer_from_json(const nlohmann::json& j) {
  Answer a;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "number") {
    a.kind = Answer::Kind::Number;
    a.number = j.at("value").get<double>();
  } else if (kind == "bool") {
    a.kind = Answer::Kind::Boolean;
    a.truth = j.at("value").get<bool>();
  } else {
    throw Error("unknown answer kind '" + kind + "'");
  }
  a.unit = j.value("unit", "");
  if (j.contains("warnings")) a.warnings = j.at("warnings").get<std::vector<std::string>>();
  return a;
}

nlohmann::ordered_json to_json(const boxmodel::Params& p) {
  nlohmann::ordered_json j;
  for (Param q : boxmodel::kAllParams) {
    if (q == Param::Steps)
      j[std::string(boxmodel::name(q))] = p.steps;
    else
      j[std::string(boxmodel::name(q))] = p.get(q);
  }
  j["dt"] = p.dt;
  return j;
}

}  // namespace qapt::executor
