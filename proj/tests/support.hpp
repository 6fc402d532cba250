#pragma once

#include "qapt/dsl.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace qapt::testing {

/// A finite double drawn from a mix of integers, short decimals and raw
/// mantissa/exponent pairs, so that both notations of format_number appear.
inline double random_value(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 3);
  switch (pick(rng)) {
    case 0: return static_cast<double>(std::uniform_int_distribution<long>(-2'000'000, 2'000'000)(rng));
    case 1: {
      const double m = std::uniform_int_distribution<int>(-99, 99)(rng) / 10.0;
      return m * std::pow(10.0, std::uniform_int_distribution<int>(-9, 9)(rng));
    }
    case 2:
      return std::uniform_real_distribution<double>(-1.0, 1.0)(rng) *
             std::pow(10.0, std::uniform_int_distribution<int>(-12, 12)(rng));
    default: return std::uniform_int_distribution<int>(0, 5000)(rng) / 4.0;
  }
}

/// A random program that satisfies every RunExpr and Clause invariant.
inline dsl::Program random_program(std::mt19937_64& rng) {
  dsl::Program p{};
  p.query = dsl::kAllQueries[std::uniform_int_distribution<std::size_t>(0, 2)(rng)];
  p.variable = boxmodel::kAllVariables[std::uniform_int_distribution<std::size_t>(0, 6)(rng)];
  std::vector<boxmodel::Param> params(boxmodel::kAllParams.begin(), boxmodel::kAllParams.end());
  std::shuffle(params.begin(), params.end(), rng);
  const std::size_t n = std::uniform_int_distribution<std::size_t>(0, dsl::kMaxClauses)(rng);
  for (std::size_t i = 0; i < n; ++i) {
    dsl::Clause c{};
    c.kind = std::bernoulli_distribution(0.5)(rng) ? dsl::ClauseKind::SetTo : dsl::ClauseKind::IncreaseBy;
    c.param = params[i];
    c.value = c.param == boxmodel::Param::Steps
                  ? static_cast<double>(std::uniform_int_distribution<int>(1, 1'000'000)(rng))
                  : random_value(rng);
    p.run.clauses.push_back(c);
  }
  return p;
}

}  // namespace qapt::testing
