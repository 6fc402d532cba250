#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qapt::boxmodel {

/// Run parameters a program may override. Names are the DSL spellings.
enum class Param { Steps, FreshwaterNorth, FreshwaterSouth, EkmanTransport, LowDepthInit, Friction };

inline constexpr std::array<Param, 6> kAllParams = {
    Param::Steps,          Param::FreshwaterNorth, Param::FreshwaterSouth,
    Param::EkmanTransport, Param::LowDepthInit,    Param::Friction};

/// Output series a program may query.
enum class Variable { Overturning, SaltNorth, SaltSouth, SaltLow, SaltDeep, TempLow, LowDepth };

inline constexpr std::array<Variable, 7> kAllVariables = {
    Variable::Overturning, Variable::SaltNorth, Variable::SaltSouth, Variable::SaltLow,
    Variable::SaltDeep,    Variable::TempLow,   Variable::LowDepth};

/// "N", "Fwn", "Fws", "M_ek", "D_low0", "epsilon".
std::string_view name(Param p);
/// "M_n", "S_north", "S_south", "S_low", "S_deep", "T_low", "D_low".
std::string_view name(Variable v);
std::string_view unit(Variable v);
std::optional<Param> param_from_name(std::string_view s);
std::optional<Variable> variable_from_name(std::string_view s);

struct Params {
  double freshwater_north;  // Fwn, m^3/s
  double freshwater_south;  // Fws, m^3/s
  double ekman_transport;   // M_ek, m^3/s
  double low_depth_init;    // D_low0, m
  double friction;          // epsilon, 1/s
  std::int64_t steps;       // N
  double dt;                // s

  double get(Param p) const;
  void set(Param p, double value);

  bool operator==(const Params&) const = default;
};

struct Constants {
  double low_area = 2.6e14;      // A_low, m^2
  double north_volume = 3e15;    // V_n, m^3
  double south_volume = 9e15;    // V_s, m^3
  double total_depth = 4000.0;   // H, m
  double temp_north = 5.0;       // degC
  double temp_south = 7.0;
  double temp_low = 20.0;
  double temp_deep = 3.0;
  double salt_north0 = 35.0;     // psu
  double salt_south0 = 34.5;
  double salt_low0 = 36.0;
  double salt_deep0 = 34.7;
  double ref_salinity = 35.0;    // S0, virtual salt flux reference
  double thermal_expansion = 2e-4;   // 1/K
  double haline_contraction = 8e-4;  // 1/psu
  double ref_density = 1027.0;       // kg/m^3
  double overturning_coeff = 4.9;    // K_n, m/s^2
  double eddy_coeff = 4.275e4;       // K_GM, m^2/s
  double upwelling_coeff = 1e-5;     // K_v, m/s

  bool operator==(const Constants&) const = default;
};

Params default_params();
const Constants& default_constants();

/// Empty when the parameters are usable; otherwise one message per broken rule.
std::vector<std::string> check(const Params& p, const Constants& c = default_constants());
std::vector<std::string> check(const Constants& c);

/// Reads a key=value file (keys A_low, V_n, V_s, H, T_n, T_s, T_low, T_deep,
/// S_n0, S_s0, S_low0, S_deep0, S0, alpha_T, beta_S, rho0, K_n, K_GM, K_v).
/// Keys not present keep their built-in value. Throws InvalidParams.
Constants load_constants(const std::filesystem::path& path);

/// Constants from the file named by QAPT_CONSTANTS, or the built-ins.
Constants constants_from_env();

/// Linear equation of state.
double density(double temp, double salt, const Constants& c = default_constants());

struct RunOutput {
  Params params;
  Constants constants;
  std::vector<double> overturning;  // M_n
  std::vector<double> salt_north;
  std::vector<double> salt_south;
  std::vector<double> salt_low;
  std::vector<double> salt_deep;
  std::vector<double> temp_low;
  std::vector<double> low_depth;
  std::vector<std::string> warnings;

  std::span<const double> series(Variable v) const;
  std::size_t size() const { return overturning.size(); }

  double low_volume(std::size_t step) const;
  double deep_volume(std::size_t step) const;
  /// Sum of V_i * S_i over the four boxes at a step.
  double total_salt(std::size_t step) const;

  bool operator==(const RunOutput&) const = default;
};

/// Integrates the four-box surrogate for params.steps RK4 steps. Index 0 of
/// every series is the initial state. Throws InvalidParams or NumericalBlowup.
RunOutput run(const Params& params, const Constants& constants = default_constants());

}  // namespace qapt::boxmodel
