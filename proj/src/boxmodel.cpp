#include "qapt/boxmodel.hpp"

#include "qapt/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace qapt::boxmodel {

namespace {

constexpr std::array<std::string_view, 6> kParamNames = {"N", "Fwn", "Fws", "M_ek", "D_low0", "epsilon"};
constexpr std::array<std::string_view, 7> kVariableNames = {"M_n",    "S_north", "S_south", "S_low",
                                                            "S_deep", "T_low",   "D_low"};
constexpr std::array<std::string_view, 7> kVariableUnits = {"m³/s", "psu", "psu", "psu", "psu", "°C", "m"};

constexpr double kMinLowDepth = 10.0;

// Integrated state: fixed-volume boxes carry salinity, variable-volume boxes
// carry salt content (psu * m^3) so that total salt is a linear invariant.
struct State {
  double salt_north;
  double salt_south;
  double content_low;
  double content_deep;
  double depth;

  State operator+(const State& o) const {
    return {salt_north + o.salt_north, salt_south + o.salt_south, content_low + o.content_low,
            content_deep + o.content_deep, depth + o.depth};
  }
  State operator*(double k) const {
    return {salt_north * k, salt_south * k, content_low * k, content_deep * k, depth * k};
  }
  bool finite() const {
    return std::isfinite(salt_north) && std::isfinite(salt_south) && std::isfinite(content_low) &&
           std::isfinite(content_deep) && std::isfinite(depth);
  }
};

struct Diagnostics {
  double salt_low;
  double salt_deep;
  double overturning;
};

class Model {
public:
  Model(const Params& p, const Constants& c) : p_(p), c_(c), total_volume_(c.low_area * c.total_depth) {}

  double low_volume(double depth) const { return c_.low_area * depth; }
  double deep_volume(double depth) const { return total_volume_ - low_volume(depth); }

  Diagnostics diagnose(const State& s) const {
    const double salt_low = s.content_low / low_volume(s.depth);
    const double salt_deep = s.content_deep / deep_volume(s.depth);
    const double drho =
        (density(c_.temp_north, s.salt_north, c_) - density(c_.temp_low, salt_low, c_)) / c_.ref_density;
    const double overturning = c_.overturning_coeff * drho * s.depth * s.depth / p_.friction;
    return {salt_low, salt_deep, overturning};
  }

  State tendency(const State& s) const {
    const Diagnostics d = diagnose(s);
    const double m_n = d.overturning;
    const double m_eddy = c_.eddy_coeff * s.depth;
    const double m_up = c_.upwelling_coeff * c_.low_area / s.depth;
    const double m_ek = p_.ekman_transport;
    const double m_ds = m_ek - m_eddy;

    // Salt carried along a directed pathway a -> b; reversed flow carries the
    // destination's water back.
    const auto upstream = [](double flow, double salt_from, double salt_to) {
      return flow >= 0.0 ? flow * salt_from : flow * salt_to;
    };

    const double low_to_north = upstream(m_n, d.salt_low, s.salt_north);
    const double north_to_deep = upstream(m_n, s.salt_north, d.salt_deep);
    const double deep_to_low = upstream(m_up, d.salt_deep, d.salt_low);
    const double south_to_low = upstream(m_ek, s.salt_south, d.salt_low);
    const double low_to_south = upstream(m_eddy, d.salt_low, s.salt_south);
    const double deep_to_south = upstream(m_ds, d.salt_deep, s.salt_south);

    const double virtual_north = p_.freshwater_north * c_.ref_salinity;
    const double virtual_south = p_.freshwater_south * c_.ref_salinity;

    const double north = low_to_north - north_to_deep - virtual_north;
    const double south = low_to_south + deep_to_south - south_to_low - virtual_south;
    const double low = deep_to_low + south_to_low - low_to_north - low_to_south + virtual_north + virtual_south;
    const double deep = north_to_deep - deep_to_low - deep_to_south;

    return {north / c_.north_volume, south / c_.south_volume, low, deep,
            (m_ek + m_up - m_eddy - m_n) / c_.low_area};
  }

  State step(const State& s, double dt) const {
    const State k1 = tendency(s);
    const State k2 = tendency(s + k1 * (dt / 2));
    const State k3 = tendency(s + k2 * (dt / 2));
    const State k4 = tendency(s + k3 * dt);
    return s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6);
  }

  State initial() const {
    const double depth = p_.low_depth_init;
    return {c_.salt_north0, c_.salt_south0, c_.salt_low0 * low_volume(depth), c_.salt_deep0 * deep_volume(depth),
            depth};
  }

  double min_depth() const { return kMinLowDepth; }
  double max_depth() const { return c_.total_depth - kMinLowDepth; }

private:
  const Params& p_;
  const Constants& c_;
  double total_volume_;
};

bool parse_double(std::string_view text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string_view name(Param p) { return kParamNames[static_cast<std::size_t>(p)]; }
std::string_view name(Variable v) { return kVariableNames[static_cast<std::size_t>(v)]; }
std::string_view unit(Variable v) { return kVariableUnits[static_cast<std::size_t>(v)]; }

std::optional<Param> param_from_name(std::string_view s) {
  for (Param p : kAllParams)
    if (name(p) == s) return p;
  return std::nullopt;
}

std::optional<Variable> variable_from_name(std::string_view s) {
  for (Variable v : kAllVariables)
    if (name(v) == s) return v;
  return std::nullopt;
}

double Params::get(Param p) const {
  switch (p) {
    case Param::Steps: return static_cast<double>(steps);
    case Param::FreshwaterNorth: return freshwater_north;
    case Param::FreshwaterSouth: return freshwater_south;
    case Param::EkmanTransport: return ekman_transport;
    case Param::LowDepthInit: return low_depth_init;
    case Param::Friction: return friction;
  }
  return 0.0;
}

void Params::set(Param p, double value) {
  switch (p) {
    case Param::Steps:
      if (!std::isfinite(value) || value != std::floor(value) || value < 1 || value > 1e9)
        throw InvalidParams("N must be a positive integer, got " + std::to_string(value));
      steps = static_cast<std::int64_t>(value);
      return;
    case Param::FreshwaterNorth: freshwater_north = value; return;
    case Param::FreshwaterSouth: freshwater_south = value; return;
    case Param::EkmanTransport: ekman_transport = value; return;
    case Param::LowDepthInit: low_depth_init = value; return;
    case Param::Friction: friction = value; return;
  }
}

Params default_params() {
  return Params{
      .freshwater_north = 4.5e4,
      .freshwater_south = 7.5e4,
      .ekman_transport = 2.5e7,
      .low_depth_init = 400.0,
      .friction = 1.2e-4,
      .steps = 4000,
      .dt = 2.592e6,
  };
}

const Constants& default_constants() {
  static const Constants constants{};
  return constants;
}

std::vector<std::string> check(const Params& p, const Constants& c) {
  std::vector<std::string> out;
  const auto finite_nonneg = [&](double v, std::string_view what) {
    if (!std::isfinite(v) || v < 0) out.push_back(std::string(what) + " must be finite and >= 0");
  };
  if (p.steps < 1) out.emplace_back("N must be >= 1");
  if (!std::isfinite(p.dt) || p.dt <= 0) out.emplace_back("dt must be > 0");
  if (!std::isfinite(p.low_depth_init) || p.low_depth_init <= 0 || p.low_depth_init >= c.total_depth)
    out.emplace_back("D_low0 must lie in (0, H)");
  if (!std::isfinite(p.friction) || p.friction <= 0) out.emplace_back("epsilon must be > 0");
  finite_nonneg(p.ekman_transport, "M_ek");
  finite_nonneg(p.freshwater_north, "Fwn");
  finite_nonneg(p.freshwater_south, "Fws");
  return out;
}

std::vector<std::string> check(const Constants& c) {
  std::vector<std::string> out;
  const std::pair<double, std::string_view> positive[] = {
      {c.low_area, "A_low"},     {c.north_volume, "V_n"},        {c.south_volume, "V_s"},
      {c.total_depth, "H"},      {c.ref_salinity, "S0"},         {c.thermal_expansion, "alpha_T"},
      {c.haline_contraction, "beta_S"}, {c.ref_density, "rho0"}, {c.overturning_coeff, "K_n"},
      {c.eddy_coeff, "K_GM"},    {c.upwelling_coeff, "K_v"}};
  for (const auto& [v, what] : positive)
    if (!std::isfinite(v) || v <= 0) out.push_back(std::string(what) + " must be > 0");
  const std::pair<double, std::string_view> salts[] = {
      {c.salt_north0, "S_n0"}, {c.salt_south0, "S_s0"}, {c.salt_low0, "S_low0"}, {c.salt_deep0, "S_deep0"}};
  for (const auto& [v, what] : salts)
    if (!(v >= 0 && v <= 50)) out.push_back(std::string(what) + " must lie in [0, 50]");
  const std::pair<double, std::string_view> temps[] = {
      {c.temp_north, "T_n"}, {c.temp_south, "T_s"}, {c.temp_low, "T_low"}, {c.temp_deep, "T_deep"}};
  for (const auto& [v, what] : temps)
    if (!std::isfinite(v)) out.push_back(std::string(what) + " must be finite");
  return out;
}

Constants load_constants(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParams("cannot open constants file " + path.string());

  Constants c;
  const std::map<std::string_view, double*> fields = {
      {"A_low", &c.low_area},         {"V_n", &c.north_volume},        {"V_s", &c.south_volume},
      {"H", &c.total_depth},          {"T_n", &c.temp_north},          {"T_s", &c.temp_south},
      {"T_low", &c.temp_low},         {"T_deep", &c.temp_deep},        {"S_n0", &c.salt_north0},
      {"S_s0", &c.salt_south0},       {"S_low0", &c.salt_low0},        {"S_deep0", &c.salt_deep0},
      {"S0", &c.ref_salinity},        {"alpha_T", &c.thermal_expansion}, {"beta_S", &c.haline_contraction},
      {"rho0", &c.ref_density},       {"K_n", &c.overturning_coeff},   {"K_GM", &c.eddy_coeff},
      {"K_v", &c.upwelling_coeff}};

  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (eq == std::string_view::npos) throw InvalidParams(where + ": expected key=value");
    const auto key = trim(view.substr(0, eq));
    const auto value = trim(view.substr(eq + 1));
    const auto it = fields.find(key);
    if (it == fields.end()) throw InvalidParams(where + ": unknown constant '" + std::string(key) + "'");
    if (!parse_double(value, *it->second))
      throw InvalidParams(where + ": bad number '" + std::string(value) + "'");
  }
  if (auto problems = check(c); !problems.empty()) throw InvalidParams(path.string() + ": " + problems.front());
  return c;
}

Constants constants_from_env() {
  const char* path = std::getenv("QAPT_CONSTANTS");
  if (path == nullptr || *path == '\0') return default_constants();
  return load_constants(path);
}

double density(double temp, double salt, const Constants& c) {
  return c.ref_density * (1.0 - c.thermal_expansion * temp + c.haline_contraction * salt);
}

std::span<const double> RunOutput::series(Variable v) const {
  switch (v) {
    case Variable::Overturning: return overturning;
    case Variable::SaltNorth: return salt_north;
    case Variable::SaltSouth: return salt_south;
    case Variable::SaltLow: return salt_low;
    case Variable::SaltDeep: return salt_deep;
    case Variable::TempLow: return temp_low;
    case Variable::LowDepth: return low_depth;
  }
  return {};
}

double RunOutput::low_volume(std::size_t step) const { return constants.low_area * low_depth.at(step); }

double RunOutput::deep_volume(std::size_t step) const {
  return constants.low_area * constants.total_depth - low_volume(step);
}

double RunOutput::total_salt(std::size_t step) const {
  return constants.north_volume * salt_north.at(step) + constants.south_volume * salt_south.at(step) +
         low_volume(step) * salt_low.at(step) + deep_volume(step) * salt_deep.at(step);
}

RunOutput run(const Params& params, const Constants& constants) {
  if (auto problems = check(params, constants); !problems.empty()) {
    std::string msg = "invalid parameters:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw InvalidParams(msg);
  }

  const Model model(params, constants);
  const auto n = static_cast<std::size_t>(params.steps) + 1;

  RunOutput out;
  out.params = params;
  out.constants = constants;
  for (auto* v : {&out.overturning, &out.salt_north, &out.salt_south, &out.salt_low, &out.salt_deep,
                  &out.temp_low, &out.low_depth})
    v->reserve(n);

  std::size_t clamp_count = 0;
  std::size_t first_clamp = 0;
  bool salinity_warned = false;

  const auto record = [&](const State& s, std::size_t step) {
    const Diagnostics d = model.diagnose(s);
    out.overturning.push_back(d.overturning);
    out.salt_north.push_back(s.salt_north);
    out.salt_south.push_back(s.salt_south);
    out.salt_low.push_back(d.salt_low);
    out.salt_deep.push_back(d.salt_deep);
    out.temp_low.push_back(constants.temp_low);
    out.low_depth.push_back(s.depth);
    if (!salinity_warned) {
      for (double salt : {s.salt_north, s.salt_south, d.salt_low, d.salt_deep}) {
        if (salt < 0 || salt > 50) {
          out.warnings.push_back("salinity left [0, 50] psu at step " + std::to_string(step));
          salinity_warned = true;
          break;
        }
      }
    }
  };

  State state = model.initial();
  record(state, 0);
  for (std::size_t step = 1; step < n; ++step) {
    state = model.step(state, params.dt);
    if (!state.finite())
      throw NumericalBlowup("state became non-finite at step " + std::to_string(step) +
                                "; dt is too large for these parameters",
                            step);
    const double clamped = std::clamp(state.depth, model.min_depth(), model.max_depth());
    if (clamped != state.depth) {
      if (clamp_count++ == 0) first_clamp = step;
      state.depth = clamped;
    }
    record(state, step);
    if (!std::isfinite(out.overturning.back()))
      throw NumericalBlowup("overturning became non-finite at step " + std::to_string(step), step);
  }

  if (clamp_count > 0)
    out.warnings.push_back("low-box depth clamped to [10, H-10] m at " + std::to_string(clamp_count) +
                           " step(s), first at step " + std::to_string(first_clamp));
  return out;
}

}  // namespace qapt::boxmodel
