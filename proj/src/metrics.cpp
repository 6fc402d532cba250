#include "qapt/metrics.hpp"

#include "qapt/error.hpp"
#include "qapt/textcodec.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace qapt::metrics {

namespace {

std::string shortest(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string_view name(Direction d) {
  switch (d) {
    case Direction::QTQ: return "QTQ";
    case Direction::QTP: return "QTP";
    case Direction::PTQ: return "PTQ";
  }
  return "";
}

std::optional<Direction> direction_from_name(std::string_view s) {
  for (Direction d : {Direction::QTQ, Direction::QTP, Direction::PTQ})
    if (name(d) == s) return d;
  return std::nullopt;
}

std::string_view name(Granularity g) { return g == Granularity::Token ? "token" : "char"; }
std::string_view name(Normalization n) { return n == Normalization::MaxLength ? "max" : "yujian-bo"; }

double nld_from_distance(std::size_t distance, std::size_t la, std::size_t lb, Normalization norm) {
  const auto d = static_cast<double>(distance);
  if (norm == Normalization::YujianBo) {
    const double denom = static_cast<double>(la + lb) + d;
    return denom == 0.0 ? 100.0 : 100.0 * (1.0 - 2.0 * d / denom);
  }
  return 100.0 * (1.0 - d / static_cast<double>(std::max({la, lb, std::size_t{1}})));
}

double nld(std::span<const std::string> a, std::span<const std::string> b, Normalization norm) {
  return nld_from_distance(levenshtein(a, b), a.size(), b.size(), norm);
}

std::vector<std::string> units(std::string_view text, Granularity g, Direction d) {
  if (g == Granularity::Token)
    return textcodec::tokenize(text, d == Direction::QTP ? textcodec::TextKind::Program : textcodec::TextKind::Question);
  std::vector<std::string> out;
  for (char c : text) {
    if (out.empty() || (static_cast<unsigned char>(c) & 0xC0) != 0x80) out.emplace_back();
    out.back() += c;
  }
  return out;
}

double score(std::string_view prediction, std::string_view target, Direction d, Granularity g, Normalization norm) {
  const auto a = units(prediction, g, d);
  const auto b = units(target, g, d);
  return nld(a, b, norm);
}

Stats stats_of(std::span<const double> xs) {
  Stats s;
  s.count = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(xs.size()));
  return s;
}

std::vector<CdfPoint> empirical_cdf(std::vector<double> scores) {
  std::sort(scores.begin(), scores.end());
  std::vector<CdfPoint> out;
  const auto n = static_cast<double>(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i + 1 < scores.size() && scores[i + 1] == scores[i]) continue;
    out.push_back({scores[i], i + 1 == scores.size() ? 1.0 : static_cast<double>(i + 1) / n});
  }
  return out;
}

EvalReport evaluate(std::span<const PredictionRecord> records, Granularity g, Normalization norm) {
  if (records.empty()) throw EmptyInput("no prediction records to evaluate");
  std::map<Direction, std::vector<double>> by_direction;
  std::map<int, std::vector<double>> by_form;
  for (const auto& r : records) {
    const double s = score(r.prediction, r.target, r.direction, g, norm);
    by_direction[r.direction].push_back(s);
    if (r.direction == Direction::PTQ) by_form[r.form_id].push_back(s);
  }

  EvalReport rep;
  rep.granularity = g;
  rep.normalization = norm;
  for (auto& [d, xs] : by_direction) {
    rep.by_direction[d] = stats_of(xs);
    rep.cdf[d] = empirical_cdf(xs);
  }
  double sum = 0.0;
  for (const auto& [f, xs] : by_form) {
    rep.ptq_by_form[f] = stats_of(xs);
    sum += rep.ptq_by_form[f].mean;
  }
  if (!by_form.empty()) rep.ptq_unweighted_form_mean = sum / static_cast<double>(by_form.size());
  return rep;
}

PredictionRecord record_from_json(const nlohmann::json& j) {
  PredictionRecord r;
  const auto& id = j.at("id");
  r.id = id.is_string() ? id.get<std::string>() : id.dump();
  const auto dir = j.at("direction").get<std::string>();
  auto d = direction_from_name(dir);
  if (!d) throw Error("unknown direction '" + dir + "'");
  r.direction = *d;
  r.prediction = j.at("prediction").get<std::string>();
  r.target = j.at("target").get<std::string>();
  r.form_id = j.at("form_id").get<int>();
  if (r.form_id < 1 || r.form_id > 10) throw Error("form_id " + std::to_string(r.form_id) + " is outside 1..10");
  return r;
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const EvalReport& r) {
  using nlohmann::ordered_json;
  const auto stats = [](const Stats& s) {
    return ordered_json{{"count", s.count}, {"mean", s.mean}, {"stddev", s.stddev}};
  };
  ordered_json j;
  j["granularity"] = name(r.granularity);
  j["normalization"] = name(r.normalization);
  ordered_json dirs = ordered_json::object();
  for (const auto& [d, s] : r.by_direction) dirs[std::string(name(d))] = stats(s);
  j["directions"] = dirs;
  ordered_json forms = ordered_json::object();
  for (const auto& [f, s] : r.ptq_by_form) forms[std::to_string(f)] = stats(s);
  j["ptq_by_form"] = forms;
  j["ptq_unweighted_form_mean"] = r.ptq_unweighted_form_mean;
  ordered_json cdf = ordered_json::object();
  for (const auto& [d, pts] : r.cdf) {
    ordered_json a = ordered_json::array();
    for (const auto& p : pts) a.push_back({p.score, p.fraction});
    cdf[std::string(name(d))] = a;
  }
  j["cdf"] = cdf;
  return j;
}

std::string cdf_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "direction,score,fraction\n";
  for (const auto& [d, pts] : r.cdf)
    for (const auto& p : pts) out << name(d) << ',' << shortest(p.score) << ',' << shortest(p.fraction) << '\n';
  return out.str();
}

std::string forms_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "form_id,count,mean,stddev\n";
  for (const auto& [f, s] : r.ptq_by_form)
    out << f << ',' << s.count << ',' << shortest(s.mean) << ',' << shortest(s.stddev) << '\n';
  return out.str();
}

}  // namespace qapt::metrics
