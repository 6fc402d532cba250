#pragma once

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qapt::metrics {

enum class Direction { QTQ, QTP, PTQ };
enum class Granularity { Token, Character };
enum class Normalization { MaxLength, YujianBo };

std::string_view name(Direction d);
std::optional<Direction> direction_from_name(std::string_view s);
std::string_view name(Granularity g);
std::string_view name(Normalization n);

/// Minimum number of insertions, deletions and substitutions turning a into b.
template <class T>
std::size_t levenshtein(std::span<const T> a, std::span<const T> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

/// Score in [0, 100] from an edit distance and the two lengths.
/// MaxLength: 100*(1 - d/max(la, lb, 1)). YujianBo: 100*(1 - 2d/(la + lb + d)).
double nld_from_distance(std::size_t distance, std::size_t la, std::size_t lb,
                         Normalization norm = Normalization::MaxLength);

double nld(std::span<const std::string> a, std::span<const std::string> b,
           Normalization norm = Normalization::MaxLength);

/// Textcodec tokens (program lexemes for QTP, question words otherwise) or
/// UTF-8 code points.
std::vector<std::string> units(std::string_view text, Granularity g, Direction d);

double score(std::string_view prediction, std::string_view target, Direction d,
             Granularity g = Granularity::Token, Normalization norm = Normalization::MaxLength);

struct PredictionRecord {
  std::string id;
  Direction direction = Direction::QTP;
  std::string prediction;
  std::string target;
  int form_id = 0;
};

struct Stats {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
};

Stats stats_of(std::span<const double> xs);

struct CdfPoint {
  double score;
  double fraction;  // share of scores <= score
};

std::vector<CdfPoint> empirical_cdf(std::vector<double> scores);

struct EvalReport {
  Granularity granularity = Granularity::Token;
  Normalization normalization = Normalization::MaxLength;
  std::map<Direction, Stats> by_direction;
  std::map<Direction, std::vector<CdfPoint>> cdf;
  std::map<int, Stats> ptq_by_form;
  double ptq_unweighted_form_mean = 0.0;  // mean of the per-form means present
};

/// Throws EmptyInput for an empty record set.
EvalReport evaluate(std::span<const PredictionRecord> records, Granularity g = Granularity::Token,
                    Normalization norm = Normalization::MaxLength);

PredictionRecord record_from_json(const nlohmann::json& j);
/// JSON Lines of {"id", "direction", "prediction", "target", "form_id"}.
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const EvalReport& r);
/// direction,score,fraction
std::string cdf_csv(const EvalReport& r);
/// form_id,count,mean,stddev
std::string forms_csv(const EvalReport& r);

}  // namespace qapt::metrics
