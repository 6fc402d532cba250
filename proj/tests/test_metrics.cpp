#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qapt/error.hpp"
#include "qapt/metrics.hpp"

#include <filesystem>
#include <fstream>
#include <random>

using namespace qapt;
using namespace qapt::metrics;

namespace {

using Tokens = std::vector<std::string>;

std::size_t oracle(const Tokens& a, std::size_t i, const Tokens& b, std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  const std::size_t sub = oracle(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
  return std::min({sub, oracle(a, i + 1, b, j) + 1, oracle(a, i, b, j + 1) + 1});
}

Tokens chars(std::string_view s) { return units(s, Granularity::Character, Direction::PTQ); }

Tokens random_tokens(std::mt19937_64& rng, std::size_t max_len) {
  static const Tokens alphabet{"a", "b", "c", "(", ")"};
  Tokens out(std::uniform_int_distribution<std::size_t>(0, max_len)(rng));
  for (auto& t : out) t = alphabet[rng() % alphabet.size()];
  return out;
}

std::size_t lev(const Tokens& a, const Tokens& b) {
  return levenshtein(std::span<const std::string>(a), std::span<const std::string>(b));
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

PredictionRecord rec(Direction d, std::string prediction, std::string target, int form_id) {
  return {std::to_string(form_id), d, std::move(prediction), std::move(target), form_id};
}

}  // namespace

TEST_CASE("levenshtein basics") {
  CHECK(lev(chars("kitten"), chars("sitting")) == 3);
  CHECK(oracle(chars("kitten"), 0, chars("sitting"), 0) == 3);
  CHECK(lev(chars("flaw"), chars("lawn")) == 2);
  const Tokens x{"a", "b", "c"};
  CHECK(lev(x, x) == 0);
  CHECK(lev(x, {}) == 3);
  CHECK(lev({}, x) == 3);
  CHECK(lev({}, {}) == 0);
  const std::string s1 = "abc", s2 = "axc";
  CHECK(levenshtein(std::span<const char>(s1), std::span<const char>(s2)) == 1);
}

TEST_CASE("levenshtein matches the recursive oracle") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const Tokens a = random_tokens(rng, 8), b = random_tokens(rng, 8);
    CHECK(lev(a, b) == oracle(a, 0, b, 0));
  }
}

TEST_CASE("levenshtein is a metric") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    const Tokens a = random_tokens(rng, 10), b = random_tokens(rng, 10), c = random_tokens(rng, 10);
    CHECK(lev(a, b) == lev(b, a));
    CHECK((lev(a, b) == 0) == (a == b));
    CHECK(lev(a, c) <= lev(a, b) + lev(b, c));
    CHECK(nld(a, b) == nld(b, a));
    CHECK(nld(a, a) == 100.0);
    CHECK(nld(a, b) >= 0.0);
    CHECK(nld(a, b) <= 100.0);
    CHECK(nld(a, b, Normalization::YujianBo) >= 0.0);
    CHECK(nld(a, b, Normalization::YujianBo) <= 100.0);
  }
}

TEST_CASE("normalized scores") {
  const Tokens a{"a", "b", "c"}, b{"x", "y", "z"};
  CHECK(nld(a, a) == 100.0);
  CHECK(nld(a, b) == 0.0);
  CHECK(nld({}, {}) == 100.0);
  CHECK(nld(a, {}) == 0.0);
  CHECK(nld(a, Tokens{"a", "b"}) == doctest::Approx(100.0 * 2 / 3));
  CHECK(nld_from_distance(1, 3, 2, Normalization::YujianBo) == doctest::Approx(100.0 * (1 - 2.0 / 6)));
  CHECK(nld_from_distance(0, 0, 0, Normalization::YujianBo) == 100.0);
  CHECK(nld(a, b, Normalization::YujianBo) == doctest::Approx(100.0 / 3));
}

TEST_CASE("units") {
  CHECK(units("IncreaseOf(four_box_model(),M_n)", Granularity::Token, Direction::QTP) ==
        Tokens{"IncreaseOf", "(", "four_box_model", "(", ")", ",", "M_n", ")"});
  CHECK(units("will M_n increase?", Granularity::Token, Direction::PTQ) == Tokens{"will", "M_n", "increase", "?"});
  CHECK(units("m³/s", Granularity::Character, Direction::PTQ) == Tokens{"m", "³", "/", "s"});
  CHECK(score("a b c", "a b d", Direction::QTQ) == doctest::Approx(100.0 * 2 / 3));
}

TEST_CASE("a near-miss paraphrase scores in the low nineties at character level") {
  const std::string prediction =
      "if i increase epsilon by 4.24e-06, will temperature in the low latitude box increase?";
  const std::string truth = "by increasing epsilon by 4.24e-06, will temperature in the low latitude box increase?";
  const double ch = score(prediction, truth, Direction::PTQ, Granularity::Character);
  MESSAGE("character-level score " << ch << ", token-level "
                                   << score(prediction, truth, Direction::PTQ, Granularity::Token));
  CHECK(ch >= 90.0);
  CHECK(ch < 95.0);
  CHECK(score(prediction, truth, Direction::PTQ, Granularity::Token) < ch);
}

TEST_CASE("stats and CDF") {
  const std::vector<double> xs{100, 50};
  const Stats s = stats_of(xs);
  CHECK(s.count == 2);
  CHECK(s.mean == 75.0);
  CHECK(s.stddev == 25.0);
  CHECK(stats_of(std::vector<double>{}).count == 0);

  const auto cdf = empirical_cdf({100, 50, 50, 80});
  REQUIRE(cdf.size() == 3);
  CHECK(cdf[0].score == 50);
  CHECK(cdf[0].fraction == 0.5);
  CHECK(cdf[1].score == 80);
  CHECK(cdf[1].fraction == 0.75);
  CHECK(cdf[2].score == 100);
  CHECK(cdf[2].fraction == 1.0);
}

TEST_CASE("evaluate hand-computed aggregates") {
  const std::vector<PredictionRecord> rs{
      rec(Direction::PTQ, "a b", "a b", 1),      // 100
      rec(Direction::PTQ, "a x", "a b", 1),      // 50
      rec(Direction::PTQ, "a b c d", "a b c e", 8),  // 75
      rec(Direction::QTP, "F(x)", "F(x)", 3),    // 100
      rec(Direction::QTQ, "p q", "r s", 3),      // 0
  };
  const EvalReport r = evaluate(rs);
  CHECK(r.by_direction.at(Direction::PTQ).count == 3);
  CHECK(r.by_direction.at(Direction::PTQ).mean == doctest::Approx(75.0));
  CHECK(r.by_direction.at(Direction::QTP).mean == 100.0);
  CHECK(r.by_direction.at(Direction::QTQ).mean == 0.0);
  CHECK(r.ptq_by_form.at(1).mean == 75.0);
  CHECK(r.ptq_by_form.at(1).stddev == 25.0);
  CHECK(r.ptq_by_form.at(8).mean == 75.0);
  CHECK_FALSE(r.ptq_by_form.count(3));
  CHECK(r.ptq_unweighted_form_mean == 75.0);
  CHECK(r.cdf.at(Direction::PTQ).back().fraction == 1.0);

  const std::vector<PredictionRecord> perfect{rec(Direction::QTP, "A(b)", "A(b)", 2),
                                              rec(Direction::PTQ, "x y", "x y", 2)};
  const EvalReport p = evaluate(perfect);
  for (const auto& [d, s] : p.by_direction) {
    CHECK(s.mean == 100.0);
    CHECK(s.stddev == 0.0);
  }
  CHECK_THROWS_AS(evaluate({}), EmptyInput);
}

TEST_CASE("weighted per-form mean equals the overall mean") {
  std::mt19937_64 rng(77);
  std::vector<PredictionRecord> rs;
  for (int i = 0; i < 2000; ++i) {
    const int form = i % 7 == 0 ? 1 + static_cast<int>(rng() % 10) : 8;
    const Tokens a = random_tokens(rng, 6), b = random_tokens(rng, 6);
    std::string pa, pb;
    for (const auto& t : a) pa += t + " ";
    for (const auto& t : b) pb += t + " ";
    rs.push_back(rec(Direction::PTQ, pa, pb, form));
  }
  const EvalReport r = evaluate(rs);
  double weighted = 0;
  std::size_t n = 0;
  double unweighted = 0;
  for (const auto& [f, s] : r.ptq_by_form) {
    weighted += static_cast<double>(s.count) * s.mean;
    n += s.count;
    unweighted += s.mean;
  }
  CHECK(n == rs.size());
  CHECK(std::fabs(weighted / static_cast<double>(n) - r.by_direction.at(Direction::PTQ).mean) < 1e-9);
  CHECK(std::fabs(unweighted / static_cast<double>(r.ptq_by_form.size()) - r.ptq_unweighted_form_mean) < 1e-9);
}

TEST_CASE("prediction files and exports") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "qapt_predictions_test.jsonl";
  write_file(path, std::string(R"({"id": 1, "direction": "PTQ", "prediction": "a b", "target": "a c", "form_id": 8})") +
                        "\n\n" +
                        R"j({"id": "x", "direction": "QTP", "prediction": "F(a)", "target": "F(a)", "form_id": 2})j" + "\n");
  const auto rs = read_predictions(path);
  REQUIRE(rs.size() == 2);
  CHECK(rs[0].id == "1");
  CHECK(rs[1].id == "x");
  CHECK(rs[1].direction == Direction::QTP);

  const EvalReport r = evaluate(rs);
  const auto j = to_json(r);
  CHECK(j["granularity"] == "token");
  CHECK(j["directions"]["PTQ"]["mean"] == 50.0);
  CHECK(j["ptq_by_form"]["8"]["count"] == 1);
  CHECK(j["cdf"]["QTP"][0][1] == 1.0);
  CHECK(cdf_csv(r) == "direction,score,fraction\nQTP,100,1\nPTQ,50,1\n");
  CHECK(forms_csv(r) == "form_id,count,mean,stddev\n8,1,50,0\n");

  write_file(dir / "qapt_predictions_bad.jsonl",
             R"({"id": 1, "direction": "XYZ", "prediction": "", "target": "", "form_id": 1})" "\n");
  CHECK_THROWS_AS(read_predictions(dir / "qapt_predictions_bad.jsonl"), Error);
  write_file(dir / "qapt_predictions_form.jsonl",
             R"({"id": 1, "direction": "PTQ", "prediction": "", "target": "", "form_id": 11})" "\n");
  CHECK_THROWS_AS(read_predictions(dir / "qapt_predictions_form.jsonl"), Error);
  write_file(dir / "qapt_predictions_json.jsonl", "{not json\n");
  CHECK_THROWS_AS(read_predictions(dir / "qapt_predictions_json.jsonl"), Error);
}
