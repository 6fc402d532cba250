#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qapt/datagen.hpp"
#include "qapt/dsl.hpp"
#include "qapt/qforms.hpp"
#include "qapt/textcodec.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

using namespace qapt;
using namespace qapt::datagen;

namespace {

std::map<int, std::size_t> counts_by_form(const std::vector<DatasetExample>& xs) {
  std::map<int, std::size_t> out;
  for (const auto& e : xs) ++out[e.form_id];
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GenConfig config_of(std::size_t n, std::uint64_t seed) {
  GenConfig c;
  c.n_examples = n;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("config checks") {
  CHECK(check(config_of(1000, 1)).empty());
  CHECK_FALSE(check(config_of(9, 1)).empty());
  GenConfig c = config_of(100, 1);
  c.noise_rel = 0;
  CHECK_FALSE(check(c).empty());
  c.noise_rel = 1;
  CHECK_FALSE(check(c).empty());
}

TEST_CASE("sampled values stay in range and are rounded") {
  std::mt19937_64 rng(1);
  for (Param p : boxmodel::kAllParams) {
    const Range r = valid_range(p);
    for (int i = 0; i < 5000; ++i) {
      const double v = sample_value(p, rng);
      CHECK(v >= r.lo);
      CHECK(v <= r.hi);
      CHECK(round_for(p, v) == v);
    }
  }
  for (int i = 0; i < 2000; ++i) {
    const double fwn = sample_value(Param::FreshwaterNorth, rng);
    CHECK(fwn >= 3.15e4);
    CHECK(fwn <= 5.85e4);
    const double n = sample_value(Param::Steps, rng);
    CHECK(n == std::floor(n));
  }
  CHECK(round_for(Param::EkmanTransport, 2.6149e7) == 2.6e7);
  CHECK(round_for(Param::Friction, 1.23456e-4) == 1.23e-4);
  CHECK(round_for(Param::LowDepthInit, 438.6) == 439);
}

TEST_CASE("zero noise gives the default") {
  std::mt19937_64 rng(2);
  const auto d = boxmodel::default_params();
  for (Param p : boxmodel::kAllParams)
    if (p != Param::Steps) CHECK(sample_value(p, rng, 0.0) == d.get(p));
}

TEST_CASE("D_low0 draws average to the default") {
  std::mt19937_64 rng(3);
  double sum = 0;
  for (int i = 0; i < 10000; ++i) sum += sample_value(Param::LowDepthInit, rng);
  CHECK(std::fabs(sum / 10000 - 400.0) / 400.0 < 0.02);
}

TEST_CASE("increments are positive") {
  std::mt19937_64 rng(4);
  for (Param p : boxmodel::kAllParams)
    for (int i = 0; i < 1000; ++i) {
      const double v = sample_increment(p, rng);
      CHECK(v > 0);
      CHECK(round_for(p, v) == v);
    }
}

TEST_CASE("streams are reproducible and independent") {
  auto a = stream_rng(42, 1, 7);
  auto b = stream_rng(42, 1, 7);
  CHECK(a() == b());
  CHECK(stream_rng(42, 1, 7)() != stream_rng(42, 1, 8)());
  CHECK(stream_rng(42, 1, 7)() != stream_rng(42, 2, 7)());
  CHECK(stream_rng(42, 1, 7)() != stream_rng(43, 1, 7)());
}

TEST_CASE("value extraction") {
  CHECK(extract_values("If I set Fwn to 5.8e4, M_ek to 2.6e7, and D_low0 to 439, will M_n increase?") ==
        std::vector<double>{5.8e4, 2.6e7, 439});
  CHECK(extract_values("What is the value of M_n at time step 4000 if Fwn is 5000?") ==
        std::vector<double>{4000, 5000});
  CHECK(extract_values("Does the AMOC collapse?").empty());
}

TEST_CASE("every sampled example is consistent") {
  std::mt19937_64 rng(9);
  for (int form_id = 1; form_id <= qforms::kFormCount; ++form_id)
    for (int i = 0; i < 300; ++i) {
      const DatasetExample e = sample_example(form_id, rng);
      CHECK(e.form_id == form_id);
      const dsl::Program p = dsl::parse(e.program);
      CHECK(dsl::validate(p).empty());
      CHECK(dsl::print_program(p) == e.program);
      CHECK(p.run.clauses.size() <= 3);
      CHECK(e.values == extract_values(e.question));
      const qforms::Match m = qforms::match_question(e.question);
      CHECK(m.form_id == form_id);
      CHECK(m.program == p);
      CHECK(qforms::instantiate(m.form_id, m.binding, m.choice).question == e.question);
    }
}

TEST_CASE("balanced generation") {
  const auto xs = generate(config_of(1003, 17));
  CHECK(xs.size() == 1003);
  const auto counts = counts_by_form(xs);
  REQUIRE(counts.size() == 10);
  for (const auto& [f, c] : counts) CHECK((c == 100 || c == 101));

  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(xs[i].id == i);
  for (const auto& e : xs) CHECK(qforms::match_question(e.question).program == dsl::parse(e.program));

  CHECK(generate(config_of(1003, 17)) == xs);
  GenConfig one_thread = config_of(1003, 17);
  one_thread.threads = 1;
  CHECK(generate(one_thread) == xs);
  CHECK(generate(config_of(1003, 18)) != xs);
}

TEST_CASE("unbalanced generation follows variant counts") {
  GenConfig c = config_of(5000, 3);
  c.balance = false;
  const auto counts = counts_by_form(generate(c));
  CHECK(counts.at(8) > 4500);
}

TEST_CASE("split deduplicates the test side") {
  GenConfig c = config_of(4000, 5);
  c.balance = false;
  const auto xs = generate(c);
  const Split s = split(xs, 0.1, 5);
  CHECK(s.train.size() == 3600);
  CHECK(s.test.size() <= 400);
  CHECK(s.test.size() > 300);

  std::unordered_set<std::string> train_keys, train_questions;
  for (const auto& e : s.train) {
    train_keys.insert(example_key(e));
    train_questions.insert(e.question);
  }
  std::unordered_set<std::string> test_keys;
  for (const auto& e : s.test) {
    CHECK(test_keys.insert(example_key(e)).second);
    CHECK_FALSE(train_keys.count(example_key(e)));
    CHECK_FALSE(train_questions.count(e.question));
  }
  CHECK(split(xs, 0.1, 5).test == s.test);
  CHECK_THROWS_AS(split(xs, 0.0, 5), Error);
  CHECK_THROWS_AS(split(xs, 1.0, 5), Error);
}

TEST_CASE("split reports a form with no unique test examples") {
  std::mt19937_64 rng(1);
  const DatasetExample e = sample_example(3, rng);
  std::vector<DatasetExample> same(20, e);
  for (std::size_t i = 0; i < same.size(); ++i) same[i].id = i;
  CHECK_THROWS_AS(split(same, 0.5, 1), InsufficientUnique);
}

TEST_CASE("balance subsamples and tops up") {
  GenConfig c = config_of(2000, 8);
  c.balance = false;
  const auto pool = generate(c);
  std::unordered_set<std::string> avoid;
  for (std::size_t i = 0; i < 50; ++i) avoid.insert(example_key(pool[i]));

  const auto out = balance(pool, 1005, c, avoid, 100000);
  CHECK(out.size() == 1005);
  for (const auto& [f, n] : counts_by_form(out)) CHECK((n == 100 || n == 101));
  std::size_t fresh = 0;
  for (const auto& e : out) {
    CHECK_FALSE(avoid.count(example_key(e)));
    fresh += e.id >= 100000;
  }
  CHECK(fresh > 0);
  CHECK(balance(pool, 1005, c, avoid, 100000) == out);
}

TEST_CASE("build_dataset") {
  GenConfig c = config_of(3000, 21);
  c.execute_answers = true;
  const Dataset d = build_dataset(c, 0.1);
  CHECK(d.train.size() == 2700);
  for (const auto& [f, n] : counts_by_form(d.train)) CHECK((n == 270));
  std::unordered_set<std::string> test_keys;
  for (const auto& e : d.test) test_keys.insert(example_key(e));
  CHECK(test_keys.size() == d.test.size());
  std::set<std::uint64_t> ids;
  for (const auto& e : d.train) {
    CHECK_FALSE(test_keys.count(example_key(e)));
    CHECK(ids.insert(e.id).second);
  }
  for (const auto& e : d.test) CHECK(ids.insert(e.id).second);

  for (const auto& e : d.test) {
    REQUIRE(e.answer);
    const auto q = dsl::parse(e.program).query;
    CHECK((e.answer->kind == executor::Answer::Kind::Number) == (q == dsl::Query::FinalValue));
  }
  CHECK(d.manifest["counts"]["train"] == 2700);
  CHECK(d.manifest["per_form"]["train"]["8"] == 270);
  CHECK(d.manifest["config"]["seed"] == 21);

  std::size_t multi = 0;
  for (const auto& e : d.test) multi += e.form_id == 8 || e.form_id == 10 || e.form_id == 2;
  CHECK(static_cast<double>(multi) > 0.9 * static_cast<double>(d.test.size()));
}

TEST_CASE("identical programs share one answer") {
  std::mt19937_64 rng(4);
  DatasetExample e = sample_example(6, rng);
  std::vector<DatasetExample> xs{e, e, sample_example(1, rng)};
  execute_answers(xs, boxmodel::default_constants(), 2);
  for (const auto& x : xs) CHECK(x.answer);
  CHECK(xs[0].answer == xs[1].answer);
  CHECK(*xs[0].answer == executor::execute(dsl::parse(e.program)));
}

TEST_CASE("JSON Lines round trip and file layout") {
  GenConfig c = config_of(200, 2);
  c.execute_answers = true;
  const Dataset d = build_dataset(c, 0.1);
  const auto dir = std::filesystem::temp_directory_path() / "qapt_datagen_test";
  std::filesystem::remove_all(dir);
  write_dataset(dir, d);
  for (const char* f : {"train.jsonl", "test.jsonl", "vocab.txt", "manifest.json"})
    CHECK(std::filesystem::exists(dir / f));
  CHECK(read_jsonl(dir / "train.jsonl") == d.train);
  CHECK(read_jsonl(dir / "test.jsonl") == d.test);

  const auto first = slurp(dir / "train.jsonl").substr(0, 40);
  CHECK(first.starts_with("{\"id\":"));
  const auto line = to_json(d.train.front()).dump();
  CHECK(line.find("\"form_id\"") < line.find("\"question\""));
  CHECK(line.find("\"program\"") < line.find("\"answer\""));
  CHECK(line.find("\"answer\"") < line.find("\"values\""));

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  const auto vocab = textcodec::Vocab::load(dir / "vocab.txt");
  CHECK(manifest["vocab_size"] == vocab.size());
  for (const auto& e : d.train) {
    const auto q = textcodec::encode(e.question, vocab);
    const auto p = textcodec::encode(e.program, vocab);
    CHECK(std::count(q.ids.begin(), q.ids.end(), textcodec::Vocab::kUnk) == 0);
    CHECK(std::count(p.ids.begin(), p.ids.end(), textcodec::Vocab::kUnk) == 0);
  }

  write_dataset(dir, d);
  const auto again = slurp(dir / "train.jsonl");
  write_dataset(dir, build_dataset(c, 0.1));
  CHECK(slurp(dir / "train.jsonl") == again);

  std::ofstream(dir / "broken.jsonl") << "{\"id\": 1}\n";
  CHECK_THROWS_AS(read_jsonl(dir / "broken.jsonl"), Error);
  CHECK_THROWS_AS(read_jsonl(dir / "missing.jsonl"), Error);
  CHECK(form_counts(d.train)["10"].get<std::size_t>() == counts_by_form(d.train)[10]);
}
