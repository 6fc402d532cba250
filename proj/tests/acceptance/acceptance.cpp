// Acceptance checks. `acceptance N` runs criterion N; no argument runs all
// nine. Each criterion prints exactly one PASS/FAIL line.

#include "../support.hpp"

#include "qapt/boxmodel.hpp"
#include "qapt/datagen.hpp"
#include "qapt/dsl.hpp"
#include "qapt/executor.hpp"
#include "qapt/metrics.hpp"
#include "qapt/qforms.hpp"
#include "qapt/textcodec.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>

using namespace qapt;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

// 1. Parser round trip.
Outcome parser_round_trip() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::size_t ok = 0;
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    const dsl::Program p = testing::random_program(rng);
    const std::string once = dsl::print_program(p);
    const dsl::Program back = dsl::parse(once);
    const std::string twice = dsl::print_program(dsl::parse(dsl::print_program(back)));
    if (back == p && dsl::print_program(back) == once && twice == once) ++ok;
  }
  const double secs = seconds_since(t0);
  return {ok == n && secs < 5.0, std::to_string(ok) + "/" + std::to_string(n) + " round trips in " + fmt(secs) + " s"};
}

// 2. Metric oracle.
std::size_t recursive_distance(const std::vector<std::string>& a, std::size_t i, const std::vector<std::string>& b,
                               std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  return std::min({recursive_distance(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1),
                   recursive_distance(a, i + 1, b, j) + 1, recursive_distance(a, i, b, j + 1) + 1});
}

Outcome metric_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2);
  const std::vector<std::string> alphabet{"SetTo", "(", ")", ",", "Fwn", "VALUE"};
  const auto random_list = [&] {
    std::vector<std::string> out(rng() % 9);
    for (auto& t : out) t = alphabet[rng() % alphabet.size()];
    return out;
  };
  std::size_t agree = 0, props = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_list(), b = random_list();
    const auto d = metrics::levenshtein(std::span<const std::string>(a), std::span<const std::string>(b));
    if (d == recursive_distance(a, 0, b, 0)) ++agree;
    if (metrics::nld(a, a) == 100.0 && metrics::nld(a, b) == metrics::nld(b, a)) ++props;
  }
  const double secs = seconds_since(t0);
  return {agree == 1000 && props == 1000 && secs < 10.0,
          std::to_string(agree) + "/1000 oracle agreements, " + std::to_string(props) + "/1000 identity+symmetry, " +
              fmt(secs) + " s"};
}

// 3. Simulator conservation.
Outcome conservation() {
  const auto t0 = Clock::now();
  const boxmodel::RunOutput out = boxmodel::run(boxmodel::default_params());
  const double secs = seconds_since(t0);
  const auto& c = boxmodel::default_constants();
  const double s0 = out.total_salt(0);
  double worst = 0;
  bool volumes = true;
  for (std::size_t t = 0; t < out.size(); ++t) {
    worst = std::max(worst, std::fabs(out.total_salt(t) - s0) / std::fabs(s0));
    volumes = volumes && out.low_volume(t) + out.deep_volume(t) == c.low_area * c.total_depth;
  }
  return {worst < 1e-6 && volumes && secs < 1.0 && out.size() == 4001,
          "max relative salt drift " + fmt(worst, 3) + ", volume identity " + (volumes ? "exact" : "broken") + ", " +
              fmt(secs * 1000, 3) + " ms"};
}

// 4. Integrator convergence.
Outcome convergence() {
  boxmodel::Params p = boxmodel::default_params();
  std::vector<double> finals;
  for (int k = 0; k < 3; ++k) {
    finals.push_back(boxmodel::run(p).overturning.back());
    p.dt /= 2;
    p.steps *= 2;
  }
  const double r1 = std::fabs(finals[0] - finals[1]) / std::fabs(finals[1]);
  const double r2 = std::fabs(finals[1] - finals[2]) / std::fabs(finals[2]);
  return {r1 < 1e-3 && r2 < 1e-4, "dt vs dt/2: " + fmt(r1, 3) + ", dt/2 vs dt/4: " + fmt(r2, 3) +
                                      (r2 > 0 ? ", ratio " + fmt(r1 / r2, 3) : std::string())};
}

// 5. Collapse threshold.
bool collapses(double fwn) {
  dsl::Program p{dsl::Query::ChangeSign, {{{dsl::ClauseKind::SetTo, boxmodel::Param::FreshwaterNorth, fwn}}},
                 boxmodel::Variable::Overturning};
  return executor::execute(p).truth;
}

std::optional<double> bisect(double lo, double hi) {
  if (collapses(lo) || !collapses(hi)) return std::nullopt;
  while (hi - lo > 1e-6 * hi) {
    const double mid = 0.5 * (lo + hi);
    (collapses(mid) ? hi : lo) = mid;
  }
  return hi;
}

Outcome collapse_threshold() {
  const auto t0 = Clock::now();
  const double base = boxmodel::default_params().freshwater_north;
  const auto threshold = bisect(base, 10 * base);
  if (!threshold) {
    // Report where the threshold actually sits so the gap is visible.
    const auto wide = bisect(base, 100 * base);
    std::string where = "none found below 100x default either";
    if (wide) where = "a wider bracket finds Fwn* = " + fmt(*wide, 6) + " (" + fmt(*wide / base, 3) + "x default)";
    return {false, "no sign change of M_n anywhere in Fwn in [" + fmt(base) + ", " + fmt(10 * base) +
                       "] with the default constants; " + where + "; " + fmt(seconds_since(t0), 3) + " s"};
  }
  const bool below = !collapses(0.5 * *threshold);
  const bool above = collapses(1.5 * *threshold);
  bool monotone = true;
  bool seen = false;
  for (int k = 0; k <= 10; ++k) {
    const bool c = collapses(base + k * 0.9 * base);
    monotone = monotone && !(seen && !c);
    seen = seen || c;
  }
  const double secs = seconds_since(t0);
  return {below && above && monotone && secs < 30.0, "Fwn* = " + fmt(*threshold, 6) + ", false at 0.5x: " +
                                                         (below ? "yes" : "no") + ", true at 1.5x: " +
                                                         (above ? "yes" : "no") + ", monotone grid: " +
                                                         (monotone ? "yes" : "no") + ", " + fmt(secs, 3) + " s"};
}

// 6. Dataset scale and balance.
Outcome dataset_scale() {
  const auto t0 = Clock::now();
  datagen::GenConfig config;
  config.n_examples = 250000;
  config.seed = 42;
  const datagen::Dataset d = datagen::build_dataset(config, 0.1);
  const double secs = seconds_since(t0);

  std::map<int, std::size_t> train, test;
  for (const auto& e : d.train) ++train[e.form_id];
  for (const auto& e : d.test) ++test[e.form_id];
  double worst_share = 0;
  for (int f = 1; f <= qforms::kFormCount; ++f)
    worst_share = std::max(worst_share, std::fabs(static_cast<double>(train[f]) / d.train.size() - 0.1));

  std::unordered_set<std::string> keys, train_keys;
  for (const auto& e : d.train) train_keys.insert(datagen::example_key(e));
  bool dedup = true;
  for (const auto& e : d.test) {
    const auto k = datagen::example_key(e);
    dedup = dedup && keys.insert(k).second && !train_keys.count(k);
  }
  std::size_t multi = 0;
  for (int f : {2, 8, 10}) multi += test[f];
  const double multi_share = static_cast<double>(multi) / static_cast<double>(d.test.size());
  // 25,000 are drawn; "about 25,000" is read as keeping at least 90% after removing repeats.
  const bool size_ok = d.test.size() >= 22500 && d.test.size() <= 25000;

  std::ostringstream detail;
  detail << "train " << d.train.size() << " (worst form share deviation " << fmt(worst_share * 100, 3)
         << " pts), test " << d.test.size() << " of 25000 drawn" << (dedup ? " deduplicated" : " HAS DUPLICATES") << ", multi-clause forms "
         << fmt(multi_share * 100, 4) << "% of test (form 8 alone " << test[8] << "), " << fmt(secs, 3) << " s";
  return {d.train.size() + 25000 == 250000 && worst_share <= 0.001 && size_ok && dedup && multi_share > 0.9 &&
              secs < 600.0,
          detail.str()};
}

std::vector<datagen::DatasetExample> closure_set() {
  datagen::GenConfig config;
  config.n_examples = 10000;
  config.seed = 7;
  return datagen::generate(config);
}

// 7. Oracle translation closure.
Outcome translation_closure() {
  const auto xs = closure_set();
  std::size_t matched = 0, canonical = 0;
  for (const auto& e : xs) {
    const dsl::Program p = dsl::parse(e.program);
    if (auto m = qforms::try_match(e.question); m && m->program == p) ++matched;
    if (auto m = qforms::try_match(qforms::canonical_question(p)); m && m->program == p) ++canonical;
  }
  return {matched == xs.size() && canonical == xs.size(),
          std::to_string(matched) + "/" + std::to_string(xs.size()) + " questions matched, " +
              std::to_string(canonical) + "/" + std::to_string(xs.size()) + " canonical round trips"};
}

// 8. Codec round trip.
Outcome codec_round_trip() {
  const auto xs = closure_set();
  const auto vocab = textcodec::build_vocab(qforms::lexicon_corpus());
  std::size_t exact = 0, total = 0, unk = 0;
  for (const auto& e : xs) {
    const std::string program = dsl::print_program(dsl::parse(e.program));
    for (const std::string& text : {e.question, program}) {
      ++total;
      const auto seq = textcodec::encode(text, vocab);
      unk += static_cast<std::size_t>(std::count(seq.ids.begin(), seq.ids.end(), textcodec::Vocab::kUnk));
      const auto back = textcodec::decode(seq, vocab);
      if (back.text == text && back.warnings.empty()) ++exact;
    }
  }
  return {exact == total && unk == 0, std::to_string(exact) + "/" + std::to_string(total) + " exact, " +
                                          std::to_string(unk) + " UNK tokens, vocab size " +
                                          std::to_string(vocab.size())};
}

// 9. Report consistency.
Outcome report_consistency() {
  using metrics::Direction;
  // Hand-scored records: token-level max-length normalization.
  std::vector<metrics::PredictionRecord> rs{
      {"a", Direction::PTQ, "a b c d", "a b c d", 1},  // 100
      {"b", Direction::PTQ, "a b c d", "a b x d", 1},  // 75
      {"c", Direction::PTQ, "a b", "x y", 8},          // 0
      {"d", Direction::PTQ, "a b", "a y", 8},          // 50
      {"e", Direction::PTQ, "a b", "a b", 8},          // 100
      {"f", Direction::QTP, "F(x)", "F(y)", 8},        // 75 (F ( x ) vs F ( y ))
      {"g", Direction::QTQ, "p", "p", 2},              // 100
  };
  const auto r = metrics::evaluate(rs);
  bool hand = true;
  const auto near = [](double a, double b) { return std::fabs(a - b) < 1e-12; };
  hand = hand && near(r.by_direction.at(Direction::PTQ).mean, 65.0);
  hand = hand && near(r.by_direction.at(Direction::PTQ).stddev, std::sqrt((35.0 * 35 + 10 * 10 + 65 * 65 + 15 * 15 + 35 * 35) / 5));
  hand = hand && near(r.by_direction.at(Direction::QTP).mean, 75.0);
  hand = hand && near(r.by_direction.at(Direction::QTQ).mean, 100.0);
  hand = hand && near(r.ptq_by_form.at(1).mean, 87.5) && near(r.ptq_by_form.at(8).mean, 50.0);
  hand = hand && near(r.ptq_unweighted_form_mean, 68.75);
  const auto& cdf = r.cdf.at(Direction::PTQ);
  hand = hand && cdf.size() == 4 && cdf[0].score == 0 && near(cdf[0].fraction, 0.2) && cdf[3].score == 100 &&
         cdf[3].fraction == 1.0;

  // A large skewed set: weighted per-form mean against the overall mean.
  std::mt19937_64 rng(9);
  std::vector<metrics::PredictionRecord> big;
  const std::vector<std::string> words{"If", "I", "set", "Fwn", "to", "VALUE", ",", "will", "M_n", "increase", "?"};
  for (int i = 0; i < 25000; ++i) {
    const int form = rng() % 100 < 94 ? 8 : 1 + static_cast<int>(rng() % 10);
    std::string a, b;
    for (int k = 0; k < 8; ++k) {
      a += words[rng() % words.size()] + " ";
      b += words[rng() % words.size()] + " ";
    }
    big.push_back({std::to_string(i), Direction::PTQ, a, b, form});
  }
  const auto rb = metrics::evaluate(big);
  double weighted = 0;
  std::size_t n = 0;
  for (const auto& [f, s] : rb.ptq_by_form) {
    weighted += static_cast<double>(s.count) * s.mean;
    n += s.count;
  }
  const double gap = std::fabs(weighted / static_cast<double>(n) - rb.by_direction.at(Direction::PTQ).mean);
  return {hand && gap < 1e-9 && n == big.size(),
          std::string("hand-computed aggregates ") + (hand ? "match" : "DIFFER") + ", weighted-vs-overall gap " +
              fmt(gap, 3)};
}

const std::map<int, std::pair<const char*, std::function<Outcome()>>>& criteria() {
  static const std::map<int, std::pair<const char*, std::function<Outcome()>>> table{
      {1, {"parser round trip", parser_round_trip}},
      {2, {"metric oracle", metric_oracle}},
      {3, {"simulator conservation", conservation}},
      {4, {"integrator convergence", convergence}},
      {5, {"collapse threshold", collapse_threshold}},
      {6, {"dataset scale and balance", dataset_scale}},
      {7, {"oracle translation closure", translation_closure}},
      {8, {"codec round trip", codec_round_trip}},
      {9, {"report consistency", report_consistency}},
  };
  return table;
}

bool run_one(int id) {
  const auto& [label, fn] = criteria().at(id);
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::cout << "criterion " << id << " (" << label << "): " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail
            << std::endl;
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 2) {
    std::cerr << "usage: acceptance [1-9]\n";
    return 2;
  }
  if (argc == 2) {
    const int id = std::atoi(argv[1]);
    if (!criteria().count(id)) {
      std::cerr << "unknown criterion '" << argv[1] << "'\n";
      return 2;
    }
    return run_one(id) ? 0 : 1;
  }
  bool all = true;
  for (const auto& [id, entry] : criteria()) all = run_one(id) && all;
  return all ? 0 : 1;
}
