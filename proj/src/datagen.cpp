#include "qapt/datagen.hpp"

#include "qapt/dsl.hpp"
#include "qapt/error.hpp"
#include "qapt/parallel.hpp"
#include "qapt/qforms.hpp"
#include "qapt/textcodec.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_map>

namespace qapt::datagen {

namespace {

enum Stream : std::uint64_t { kExamples = 1, kShuffle = 2, kSplit = 3, kBalancePick = 4, kTopUp = 5 };

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double round_sig(double x, int digits) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific, digits - 1);
  double out = 0.0;
  std::from_chars(buf, res.ptr, out);
  return out;
}

/// Smallest positive value round_for can return.
double unit_of(Param p) {
  switch (p) {
    case Param::EkmanTransport: return round_sig(boxmodel::default_params().ekman_transport * 1e-2, 2);
    case Param::Friction: return round_sig(boxmodel::default_params().friction * 1e-3, 3);
    default: return 1.0;
  }
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64 rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

std::vector<DatasetExample> permute(std::vector<DatasetExample> xs, std::mt19937_64 rng) {
  std::vector<DatasetExample> out;
  out.reserve(xs.size());
  for (std::size_t i : shuffled_indices(xs.size(), std::move(rng))) out.push_back(std::move(xs[i]));
  return out;
}

std::vector<double> form_weights() {
  std::vector<double> w;
  for (const auto& f : qforms::forms()) w.push_back(static_cast<double>(f.variant_count()));
  return w;
}

}  // namespace

std::vector<std::string> check(const GenConfig& c) {
  std::vector<std::string> out;
  if (c.n_examples < 10) out.push_back("n_examples must be at least 10");
  if (!(c.noise_rel > 0.0 && c.noise_rel < 1.0)) out.push_back("noise_rel must lie in (0, 1)");
  return out;
}

Range valid_range(Param p) {
  const auto d = boxmodel::default_params();
  switch (p) {
    case Param::Steps: return {100, 20000};
    case Param::FreshwaterNorth: return {0, 5 * d.freshwater_north};
    case Param::FreshwaterSouth: return {0, 5 * d.freshwater_south};
    case Param::EkmanTransport: return {0.5 * d.ekman_transport, 1.5 * d.ekman_transport};
    case Param::LowDepthInit: return {50, 3000};
    case Param::Friction: return {0.25 * d.friction, 4 * d.friction};
  }
  return {0, 0};
}

double round_for(Param p, double value) {
  switch (p) {
    case Param::EkmanTransport: return round_sig(value, 2);
    case Param::Friction: return round_sig(value, 3);
    default: return std::round(value);
  }
}

double sample_value(Param p, std::mt19937_64& rng, double noise_rel) {
  const Range r = valid_range(p);
  double v = 0.0;
  if (p == Param::Steps) {
    std::normal_distribution<double> z(0.0, 1.0);
    v = std::round(std::fabs(z(rng)) * 1000.0) + 1.0;
  } else {
    std::uniform_real_distribution<double> u(-noise_rel, noise_rel);
    v = boxmodel::default_params().get(p) * (1.0 + (noise_rel > 0 ? u(rng) : 0.0));
  }
  return std::clamp(round_for(p, std::clamp(v, r.lo, r.hi)), r.lo, r.hi);
}

double sample_increment(Param p, std::mt19937_64& rng, double noise_rel) {
  double u = 0.0;
  if (noise_rel > 0) {
    // uniform_real_distribution is half-open [0, noise); flip it to (0, noise].
    std::uniform_real_distribution<double> dist(0.0, noise_rel);
    u = noise_rel - dist(rng);
  }
  const double base = p == Param::Steps ? 1000.0 : boxmodel::default_params().get(p);
  return std::max(round_for(p, base * u), unit_of(p));
}

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(stream * 0x100000001B3ull + splitmix64(index))));
}

std::vector<double> extract_values(std::string_view question) {
  std::vector<double> out;
  for (const auto& t : textcodec::tokenize(question, textcodec::TextKind::Question))
    if (auto v = dsl::parse_number(t)) out.push_back(*v);
  return out;
}

DatasetExample sample_example(int form_id, std::mt19937_64& rng, double noise_rel) {
  const qforms::QuestionForm& f = qforms::form(form_id);
  const qforms::Shape& s = f.shape;
  const auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };

  const std::size_t count = s.min_clauses + pick(s.max_clauses - s.min_clauses + 1);
  std::vector<const qforms::Pattern*> layouts;
  for (const auto& p : f.patterns)
    if (p.clauses == count) layouts.push_back(&p);
  const qforms::Pattern& pattern = *layouts[pick(layouts.size())];

  qforms::Binding b;
  qforms::SynonymChoice choice = pattern.structure;
  if (s.steps_slot) b[*s.steps_slot] = sample_value(Param::Steps, rng, noise_rel);

  const auto value_for = [&](Param p) {
    return s.clause_kind == dsl::ClauseKind::SetTo ? sample_value(p, rng, noise_rel)
                                                   : sample_increment(p, rng, noise_rel);
  };
  if (s.fixed_param) {
    b[s.value_slot(0)] = value_for(*s.fixed_param);
  } else {
    std::vector<Param> params = s.params;
    std::shuffle(params.begin(), params.end(), rng);
    for (std::size_t k = 0; k < count; ++k) {
      const Param p = params[k];
      b[s.param_slot(k)] = p;
      b[s.value_slot(k)] = value_for(p);
      if (s.noun_params) choice[std::string(boxmodel::name(p))] = pick(qforms::param_phrases(p).size());
    }
  }

  for (const auto& e : pattern.elements) {
    if (e.kind != qforms::Element::Kind::Variable) continue;
    boxmodel::Variable v = e.variables.front();
    if (e.slot != 0) {
      v = e.variables[pick(e.variables.size())];
      b[e.slot] = v;
    }
    choice[std::string(boxmodel::name(v))] = pick(qforms::variable_phrases(v).size());
  }

  const auto inst = qforms::instantiate(form_id, b, choice);
  DatasetExample ex;
  ex.form_id = form_id;
  ex.question = inst.question;
  ex.program = dsl::print_program(inst.program);
  ex.values = extract_values(ex.question);
  return ex;
}

std::vector<DatasetExample> generate(const GenConfig& config) {
  if (auto problems = check(config); !problems.empty()) throw Error("invalid generation config: " + problems.front());
  const std::size_t n = config.n_examples;
  std::vector<DatasetExample> out(n);
  const auto weights = form_weights();

  parallel_for(n, config.threads, [&](std::size_t i) {
    auto rng = stream_rng(config.seed, kExamples, i);
    int form_id = 0;
    if (config.balance) {
      form_id = static_cast<int>(i % qforms::kFormCount) + 1;
    } else {
      std::discrete_distribution<int> d(weights.begin(), weights.end());
      form_id = d(rng) + 1;
    }
    out[i] = sample_example(form_id, rng, config.noise_rel);
  });

  if (config.balance) out = permute(std::move(out), stream_rng(config.seed, kShuffle, 0));
  for (std::size_t i = 0; i < n; ++i) out[i].id = i;
  return out;
}

std::string example_key(const DatasetExample& e) { return e.question + '\n' + e.program; }

namespace {

Split split_head(std::vector<DatasetExample> examples, double test_frac, std::uint64_t seed, bool exclude_train) {
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw Error("test fraction must lie in (0, 1)");
  const std::size_t n = examples.size();
  const auto n_test = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(n)));
  auto shuffled = permute(std::move(examples), stream_rng(seed, kSplit, 0));

  Split out;
  out.train.assign(std::make_move_iterator(shuffled.begin() + static_cast<std::ptrdiff_t>(n_test)),
                   std::make_move_iterator(shuffled.end()));
  std::unordered_set<std::string> seen;
  if (exclude_train)
    for (const auto& e : out.train) seen.insert(example_key(e));

  std::map<int, std::size_t> allocated;
  std::map<int, std::size_t> kept;
  for (std::size_t i = 0; i < n_test; ++i) {
    auto& e = shuffled[i];
    ++allocated[e.form_id];
    if (!seen.insert(example_key(e)).second) continue;
    ++kept[e.form_id];
    out.test.push_back(std::move(e));
  }
  for (const auto& [form_id, count] : allocated)
    if (count > 0 && kept[form_id] == 0)
      throw InsufficientUnique("deduplication removed every test example of form " + std::to_string(form_id));
  return out;
}

}  // namespace

Split split(std::vector<DatasetExample> examples, double test_frac, std::uint64_t seed) {
  return split_head(std::move(examples), test_frac, seed, true);
}

std::vector<DatasetExample> balance(std::span<const DatasetExample> pool, std::size_t n, const GenConfig& config,
                                    const std::unordered_set<std::string>& avoid, std::uint64_t next_id) {
  std::map<int, std::vector<const DatasetExample*>> by_form;
  for (const auto& e : pool)
    if (!avoid.count(example_key(e))) by_form[e.form_id].push_back(&e);

  const std::size_t forms = qforms::kFormCount;
  std::vector<DatasetExample> out;
  out.reserve(n);
  for (int f = 1; f <= static_cast<int>(forms); ++f) {
    const std::size_t target = n / forms + (static_cast<std::size_t>(f - 1) < n % forms ? 1 : 0);
    const auto& have = by_form[f];
    if (have.size() >= target) {
      auto idx = shuffled_indices(have.size(), stream_rng(config.seed, kBalancePick, static_cast<std::uint64_t>(f)));
      idx.resize(target);
      std::sort(idx.begin(), idx.end());
      for (std::size_t i : idx) out.push_back(*have[i]);
      continue;
    }
    for (const auto* e : have) out.push_back(*e);

    const std::size_t missing = target - have.size();
    const std::size_t start = out.size();
    out.resize(start + missing);
    // Each candidate has its own stream; rejected candidates are skipped in
    // a second, sequential pass so the result does not depend on threading.
    const std::size_t batch = missing + missing / 8 + 16;
    std::vector<DatasetExample> candidates(batch);
    std::size_t filled = 0;
    std::uint64_t next_candidate = 0;
    std::size_t attempts = 0;
    while (filled < missing) {
      const std::uint64_t base = next_candidate;
      parallel_for(batch, config.threads, [&](std::size_t i) {
        auto rng = stream_rng(config.seed ^ (static_cast<std::uint64_t>(f) << 56), kTopUp, base + i);
        candidates[i] = sample_example(f, rng, config.noise_rel);
      });
      next_candidate += batch;
      for (std::size_t i = 0; i < batch && filled < missing; ++i) {
        if (avoid.count(example_key(candidates[i]))) continue;
        out[start + filled++] = std::move(candidates[i]);
      }
      attempts += batch;
      if (filled < missing && attempts > 100 * missing + 1000)
        throw InsufficientUnique("cannot sample enough training examples of form " + std::to_string(f) +
                                 " outside the test set");
    }
    for (std::size_t i = start; i < out.size(); ++i) out[i].id = next_id++;
  }
  return permute(std::move(out), stream_rng(config.seed, kShuffle, 1));
}

void execute_answers(std::vector<DatasetExample>& examples, const boxmodel::Constants& constants, unsigned threads) {
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::string> unique;
  for (const auto& e : examples)
    if (slot.emplace(e.program, unique.size()).second) unique.push_back(e.program);

  std::vector<executor::Answer> answers(unique.size());
  parallel_for(unique.size(), threads,
               [&](std::size_t i) { answers[i] = executor::execute(dsl::parse(unique[i]), constants); });
  for (auto& e : examples) e.answer = answers[slot.at(e.program)];
}

Dataset build_dataset(const GenConfig& config, double test_frac, const boxmodel::Constants& constants) {
  GenConfig raw_config = config;
  raw_config.balance = false;
  auto parts = split_head(generate(raw_config), test_frac, config.seed, !config.balance);

  const std::size_t n_train =
      config.n_examples - static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(config.n_examples)));
  Dataset d;
  d.test = std::move(parts.test);
  if (config.balance) {
    std::unordered_set<std::string> avoid;
    for (const auto& e : d.test) avoid.insert(example_key(e));
    d.train = balance(parts.train, n_train, config, avoid, config.n_examples);
  } else {
    d.train = std::move(parts.train);
  }
  if (config.execute_answers) {
    execute_answers(d.train, constants, config.threads);
    execute_answers(d.test, constants, config.threads);
  }

  auto& m = d.manifest;
  m["format"] = "qapt-dataset/1";
  m["config"] = {{"n_examples", config.n_examples},   {"seed", config.seed},
                 {"noise_rel", config.noise_rel},     {"execute_answers", config.execute_answers},
                 {"balance", config.balance},         {"test_frac", test_frac}};
  m["counts"] = {{"train", d.train.size()}, {"test", d.test.size()}};
  m["per_form"] = {{"train", form_counts(d.train)}, {"test", form_counts(d.test)}};
  nlohmann::ordered_json variants;
  for (const auto& f : qforms::forms()) variants[std::to_string(f.id)] = f.variant_count();
  m["variant_counts"] = variants;
  m["files"] = {"train.jsonl", "test.jsonl", "vocab.txt"};
  return d;
}

nlohmann::ordered_json to_json(const DatasetExample& e) {
  nlohmann::ordered_json j;
  j["id"] = e.id;
  j["form_id"] = e.form_id;
  j["question"] = e.question;
  j["program"] = e.program;
  if (e.answer) j["answer"] = executor::to_json(*e.answer);
  j["values"] = e.values;
  return j;
}

DatasetExample example_from_json(const nlohmann::json& j) {
  DatasetExample e;
  e.id = j.at("id").get<std::uint64_t>();
  e.form_id = j.at("form_id").get<int>();
  e.question = j.at("question").get<std::string>();
  e.program = j.at("program").get<std::string>();
  if (j.contains("answer")) e.answer = executor::answer_from_json(j.at("answer"));
  e.values = j.value("values", std::vector<double>{});
  return e;
}

void write_jsonl(const std::filesystem::path& path, std::span<const DatasetExample> examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& e : examples) out << to_json(e).dump() << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<DatasetExample> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<DatasetExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

nlohmann::ordered_json form_counts(std::span<const DatasetExample> examples) {
  std::map<int, std::size_t> counts;
  for (int f = 1; f <= qforms::kFormCount; ++f) counts[f] = 0;
  for (const auto& e : examples) ++counts[e.form_id];
  nlohmann::ordered_json j;
  for (const auto& [f, c] : counts) j[std::to_string(f)] = c;
  return j;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& d) {
  std::filesystem::create_directories(dir);
  write_jsonl(dir / "train.jsonl", d.train);
  write_jsonl(dir / "test.jsonl", d.test);
  const auto vocab = textcodec::build_vocab(qforms::lexicon_corpus());
  vocab.save(dir / "vocab.txt");
  auto manifest = d.manifest;
  manifest["vocab_size"] = vocab.size();
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

}  // namespace qapt::datagen
