#pragma once

#include "qapt/boxmodel.hpp"
#include "qapt/executor.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace qapt::datagen {

using boxmodel::Param;

struct GenConfig {
  std::size_t n_examples = 1000;
  std::uint64_t seed = 0;
  double noise_rel = 0.3;
  bool execute_answers = false;
  bool balance = true;
  unsigned threads = 0;  // 0 = hardware concurrency; output does not depend on it
};

/// Empty when the config is usable.
std::vector<std::string> check(const GenConfig& c);

struct Range {
  double lo;
  double hi;
};

/// Valid sampling range of a parameter.
Range valid_range(Param p);

/// Integers for N, Fwn, Fws and D_low0; 2 significant digits for M_ek and 3
/// for epsilon.
double round_for(Param p, double value);

/// N: round(|z|*1000)+1 with z standard normal. Others: default*(1+u) with u
/// uniform in [-noise_rel, noise_rel]. Clamped to valid_range, then rounded.
double sample_value(Param p, std::mt19937_64& rng, double noise_rel = 0.3);

/// default*u with u uniform in (0, noise_rel], rounded, at least one unit of
/// the parameter's precision.
double sample_increment(Param p, std::mt19937_64& rng, double noise_rel = 0.3);

/// Independent generator for (seed, stream, index).
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

struct DatasetExample {
  std::uint64_t id = 0;
  int form_id = 0;
  std::string question;
  std::string program;  // canonical program text
  std::optional<executor::Answer> answer;
  std::vector<double> values;  // numeric literals of the question, left to right

  bool operator==(const DatasetExample&) const = default;
};

/// One random instance of a form: clause count, structural synonyms,
/// parameters, phrases and values drawn uniformly from the form's options.
DatasetExample sample_example(int form_id, std::mt19937_64& rng, double noise_rel = 0.3);

/// Numbers in a question, left to right.
std::vector<double> extract_values(std::string_view question);

/// Balanced: form i%10+1 for index i, then a seeded shuffle. Unbalanced: each
/// form drawn with probability proportional to its variant count.
std::vector<DatasetExample> generate(const GenConfig& config);

struct Split {
  std::vector<DatasetExample> train;
  std::vector<DatasetExample> test;
};

/// The shuffled head of size round(test_frac*n) becomes the test set, minus
/// internal repeats and anything also present in train. Throws
/// InsufficientUnique if that empties a form's test allocation.
Split split(std::vector<DatasetExample> examples, double test_frac, std::uint64_t seed);

/// (question, program) identity used for deduplication.
std::string example_key(const DatasetExample& e);

/// Brings each form to n/10 (+1 for the first n%10 forms): forms over target
/// are subsampled, forms under target are topped up with freshly sampled
/// examples. Pool entries and fresh samples whose key is in `avoid` are never
/// used. New examples get ids from `next_id`.
std::vector<DatasetExample> balance(std::span<const DatasetExample> pool, std::size_t n, const GenConfig& config,
                                    const std::unordered_set<std::string>& avoid, std::uint64_t next_id);

/// Fills `answer` for every example; identical programs run once.
void execute_answers(std::vector<DatasetExample>& examples, const boxmodel::Constants& constants,
                     unsigned threads = 0);

struct Dataset {
  std::vector<DatasetExample> train;
  std::vector<DatasetExample> test;
  nlohmann::ordered_json manifest;
};

/// Proportional raw pool of n examples, split, then (when config.balance)
/// the train side balanced back to n - round(test_frac*n). With balancing the
/// test head is deduplicated internally and the balanced train set is built to
/// avoid it; without balancing this is exactly split().
Dataset build_dataset(const GenConfig& config, double test_frac = 0.1,
                      const boxmodel::Constants& constants = boxmodel::default_constants());

nlohmann::ordered_json to_json(const DatasetExample& e);
DatasetExample example_from_json(const nlohmann::json& j);

void write_jsonl(const std::filesystem::path& path, std::span<const DatasetExample> examples);
std::vector<DatasetExample> read_jsonl(const std::filesystem::path& path);

/// Per-form counts keyed "1".."10".
nlohmann::ordered_json form_counts(std::span<const DatasetExample> examples);

/// Writes train.jsonl, test.jsonl, manifest.json and vocab.txt into dir.
void write_dataset(const std::filesystem::path& dir, const Dataset& d);

}  // namespace qapt::datagen
