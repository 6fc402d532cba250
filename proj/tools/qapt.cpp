// qapt: command-line front end for the four-box question/program toolkit.
//
// Exit codes: 0 success, 2 usage error or unreadable input, 3 parse,
// validation or no-match error, 4 execution or generation error.

#include "qapt/boxmodel.hpp"
#include "qapt/datagen.hpp"
#include "qapt/dsl.hpp"
#include "qapt/error.hpp"
#include "qapt/executor.hpp"
#include "qapt/metrics.hpp"
#include "qapt/qforms.hpp"
#include "qapt/service.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

namespace {

using nlohmann::ordered_json;
using namespace qapt;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;
constexpr int kExitExec = 4;

/// Bad invocation detected after CLI parsing (missing files and the like).
struct UsageError : Error {
  using Error::Error;
};

struct Globals {
  bool json = false;
  std::string constants_path;

  boxmodel::Constants constants() const {
    try {
      if (!constants_path.empty()) return boxmodel::load_constants(constants_path);
      return boxmodel::constants_from_env();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
};

std::string read_argument(const std::string& arg) {
  if (arg != "-") return arg;
  std::string text((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

void print_json(const ordered_json& j) { std::cout << j.dump() << '\n'; }

std::string describe(const executor::Answer& a) {
  std::string s = a.kind == executor::Answer::Kind::Number ? dsl::format_number(a.number) : (a.truth ? "true" : "false");
  if (a.kind == executor::Answer::Kind::Number && !a.unit.empty()) s += " " + a.unit;
  return s;
}

void report_parse_error(const Globals& g, const ParseError& e, std::string_view text, std::string_view kind) {
  if (g.json) {
    print_json({{"error", kind}, {"message", e.what()}, {"position", e.position()}, {"expected", e.expected()}});
    return;
  }
  std::cerr << "error: " << e.what() << " (at position " << e.position() << ")\n";
  std::cerr << "  " << text << "\n  " << std::string(std::min(e.position(), text.size()), ' ') << "^\n";
  if (!e.expected().empty()) {
    std::cerr << "expected one of:";
    for (const auto& x : e.expected()) std::cerr << ' ' << x;
    std::cerr << '\n';
  }
}

void report_error(const Globals& g, std::string_view kind, const std::string& message) {
  if (g.json)
    print_json({{"error", kind}, {"message", message}});
  else
    std::cerr << "error: " << message << '\n';
}

/// Parses program text, reporting failures; nullopt means exit 3.
std::optional<dsl::Program> parse_program(const Globals& g, const std::string& text) {
  try {
    return dsl::parse(text);
  } catch (const dsl::ValidationError& e) {
    report_parse_error(g, e, text, "ValidationError");
  } catch (const ParseError& e) {
    report_parse_error(g, e, text, "SyntaxError");
  }
  return std::nullopt;
}

ordered_json program_json(const dsl::Program& p) {
  ordered_json clauses = ordered_json::array();
  for (const auto& c : p.run.clauses)
    clauses.push_back({{"kind", dsl::name(c.kind)}, {"param", boxmodel::name(c.param)}, {"value", c.value}});
  return {{"program", dsl::print_program(p)},
          {"query", dsl::name(p.query)},
          {"clauses", clauses},
          {"variable", boxmodel::name(p.variable)}};
}

void write_series_csv(const std::string& path, const boxmodel::RunOutput& run) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << "step,time_days";
  for (auto v : boxmodel::kAllVariables) out << ',' << boxmodel::name(v);
  out << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < run.size(); ++i) {
    out << i << ',' << static_cast<double>(i) * run.params.dt / 86400.0;
    for (auto v : boxmodel::kAllVariables) out << ',' << run.series(v)[i];
    out << '\n';
  }
}

int cmd_gen(const Globals& g, datagen::GenConfig cfg, double test_frac, const std::string& out) {
  if (auto problems = datagen::check(cfg); !problems.empty()) throw UsageError(problems.front());
  const auto d = datagen::build_dataset(cfg, test_frac, g.constants());
  datagen::write_dataset(out, d);
  if (g.json)
    print_json({{"out", out}, {"train", d.train.size()}, {"test", d.test.size()}});
  else
    std::cout << "wrote " << d.train.size() << " train and " << d.test.size() << " test examples to " << out << '\n';
  return kExitOk;
}

int cmd_split(const Globals& g, const std::string& in, double test_frac, std::uint64_t seed, const std::string& out) {
  std::vector<datagen::DatasetExample> examples;
  try {
    examples = datagen::read_jsonl(in);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  auto parts = datagen::split(std::move(examples), test_frac, seed);
  std::filesystem::create_directories(out);
  datagen::write_jsonl(std::filesystem::path(out) / "train.jsonl", parts.train);
  datagen::write_jsonl(std::filesystem::path(out) / "test.jsonl", parts.test);
  if (g.json)
    print_json({{"out", out}, {"train", parts.train.size()}, {"test", parts.test.size()}});
  else
    std::cout << "wrote " << parts.train.size() << " train and " << parts.test.size() << " test examples to " << out
              << '\n';
  return kExitOk;
}

int cmd_parse(const Globals& g, const std::string& arg) {
  const auto text = read_argument(arg);
  auto p = parse_program(g, text);
  if (!p) return kExitParse;
  if (g.json)
    print_json(program_json(*p));
  else
    std::cout << dsl::print_program(*p) << '\n';
  return kExitOk;
}

int cmd_run(const Globals& g, const std::string& arg, const std::string& series) {
  const auto text = read_argument(arg);
  auto p = parse_program(g, text);
  if (!p) return kExitParse;
  const auto ex = executor::execute_full(*p, g.constants());
  if (!series.empty()) write_series_csv(series, ex.run);
  if (g.json)
    print_json({{"program", dsl::print_program(*p)}, {"answer", executor::to_json(ex.answer)},
                {"params_used", executor::to_json(ex.run.params)}});
  else
    print_json(executor::to_json(ex.answer));
  return kExitOk;
}

int cmd_ask(const Globals& g, const std::string& arg) {
  const auto question = read_argument(arg);
  const auto m = qforms::match_question(question);
  const auto answer = executor::execute(m.program, g.constants());
  if (g.json) {
    print_json({{"question", question},
                {"form_id", m.form_id},
                {"program", dsl::print_program(m.program)},
                {"answer", executor::to_json(answer)}});
  } else {
    std::cout << "program: " << dsl::print_program(m.program) << '\n' << "answer: " << describe(answer) << '\n';
    for (const auto& w : answer.warnings) std::cout << "warning: " << w << '\n';
  }
  return kExitOk;
}

int cmd_eval(const Globals& g, const std::string& path, const std::string& granularity, const std::string& norm,
             const std::string& out_dir) {
  std::vector<metrics::PredictionRecord> records;
  try {
    records = metrics::read_predictions(path);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto report = metrics::evaluate(records,
                                        granularity == "char" ? metrics::Granularity::Character
                                                              : metrics::Granularity::Token,
                                        norm == "yujian-bo" ? metrics::Normalization::YujianBo
                                                            : metrics::Normalization::MaxLength);
  const auto j = metrics::to_json(report);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    std::ofstream(dir / "report.json", std::ios::binary) << j.dump(2) << '\n';
    std::ofstream(dir / "cdf.csv", std::ios::binary) << metrics::cdf_csv(report);
    std::ofstream(dir / "forms.csv", std::ios::binary) << metrics::forms_csv(report);
  }
  if (g.json) {
    print_json(j);
    return kExitOk;
  }
  std::cout << "granularity " << metrics::name(report.granularity) << ", normalization "
            << metrics::name(report.normalization) << '\n';
  for (const auto& [d, s] : report.by_direction)
    std::cout << metrics::name(d) << ": mean " << s.mean << " stddev " << s.stddev << " (n=" << s.count << ")\n";
  for (const auto& [f, s] : report.ptq_by_form)
    std::cout << "  PTQ form " << f << ": mean " << s.mean << " stddev " << s.stddev << " (n=" << s.count << ")\n";
  if (!report.ptq_by_form.empty())
    std::cout << "PTQ unweighted per-form mean: " << report.ptq_unweighted_form_mean << '\n';
  return kExitOk;
}

int cmd_serve(const Globals& g, const std::string& host, int port, bool dev, const std::string& vocab_path) {
  auto config = service::default_config();
  config.constants = g.constants();
  config.adapter = service::adapter_from_env();
  config.cors = dev;
  if (!vocab_path.empty()) {
    try {
      config.vocab = textcodec::Vocab::load(vocab_path);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  const service::Service svc(std::move(config));
  service::HttpServer server(svc);
  const int bound = server.bind(host, port);
  std::cerr << "listening on http://" << host << ':' << bound
            << (svc.config().adapter ? " (model adapter configured)" : " (reference engine only)") << std::endl;
  server.run();
  return kExitOk;
}

int default_port() {
  if (const char* p = std::getenv("QAPT_PORT"); p && *p) {
    try {
      return std::stoi(p);
    } catch (const std::exception&) {
      throw UsageError(std::string("QAPT_PORT is not a port number: ") + p);
    }
  }
  return 8080;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Question/program toolkit for the four-box AMOC model", "qapt"};
  app.require_subcommand(1);
  Globals g;
  app.add_flag("--json", g.json, "Machine-readable JSON on stdout");
  app.add_option("--constants", g.constants_path, "Box-model constants file (key=value); overrides QAPT_CONSTANTS");

  datagen::GenConfig gen_cfg;
  double gen_test_frac = 0.1;
  std::string gen_out;
  bool no_balance = false;
  auto* gen = app.add_subcommand("gen", "Generate train/test JSON Lines, manifest and vocab");
  gen->add_option("--n", gen_cfg.n_examples, "Number of examples")->required()->check(CLI::Range(10ul, 100000000ul));
  gen->add_option("--seed", gen_cfg.seed, "Random seed")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--test-frac", gen_test_frac, "Held-out fraction")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--noise", gen_cfg.noise_rel, "Relative value noise half-width");
  gen->add_option("--threads", gen_cfg.threads, "Worker threads (0 = all cores)");
  gen->add_flag("--execute", gen_cfg.execute_answers, "Attach executed answers");
  gen->add_flag("--no-balance", no_balance, "Keep the raw form mix in the training split");

  std::string split_in, split_out;
  double split_frac = 0.1;
  std::uint64_t split_seed = 0;
  auto* split = app.add_subcommand("split", "Split a JSON Lines dataset into deduplicated train/test files");
  split->add_option("--in", split_in, "Input JSON Lines file")->required();
  split->add_option("--test-frac", split_frac, "Held-out fraction")->check(CLI::Range(0.0, 1.0));
  split->add_option("--seed", split_seed, "Random seed")->required();
  split->add_option("--out", split_out, "Output directory")->required();

  std::string program_arg;
  auto* parse = app.add_subcommand("parse", "Parse a program and print its canonical form");
  parse->add_option("program", program_arg, "Program text, or - for stdin")->required();

  std::string run_arg, series_path;
  auto* run = app.add_subcommand("run", "Execute a program and print its answer");
  run->add_option("program", run_arg, "Program text, or - for stdin")->required();
  run->add_option("--series", series_path, "Write every series of the run as CSV");

  std::string question_arg;
  auto* ask = app.add_subcommand("ask", "Translate a question with the reference matcher and answer it");
  ask->add_option("question", question_arg, "Question text, or - for stdin")->required();

  std::string eval_path, granularity = "token", normalization = "max", eval_out;
  auto* eval = app.add_subcommand("eval", "Score a predictions file");
  eval->add_option("predictions", eval_path, "Predictions JSON Lines")->required();
  eval->add_option("--granularity", granularity, "token or char")->check(CLI::IsMember({"token", "char"}));
  eval->add_option("--normalization", normalization, "max or yujian-bo")->check(CLI::IsMember({"max", "yujian-bo"}));
  eval->add_option("--out", eval_out, "Directory for report.json, cdf.csv and forms.csv");

  std::string host = "127.0.0.1", vocab_path;
  int port = -1;
  bool dev = false;
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (default QAPT_PORT or 8080)")->check(CLI::Range(0, 65535));
  serve->add_flag("--dev", dev, "Send permissive cross-origin headers");
  serve->add_option("--vocab", vocab_path, "Vocab file for the model adapter");

  for (auto* sub : {gen, split, parse, run, ask, eval, serve}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      gen_cfg.balance = !no_balance;
      return cmd_gen(g, gen_cfg, gen_test_frac, gen_out);
    }
    if (*split) return cmd_split(g, split_in, split_frac, split_seed, split_out);
    if (*parse) return cmd_parse(g, program_arg);
    if (*run) return cmd_run(g, run_arg, series_path);
    if (*ask) return cmd_ask(g, question_arg);
    if (*eval) return cmd_eval(g, eval_path, granularity, normalization, eval_out);
    if (*serve) return cmd_serve(g, host, port >= 0 ? port : default_port(), dev, vocab_path);
  } catch (const UsageError& e) {
    report_error(g, "UsageError", e.what());
    return kExitUsage;
  } catch (const NoMatch& e) {
    report_error(g, "NoMatch", e.what());
    return kExitParse;
  } catch (const ParseError& e) {
    report_error(g, "ParseError", e.what());
    return kExitParse;
  } catch (const InvalidParams& e) {
    report_error(g, "InvalidParams", e.what());
    return kExitExec;
  } catch (const NumericalBlowup& e) {
    report_error(g, "NumericalBlowup", e.what());
    return kExitExec;
  } catch (const std::exception& e) {
    report_error(g, "Error", e.what());
    return kExitExec;
  }
  return kExitUsage;
}
