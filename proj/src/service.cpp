#include "qapt/service.hpp"

#include "qapt/dsl.hpp"
#include "qapt/executor.hpp"
#include "qapt/qforms.hpp"

#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <optional>
#include <variant>

namespace qapt::service {

using nlohmann::ordered_json;

namespace {

Response error_response(int status, std::string_view kind, const std::string& message) {
  return {status, ordered_json{{"error", kind}, {"message", message}}};
}

Response parse_error_response(const ParseError& e, std::string_view kind) {
  Response r = error_response(422, kind, e.what());
  r.body["position"] = e.position();
  r.body["expected"] = e.expected();
  return r;
}

/// Parsed body or a 400 response.
std::variant<nlohmann::json, Response> parse_body(std::string_view body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) return error_response(400, "BadRequest", "request body is not valid JSON");
  if (!j.is_object()) return error_response(400, "BadRequest", "request body must be a JSON object");
  return j;
}

std::variant<std::string, Response> required_string(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string())
    return error_response(400, "BadRequest", std::string("field '") + field + "' must be a string");
  auto s = j[field].get<std::string>();
  if (s.find_first_not_of(" \t\r\n") == std::string::npos)
    return error_response(400, "BadRequest", std::string("field '") + field + "' must not be empty");
  return s;
}

struct Translation {
  dsl::Program program;
  std::string source;
  std::optional<int> form_id;
  std::vector<std::string> warnings;
};

std::variant<Translation, Response> reference_translation(const std::string& question,
                                                          std::vector<std::string> warnings) {
  auto m = qforms::try_match(question);
  if (!m) return error_response(422, "NoMatch", "question does not match any known form");
  return Translation{std::move(m->program), "reference", m->form_id, std::move(warnings)};
}

std::variant<Translation, Response> translate_impl(const Config& config, const nlohmann::json& req) {
  auto question = required_string(req, "question");
  if (auto* r = std::get_if<Response>(&question)) return std::move(*r);
  const std::string& q = std::get<std::string>(question);

  std::string engine = "reference";
  if (req.contains("engine")) {
    if (!req["engine"].is_string()) return error_response(400, "BadRequest", "field 'engine' must be a string");
    engine = req["engine"].get<std::string>();
  }
  bool fallback = true;
  if (req.contains("fallback")) {
    if (!req["fallback"].is_boolean()) return error_response(400, "BadRequest", "field 'fallback' must be a boolean");
    fallback = req["fallback"].get<bool>();
  }
  if (engine == "reference") return reference_translation(q, {});
  if (engine != "model")
    return error_response(400, "BadRequest", "engine must be \"reference\" or \"model\", got \"" + engine + "\"");

  if (!config.adapter) {
    if (!fallback) return error_response(502, "ModelUnavailable", "no model adapter is configured");
    return reference_translation(q, {"no model adapter is configured; used the reference engine"});
  }

  textcodec::TokenSequence out;
  try {
    out = config.adapter->predict("QTP", textcodec::encode(q, config.vocab, textcodec::TextKind::Question));
  } catch (const Error& e) {
    if (!fallback) return error_response(502, "ModelUnavailable", e.what());
    return reference_translation(q, {std::string("model adapter failed (") + e.what() + "); used the reference engine"});
  }

  auto decoded = textcodec::decode(out, config.vocab, textcodec::TextKind::Program);
  try {
    dsl::Program p = dsl::parse(decoded.text);
    return Translation{std::move(p), "model", std::nullopt, std::move(decoded.warnings)};
  } catch (const ParseError& e) {
    if (!fallback) return parse_error_response(e, "ModelOutputInvalid");
    auto warnings = std::move(decoded.warnings);
    warnings.push_back("model output \"" + decoded.text + "\" is not a valid program (" + e.what() +
                       "); used the reference engine");
    return reference_translation(q, std::move(warnings));
  }
}

void put_translation(ordered_json& j, const Translation& t) {
  j["program"] = dsl::print_program(t.program);
  j["source"] = t.source;
  if (t.form_id) j["form_id"] = *t.form_id;
  j["warnings"] = t.warnings;
}

/// Adds answer, series and params_used, or returns an error response.
std::optional<Response> put_execution(ordered_json& j, const Config& config, const dsl::Program& program) {
  try {
    auto ex = executor::execute_full(program, config.constants);
    j["answer"] = executor::to_json(ex.answer);

    const auto idx = downsample_indices(ex.run.size(), config.max_points);
    ordered_json series;
    std::vector<std::size_t> steps(idx.begin(), idx.end());
    series["step"] = steps;
    std::vector<double> days;
    for (std::size_t i : idx) days.push_back(static_cast<double>(i) * ex.run.params.dt / 86400.0);
    series["time_days"] = days;
    const auto add = [&](boxmodel::Variable v) {
      const auto s = ex.run.series(v);
      std::vector<double> values;
      values.reserve(idx.size());
      for (std::size_t i : idx) values.push_back(s[i]);
      series[std::string(boxmodel::name(v))] = std::move(values);
    };
    add(boxmodel::Variable::Overturning);
    if (program.variable != boxmodel::Variable::Overturning) add(program.variable);
    j["series"] = std::move(series);
    j["params_used"] = executor::to_json(ex.run.params);
    return std::nullopt;
  } catch (const ParseError& e) {
    return parse_error_response(e, "ValidationError");
  } catch (const InvalidParams& e) {
    return error_response(422, "InvalidParams", e.what());
  } catch (const NumericalBlowup& e) {
    Response r = error_response(500, "NumericalBlowup", e.what());
    r.body["step"] = e.step();
    return r;
  }
}

template <class Fn>
Response guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return error_response(500, "InternalError", e.what());
  }
}

}  // namespace

ordered_json predict_request(std::string_view direction, const textcodec::TokenSequence& input) {
  return ordered_json{{"direction", direction}, {"tokens", input.ids}, {"values", input.values}};
}

textcodec::TokenSequence predict_response(const nlohmann::json& j) {
  try {
    textcodec::TokenSequence seq;
    seq.ids = j.at("tokens").get<std::vector<std::int32_t>>();
    if (j.contains("values")) seq.values = j.at("values").get<std::vector<double>>();
    return seq;
  } catch (const nlohmann::json::exception& e) {
    throw AdapterProtocolError(std::string("model response does not follow the predict protocol: ") + e.what());
  }
}

HttpModelAdapter::HttpModelAdapter(std::string base_url, double timeout_seconds) : timeout_(timeout_seconds) {
  const auto scheme = base_url.find("://");
  const auto path_start = base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  origin_ = base_url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/predict";
}

textcodec::TokenSequence HttpModelAdapter::predict(std::string_view direction, const textcodec::TokenSequence& input) {
  httplib::Client client(origin_);
  const auto secs = static_cast<time_t>(timeout_);
  const auto usecs = static_cast<time_t>((timeout_ - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  auto res = client.Post(path_, predict_request(direction, input).dump(), "application/json");
  if (!res) throw AdapterUnavailable("model adapter at " + origin_ + " is unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw AdapterUnavailable("model adapter at " + origin_ + " answered status " + std::to_string(res->status));
  auto j = nlohmann::json::parse(res->body, nullptr, false);
  if (j.is_discarded()) throw AdapterProtocolError("model adapter returned a body that is not JSON");
  return predict_response(j);
}

std::shared_ptr<ModelAdapter> adapter_from_env() {
  const char* url = std::getenv("QAPT_MODEL_URL");
  if (!url || !*url) return nullptr;
  return std::make_shared<HttpModelAdapter>(url);
}

std::vector<std::size_t> downsample_indices(std::size_t n, std::size_t max_points) {
  std::vector<std::size_t> out;
  if (n == 0) return out;
  const std::size_t m = std::min(n, std::max<std::size_t>(max_points, 2));
  if (m == n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  for (std::size_t k = 0; k < m; ++k)
    out.push_back(static_cast<std::size_t>(
        std::llround(static_cast<double>(k) * static_cast<double>(n - 1) / static_cast<double>(m - 1))));
  return out;
}

Config default_config() {
  Config c;
  c.vocab = textcodec::build_vocab(qforms::lexicon_corpus());
  return c;
}

Service::Service(Config config) : config_(std::move(config)) {}

Response Service::translate(std::string_view body) const {
  return guarded([&]() -> Response {
    auto req = parse_body(body);
    if (auto* r = std::get_if<Response>(&req)) return std::move(*r);
    auto t = translate_impl(config_, std::get<nlohmann::json>(req));
    if (auto* r = std::get_if<Response>(&t)) return std::move(*r);
    ordered_json j;
    put_translation(j, std::get<Translation>(t));
    return {200, std::move(j)};
  });
}

Response Service::execute(std::string_view body) const {
  return guarded([&]() -> Response {
    auto req = parse_body(body);
    if (auto* r = std::get_if<Response>(&req)) return std::move(*r);
    auto text = required_string(std::get<nlohmann::json>(req), "program");
    if (auto* r = std::get_if<Response>(&text)) return std::move(*r);

    dsl::Program program;
    try {
      program = dsl::parse(std::get<std::string>(text));
    } catch (const dsl::ValidationError& e) {
      return parse_error_response(e, "ValidationError");
    } catch (const ParseError& e) {
      return parse_error_response(e, "SyntaxError");
    }
    ordered_json j;
    j["program"] = dsl::print_program(program);
    if (auto err = put_execution(j, config_, program)) return std::move(*err);
    return {200, std::move(j)};
  });
}

Response Service::qa(std::string_view body) const {
  return guarded([&]() -> Response {
    auto req = parse_body(body);
    if (auto* r = std::get_if<Response>(&req)) return std::move(*r);
    auto t = translate_impl(config_, std::get<nlohmann::json>(req));
    if (auto* r = std::get_if<Response>(&t)) return std::move(*r);
    const auto& tr = std::get<Translation>(t);
    ordered_json j;
    put_translation(j, tr);
    if (auto err = put_execution(j, config_, tr.program)) return std::move(*err);
    return {200, std::move(j)};
  });
}

Response Service::forms() const {
  return guarded([] { return Response{200, qforms::registry_json()}; });
}

Response Service::health() const {
  return {200, ordered_json{{"status", "ok"}, {"model_adapter", config_.adapter != nullptr}}};
}

struct HttpServer::Impl {
  explicit Impl(const Service& s) : service(s) {}
  const Service& service;
  httplib::Server server;
};

HttpServer::HttpServer(const Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto& svr = impl_->server;
  const Service* s = &service;
  const auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  svr.Post("/api/translate", [s, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, s->translate(req.body));
  });
  svr.Post("/api/execute", [s, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, s->execute(req.body));
  });
  svr.Post("/api/qa",
           [s, reply](const httplib::Request& req, httplib::Response& res) { reply(res, s->qa(req.body)); });
  svr.Get("/api/forms", [s, reply](const httplib::Request&, httplib::Response& res) { reply(res, s->forms()); });
  svr.Get("/healthz", [s, reply](const httplib::Request&, httplib::Response& res) { reply(res, s->health()); });
  if (service.config().cors) {
    svr.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    svr.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound <= 0) throw Error("cannot bind to " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind to " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace qapt::service
