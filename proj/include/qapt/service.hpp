#pragma once

#include "qapt/boxmodel.hpp"
#include "qapt/error.hpp"
#include "qapt/textcodec.hpp"

#include <json.hpp>

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace qapt::service {

/// Status code plus JSON body; handlers never throw.
struct Response {
  int status = 200;
  nlohmann::ordered_json body;
};

/// The model endpoint could not be reached or answered with a non-200 status.
class AdapterUnavailable : public Error {
public:
  using Error::Error;
};

/// The model endpoint answered with a body outside the protocol.
class AdapterProtocolError : public Error {
public:
  using Error::Error;
};

/// A trained translator behind POST /predict.
class ModelAdapter {
public:
  virtual ~ModelAdapter() = default;
  /// direction is "QTP" or "PTQ". Must be safe to call concurrently.
  virtual textcodec::TokenSequence predict(std::string_view direction, const textcodec::TokenSequence& input) = 0;
};

/// {"direction": ..., "tokens": [ids], "values": [...]}
nlohmann::ordered_json predict_request(std::string_view direction, const textcodec::TokenSequence& input);
/// Reads the same shape back. Throws AdapterProtocolError.
textcodec::TokenSequence predict_response(const nlohmann::json& j);

class HttpModelAdapter : public ModelAdapter {
public:
  /// base_url such as "http://127.0.0.1:9000" or "http://host:9000/prefix".
  explicit HttpModelAdapter(std::string base_url, double timeout_seconds = 30.0);
  textcodec::TokenSequence predict(std::string_view direction, const textcodec::TokenSequence& input) override;

private:
  std::string origin_;
  std::string path_;
  double timeout_;
};

/// Adapter for QAPT_MODEL_URL, or null when it is unset or empty.
std::shared_ptr<ModelAdapter> adapter_from_env();

/// Indices round(k*(n-1)/(m-1)) for k in [0, m) with m = min(n, max_points);
/// always keeps the first and last index.
std::vector<std::size_t> downsample_indices(std::size_t n, std::size_t max_points);

struct Config {
  std::shared_ptr<ModelAdapter> adapter;  // null = reference engine only
  textcodec::Vocab vocab;
  boxmodel::Constants constants = boxmodel::default_constants();
  std::size_t max_points = 2000;
  bool cors = false;  // permissive cross-origin headers for a dev console
};

/// The default vocab is built from the form registry.
Config default_config();

class Service {
public:
  explicit Service(Config config);

  /// {question, engine?: "reference"|"model", fallback?: bool}
  Response translate(std::string_view body) const;
  /// {program}
  Response execute(std::string_view body) const;
  /// {question, engine?, fallback?}
  Response qa(std::string_view body) const;
  Response forms() const;
  Response health() const;

  const Config& config() const { return config_; }

private:
  Config config_;
};

/// cpp-httplib server exposing a Service.
class HttpServer {
public:
  explicit HttpServer(const Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port; throws Error on failure.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind.
  void run();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qapt::service
