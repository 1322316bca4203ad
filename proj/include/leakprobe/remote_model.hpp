#pragma once

#include "leakprobe/model.hpp"

#include "json.hpp"

#include <chrono>
#include <string>

namespace leakprobe {

struct RemoteOptions {
  std::string base_url; // e.g. "http://127.0.0.1:8000"
  std::chrono::milliseconds timeout{60'000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_factor = 2.0;
};

// Wire-protocol request bodies, exposed for conformance tests.
nlohmann::json complete_request(std::string_view prompt, const DecodingConfig& config);
nlohmann::json tokenize_request(std::string_view text);

// Validates a /v1/complete response against the request it answers. Throws
// ProtocolError on missing fields, a token count above the budget, or a
// decoding echo that differs from what was asked for.
CompletionResult parse_complete_response(const nlohmann::json& response, const DecodingConfig& config);
Tokenization parse_tokenize_response(const nlohmann::json& response);
ModelMeta parse_meta_response(const nlohmann::json& response);

// Client for an inference service speaking the JSON-over-HTTP protocol.
// Transport failures (connection errors, timeouts, 429, 5xx) are retried with
// exponential backoff; once retries are exhausted a TransportError escapes.
// A 400 or malformed reply throws ProtocolError immediately.
class RemoteModel final : public LanguageModel {
public:
  explicit RemoteModel(RemoteOptions options);

  ModelMeta meta() const override;
  Tokenization tokenize(std::string_view text) const override;
  CompletionResult complete(std::string_view prompt, const DecodingConfig& config) const override;

private:
  nlohmann::json request(const std::string& method, const std::string& path, const nlohmann::json* body) const;

  RemoteOptions options_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

} // namespace leakprobe
