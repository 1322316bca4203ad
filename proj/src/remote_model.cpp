#include "leakprobe/remote_model.hpp"

#include "leakprobe/errors.hpp"

#include "httplib.h"

#include <thread>

namespace leakprobe {

namespace {

bool retriable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

std::string error_text(const httplib::Result& res) {
  try {
    auto body = nlohmann::json::parse(res->body);
    if (body.contains("error") && body["error"].is_string())
      return body["error"].get<std::string>();
  } catch (const nlohmann::json::exception&) {
  }
  return res->body;
}

template <class T>
T field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw ProtocolError(std::string("response lacks '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("response field '") + key + "' has the wrong type: " + e.what());
  }
}

} // namespace

nlohmann::json complete_request(std::string_view prompt, const DecodingConfig& config) {
  return {{"prompt", prompt}, {"max_new_tokens", config.max_new_tokens}, {"decoding", decoding_to_wire(config)}};
}

nlohmann::json tokenize_request(std::string_view text) { return {{"text", text}}; }

CompletionResult parse_complete_response(const nlohmann::json& response, const DecodingConfig& config) {
  CompletionResult out;
  out.generated_text = field<std::string>(response, "text");
  out.token_count = field<int>(response, "token_count");
  out.model_id = field<std::string>(response, "model_id");
  if (out.token_count < 0 || out.token_count > config.max_new_tokens)
    throw ProtocolError("token_count " + std::to_string(out.token_count) + " outside [0, " +
                        std::to_string(config.max_new_tokens) + "]");
  auto echo = field<nlohmann::json>(response, "decoding_echo");
  if (echo != decoding_to_wire(config))
    throw ProtocolError("decoding_echo " + echo.dump() + " does not match request " +
                        decoding_to_wire(config).dump());
  return out;
}

Tokenization parse_tokenize_response(const nlohmann::json& response) {
  return Tokenization{field<std::vector<std::int64_t>>(response, "ids"), field<std::string>(response, "detokenized")};
}

ModelMeta parse_meta_response(const nlohmann::json& response) {
  return ModelMeta{field<std::string>(response, "model_id"), field<std::string>(response, "unknown_token"),
                   field<int>(response, "max_context")};
}

RemoteModel::RemoteModel(RemoteOptions options) : options_(std::move(options)) {
  const auto& url = options_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw std::invalid_argument("backend url '" + url + "' lacks a scheme");
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  if (path_start != std::string::npos) {
    path_prefix_ = url.substr(path_start);
    while (path_prefix_.ends_with('/'))
      path_prefix_.pop_back();
  }
  if (options_.max_retries < 0)
    throw std::invalid_argument("max_retries must be non-negative");
}

nlohmann::json RemoteModel::request(const std::string& method, const std::string& path,
                                    const nlohmann::json* body) const {
  auto backoff = options_.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<std::int64_t>(backoff.count() * options_.backoff_factor));
    }

    httplib::Client client(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const auto full_path = path_prefix_ + path;
    auto res = method == "GET" ? client.Get(full_path)
                               : client.Post(full_path, body->dump(), "application/json");
    if (!res) {
      last_error = method + " " + full_path + ": " + httplib::to_string(res.error());
      continue;
    }
    if (retriable_status(res->status)) {
      last_error = method + " " + full_path + ": HTTP " + std::to_string(res->status) + " " + error_text(res);
      continue;
    }
    if (res->status != 200)
      throw ProtocolError(method + " " + full_path + ": HTTP " + std::to_string(res->status) + " " + error_text(res));
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(method + " " + full_path + ": malformed JSON: " + e.what());
    }
  }
  throw TransportError(last_error + " (after " + std::to_string(options_.max_retries) + " retries)");
}

ModelMeta RemoteModel::meta() const { return parse_meta_response(request("GET", "/v1/meta", nullptr)); }

Tokenization RemoteModel::tokenize(std::string_view text) const {
  auto body = tokenize_request(text);
  return parse_tokenize_response(request("POST", "/v1/tokenize", &body));
}

CompletionResult RemoteModel::complete(std::string_view prompt, const DecodingConfig& config) const {
  config.validate();
  if (prompt.empty())
    throw std::invalid_argument("prompt must not be empty");
  auto body = complete_request(prompt, config);
  const auto started = std::chrono::steady_clock::now();
  auto result = parse_complete_response(request("POST", "/v1/complete", &body), config);
  result.latency_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  return result;
}

} // namespace leakprobe
