/// @file remote.cpp
/// @brief OpenAI-compatible HTTP clients with bounded retries.

#include "divaudit/remote.hpp"

#include <cstdlib>
#include <thread>

#ifdef DIVAUDIT_WITH_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include "divaudit/errors.hpp"

namespace divaudit {

using json = nlohmann::json;

std::string api_key_from_env() {
  const char* v = std::getenv(kApiKeyEnv);
  if (v == nullptr || *v == '\0') {
    throw ConfigError(std::string("environment variable ") + kApiKeyEnv +
                      " is required for remote backends");
  }
  return v;
}

namespace detail {

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint: not an absolute URL: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("endpoint: unsupported scheme: " + scheme);
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (out.origin.size() <= scheme_end + 3) throw ConfigError("endpoint: missing host: " + url);
  return out;
}

std::string chat_request_body(const std::string& model, const std::vector<ChatMessage>& messages,
                              double temperature) {
  nlohmann::ordered_json msgs = nlohmann::ordered_json::array();
  for (const auto& m : messages) {
    nlohmann::ordered_json msg;
    msg["role"] = m.role;
    msg["content"] = m.content;
    msgs.push_back(std::move(msg));
  }
  nlohmann::ordered_json body;
  body["model"] = model;
  body["messages"] = std::move(msgs);
  body["temperature"] = temperature;
  return body.dump();
}

std::string chat_reply_content(const std::string& body) {
  try {
    const auto j = json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed chat completion response: ") + e.what());
  }
}

std::string embedding_request_body(const std::string& model, const std::vector<std::string>& inputs) {
  nlohmann::ordered_json body;
  body["model"] = model;
  body["input"] = inputs;
  return body.dump();
}

std::vector<std::vector<double>> embedding_reply_vectors(const std::string& body) {
  try {
    const auto j = json::parse(body);
    std::vector<std::vector<double>> out;
    for (const auto& row : j.at("data")) out.push_back(row.at("embedding").get<std::vector<double>>());
    return out;
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed embedding response: ") + e.what());
  }
}

}  // namespace detail

namespace {

// Retries on transport errors and 429/5xx; other statuses fail immediately.
std::string post_with_retries(const HttpEndpoint& ep, const std::string& body) {
  const auto url = detail::parse_url(ep.url);
  std::string last_error;
  for (int attempt = 0; attempt <= ep.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(ep.backoff * (1 << (attempt - 1)));
    httplib::Client client(url.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(ep.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(ep.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers{{"Authorization", "Bearer " + ep.api_key}};
    auto res = client.Post(url.path, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return res->body;
    last_error = "HTTP " + std::to_string(res->status);
    if (res->status != 429 && res->status < 500) break;
  }
  throw BackendError(ep.url + ": " + last_error);
}

}  // namespace

HttpChatClient::HttpChatClient(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  detail::parse_url(endpoint_.url);
}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages) {
  const auto body = detail::chat_request_body(endpoint_.model, messages, endpoint_.temperature);
  return detail::chat_reply_content(post_with_retries(endpoint_, body));
}

HttpEmbeddingClient::HttpEmbeddingClient(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  detail::parse_url(endpoint_.url);
}

std::vector<std::vector<double>> HttpEmbeddingClient::embed(const std::vector<std::string>& inputs) {
  const auto body = detail::embedding_request_body(endpoint_.model, inputs);
  auto vectors = detail::embedding_reply_vectors(post_with_retries(endpoint_, body));
  if (vectors.size() != inputs.size()) {
    throw BackendError("embedding response has " + std::to_string(vectors.size()) +
                       " vectors for " + std::to_string(inputs.size()) + " inputs");
  }
  return vectors;
}

}  // namespace divaudit
