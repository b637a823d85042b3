/// @file remote.hpp
/// @brief Backend abstractions for chat completion and embeddings, plus an
/// HTTP client for OpenAI-compatible endpoints.

#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

namespace divaudit {

struct ChatMessage {
  std::string role;  // "system" or "user"
  std::string content;
};

/// Produces the assistant reply for a list of messages. Implementations
/// throw BackendError on transport failure and must be safe to call
/// concurrently.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

/// Returns one raw vector per input string.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& inputs) = 0;
};

/// Name of the environment variable that carries the bearer token.
inline constexpr const char* kApiKeyEnv = "AUDITOR_API_KEY";

/// Reads kApiKeyEnv; throws ConfigError when it is unset or empty.
std::string api_key_from_env();

struct HttpEndpoint {
  std::string url;  // full POST URL, e.g. http://host:8000/v1/chat/completions
  std::string model;
  std::string api_key;
  double temperature = 0.0;
  int max_retries = 2;  // transport retries, on top of the first attempt
  std::chrono::milliseconds timeout{60000};
  std::chrono::milliseconds backoff{200};
};

/// POST {"model","messages","temperature"}; reads choices[0].message.content.
class HttpChatClient : public CompletionBackend {
 public:
  explicit HttpChatClient(HttpEndpoint endpoint);
  std::string complete(const std::vector<ChatMessage>& messages) override;

  const HttpEndpoint& endpoint() const { return endpoint_; }

 private:
  HttpEndpoint endpoint_;
};

/// POST {"model","input":[...]}; reads data[i].embedding.
class HttpEmbeddingClient : public EmbeddingBackend {
 public:
  explicit HttpEmbeddingClient(HttpEndpoint endpoint);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& inputs) override;

 private:
  HttpEndpoint endpoint_;
};

namespace detail {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url);

// Request body builders and reply readers, exposed for wire-format tests.
std::string chat_request_body(const std::string& model, const std::vector<ChatMessage>& messages,
                              double temperature);
std::string chat_reply_content(const std::string& body);
std::string embedding_request_body(const std::string& model, const std::vector<std::string>& inputs);
std::vector<std::vector<double>> embedding_reply_vectors(const std::string& body);

}  // namespace detail
}  // namespace divaudit
