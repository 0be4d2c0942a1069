#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

namespace httplib {
class Server;
}

namespace convo {

struct HttpUrl {
  std::string scheme = "http";
  std::string host;
  int port = 80;
  std::string path = "/";

  static HttpUrl parse(const std::string& url);
  std::string origin() const;
};

/// status 0 means the request never produced an HTTP response.
struct HttpReply {
  int status = 0;
  std::string body;
  std::string error;

  bool retryable() const noexcept { return status == 0 || status == 429 || status >= 500; }
};

HttpReply http_post_json(const HttpUrl& url, const std::string& body, const std::string& bearer_token,
                         std::chrono::milliseconds timeout);

struct ChatMessage {
  std::string role;
  std::string content;
};

struct SamplingParams {
  std::string model;
  double top_p = 0.9;
  int max_new_tokens = 500;
};

/// Chat-completion payload: model, messages, top_p and max_tokens. No
/// temperature field is sent; sampling is nucleus-only.
nlohmann::json chat_payload(const std::vector<ChatMessage>& messages, const SamplingParams& sampling);

/// Extracts choices[0].message.content from a chat-completion response body.
std::optional<std::string> chat_reply_content(const std::string& body);

/// Sends one chat-completion payload.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual HttpReply send(const nlohmann::json& payload) = 0;
};

class HttpChatTransport final : public ChatTransport {
 public:
  HttpChatTransport(std::string endpoint, std::string api_key, std::chrono::milliseconds timeout);
  HttpReply send(const nlohmann::json& payload) override;

 private:
  HttpUrl url_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

/// Reply rules for the mock endpoint. The first rule whose `match` substring
/// occurs in the last user message wins; `status` other than 200 simulates
/// server errors.
///
///   {"rules": [{"match": "Combine the entities", "reply": "output = [...]"}],
///    "default": "ok", "fail_first": 0}
struct MockScript {
  struct Rule {
    std::string match;
    std::string reply;
    int status = 200;
  };
  std::vector<Rule> rules;
  std::string default_reply = "No agenda";
  /// The first `fail_first` requests get HTTP 503.
  int fail_first = 0;

  static MockScript from_json(const nlohmann::json& j);
  static MockScript load(const std::string& path);
};

/// Answers a chat payload from a script, returning an OpenAI-shaped body.
HttpReply scripted_reply(const MockScript& script, const nlohmann::json& payload, int request_index);

/// In-process transport that serves replies from a MockScript and records payloads.
class ScriptedTransport final : public ChatTransport {
 public:
  explicit ScriptedTransport(MockScript script) : script_(std::move(script)) {}
  HttpReply send(const nlohmann::json& payload) override;

  std::vector<nlohmann::json> requests() const;

 private:
  MockScript script_;
  mutable std::mutex mu_;
  std::vector<nlohmann::json> requests_;
};

/// Scripted chat-completion server on 127.0.0.1 for tests and demos.
/// Serves POST /v1/chat/completions and POST /v1/embeddings.
class MockLlmServer {
 public:
  explicit MockLlmServer(MockScript script, int port = 0);
  ~MockLlmServer();
  MockLlmServer(const MockLlmServer&) = delete;
  MockLlmServer& operator=(const MockLlmServer&) = delete;

  int port() const noexcept { return port_; }
  std::string chat_url() const;
  std::string base_url() const;
  int request_count() const noexcept { return count_.load(); }
  /// Blocks until stop() is called from another thread.
  void wait();
  void stop();

 private:
  MockScript script_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> count_{0};
};

struct RetryPolicy {
  int retries = 2;
  std::chrono::milliseconds backoff{500};
};

struct ChatResult {
  bool ok = false;
  std::string content;
  int attempts = 0;
  std::string error;
};

/// Chat completion with retry: transport failures, 429 and 5xx are retried
/// with exponential backoff; other statuses fail immediately.
class LlmClient {
 public:
  LlmClient(std::shared_ptr<ChatTransport> transport, SamplingParams sampling, RetryPolicy retry);

  ChatResult complete(const std::vector<ChatMessage>& messages) const;
  const SamplingParams& sampling() const noexcept { return sampling_; }

 private:
  std::shared_ptr<ChatTransport> transport_;
  SamplingParams sampling_;
  RetryPolicy retry_;
};

}  // namespace convo
