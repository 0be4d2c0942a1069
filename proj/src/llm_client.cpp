#include "convo/llm_client.hpp"

#include <fstream>
#include <sstream>

#include "httplib.h"

#include "convo/error.hpp"

namespace convo {

using nlohmann::json;

HttpUrl HttpUrl::parse(const std::string& url) {
  HttpUrl u;
  std::string rest = url;
  if (const auto p = rest.find("://"); p != std::string::npos) {
    u.scheme = rest.substr(0, p);
    rest = rest.substr(p + 3);
  }
  if (u.scheme != "http" && u.scheme != "https") throw Error("unsupported URL scheme in " + url, "characterize");
  u.port = u.scheme == "https" ? 443 : 80;
  const auto slash = rest.find('/');
  std::string hostport = rest.substr(0, slash);
  u.path = slash == std::string::npos ? "/" : rest.substr(slash);
  if (const auto colon = hostport.rfind(':'); colon != std::string::npos) {
    u.port = std::stoi(hostport.substr(colon + 1));
    hostport = hostport.substr(0, colon);
  }
  if (hostport.empty()) throw Error("URL has no host: " + url, "characterize");
  u.host = hostport;
  return u;
}

std::string HttpUrl::origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

HttpReply http_post_json(const HttpUrl& url, const std::string& body, const std::string& bearer_token,
                         std::chrono::milliseconds timeout) {
  HttpReply out;
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (url.scheme == "https") {
    out.error = "https endpoints need a build with OpenSSL";
    return out;
  }
#endif
  httplib::Client cli(url.origin());
  const auto secs = static_cast<time_t>(timeout.count() / 1000);
  const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
  auto res = cli.Post(url.path, headers, body, "application/json");
  if (!res) {
    out.error = httplib::to_string(res.error());
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  return out;
}

json chat_payload(const std::vector<ChatMessage>& messages, const SamplingParams& sampling) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", sampling.model},
          {"messages", std::move(msgs)},
          {"top_p", sampling.top_p},
          {"max_tokens", sampling.max_new_tokens},
          {"stream", false}};
}

std::optional<std::string> chat_reply_content(const std::string& body) {
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const auto& first = (*choices)[0];
  if (first.contains("message") && first["message"].contains("content") && first["message"]["content"].is_string()) {
    return first["message"]["content"].get<std::string>();
  }
  if (first.contains("text") && first["text"].is_string()) return first["text"].get<std::string>();
  return std::nullopt;
}

HttpChatTransport::HttpChatTransport(std::string endpoint, std::string api_key, std::chrono::milliseconds timeout)
    : url_(HttpUrl::parse(endpoint)), api_key_(std::move(api_key)), timeout_(timeout) {}

HttpReply HttpChatTransport::send(const json& payload) {
  return http_post_json(url_, payload.dump(), api_key_, timeout_);
}

MockScript MockScript::from_json(const json& j) {
  MockScript s;
  for (const auto& r : j.value("rules", json::array())) {
    s.rules.push_back({r.value("match", std::string{}), r.value("reply", std::string{}), r.value("status", 200)});
  }
  s.default_reply = j.value("default", s.default_reply);
  s.fail_first = j.value("fail_first", 0);
  return s;
}

MockScript MockScript::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read mock LLM script " + path, "characterize");
  return from_json(json::parse(in));
}

HttpReply scripted_reply(const MockScript& script, const json& payload, int request_index) {
  HttpReply out;
  if (request_index < script.fail_first) {
    out.status = 503;
    out.body = R"({"error":"scripted failure"})";
    return out;
  }
  std::string last_user;
  for (const auto& m : payload.value("messages", json::array())) {
    if (m.value("role", "") == "user") last_user = m.value("content", "");
  }
  std::string reply = script.default_reply;
  int status = 200;
  for (const auto& r : script.rules) {
    if (last_user.find(r.match) != std::string::npos) {
      reply = r.reply;
      status = r.status;
      break;
    }
  }
  out.status = status;
  if (status != 200) {
    out.body = json{{"error", reply}}.dump();
    return out;
  }
  out.body = json{{"object", "chat.completion"},
                  {"model", payload.value("model", "")},
                  {"choices", json::array({{{"index", 0},
                                            {"finish_reason", "stop"},
                                            {"message", {{"role", "assistant"}, {"content", reply}}}}})}}
                 .dump();
  return out;
}

HttpReply ScriptedTransport::send(const json& payload) {
  int index = 0;
  {
    std::lock_guard<std::mutex> lock(mu_);
    index = static_cast<int>(requests_.size());
    requests_.push_back(payload);
  }
  return scripted_reply(script_, payload, index);
}

std::vector<json> ScriptedTransport::requests() const {
  std::lock_guard<std::mutex> lock(mu_);
  return requests_;
}

namespace {

// Deterministic bag-of-bytes vector for the mock embeddings endpoint.
std::vector<double> mock_embedding(const std::string& text, int dim) {
  std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h = (h ^ c) * 1099511628211ULL;
    v[static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim))] += 1.0;
  }
  return v;
}

}  // namespace

MockLlmServer::MockLlmServer(MockScript script, int port)
    : script_(std::move(script)), server_(std::make_unique<httplib::Server>()) {
  server_->Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    const int index = count_.fetch_add(1);
    const json payload = json::parse(req.body, nullptr, false);
    if (payload.is_discarded()) {
      res.status = 400;
      res.set_content(R"({"error":"bad json"})", "application/json");
      return;
    }
    const auto reply = scripted_reply(script_, payload, index);
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
  server_->Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
    count_.fetch_add(1);
    const json payload = json::parse(req.body, nullptr, false);
    if (payload.is_discarded() || !payload.contains("input")) {
      res.status = 400;
      return;
    }
    json data = json::array();
    int i = 0;
    for (const auto& t : payload["input"]) {
      data.push_back({{"index", i++}, {"embedding", mock_embedding(t.get<std::string>(), 16)}});
    }
    res.set_content(json{{"data", data}}.dump(), "application/json");
  });
  if (port == 0) {
    port_ = server_->bind_to_any_port("127.0.0.1");
  } else {
    if (!server_->bind_to_port("127.0.0.1", port)) throw Error("cannot bind mock LLM server to port " + std::to_string(port));
    port_ = port;
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

MockLlmServer::~MockLlmServer() { stop(); }

void MockLlmServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable() && thread_.get_id() != std::this_thread::get_id()) thread_.join();
}

void MockLlmServer::wait() {
  if (thread_.joinable()) thread_.join();
}

std::string MockLlmServer::base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

std::string MockLlmServer::chat_url() const { return base_url() + "/chat/completions"; }

LlmClient::LlmClient(std::shared_ptr<ChatTransport> transport, SamplingParams sampling, RetryPolicy retry)
    : transport_(std::move(transport)), sampling_(std::move(sampling)), retry_(retry) {
  if (!transport_) throw Error("LLM client needs a transport", "characterize");
}

ChatResult LlmClient::complete(const std::vector<ChatMessage>& messages) const {
  ChatResult out;
  const json payload = chat_payload(messages, sampling_);
  auto delay = retry_.backoff;
  for (int attempt = 0; attempt <= retry_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    ++out.attempts;
    const HttpReply reply = transport_->send(payload);
    if (reply.status == 200) {
      if (auto content = chat_reply_content(reply.body)) {
        out.ok = true;
        out.content = std::move(*content);
        return out;
      }
      out.error = "response has no choices[0].message.content";
      return out;
    }
    out.error = reply.status == 0 ? "transport error: " + reply.error
                                  : "HTTP " + std::to_string(reply.status) + ": " + reply.body.substr(0, 200);
    if (!reply.retryable()) return out;
  }
  return out;
}

}  // namespace convo
