#include <doctest.h>

#include "convo/error.hpp"
#include "convo/llm_client.hpp"

using namespace convo;

TEST_SUITE("llm_client") {
  TEST_CASE("payload carries nucleus sampling and the token cap only") {
    SamplingParams s;
    s.model = "llama-2-13b-chat";
    const auto p = chat_payload({{"system", "sys"}, {"user", "hi"}}, s);
    CHECK(p["top_p"] == 0.9);
    CHECK(p["max_tokens"] == 500);
    CHECK(p["model"] == "llama-2-13b-chat");
    CHECK_FALSE(p.contains("temperature"));
    REQUIRE(p["messages"].size() == 2);
    CHECK(p["messages"][0]["role"] == "system");
  }

  TEST_CASE("reply content extraction") {
    CHECK(chat_reply_content(R"({"choices":[{"message":{"role":"assistant","content":"ok"}}]})") == std::string("ok"));
    CHECK_FALSE(chat_reply_content("{}"));
    CHECK_FALSE(chat_reply_content("not json"));
  }

  TEST_CASE("url parsing") {
    const HttpUrl u = HttpUrl::parse("http://localhost:8080/v1/chat/completions");
    CHECK(u.host == "localhost");
    CHECK(u.port == 8080);
    CHECK(u.path == "/v1/chat/completions");
    CHECK(HttpUrl::parse("http://example.org").port == 80);
    CHECK_THROWS_AS(HttpUrl::parse("ftp://x"), Error);
  }

  TEST_CASE("mock endpoint echoing the template") {
    MockScript script;
    script.default_reply = "output = [\n{\n\"entity\": {entity},\n\"promoted_actions\": {action},\n\"emotions\": {emotion}\n},\n...\n]";
    MockLlmServer server(script);
    const LlmClient client(std::make_shared<HttpChatTransport>(server.chat_url(), "", std::chrono::milliseconds(5000)),
                           SamplingParams{}, RetryPolicy{0, std::chrono::milliseconds(1)});
    const ChatResult r = client.complete({{"user", "anything"}});
    REQUIRE(r.ok);
    CHECK(r.content == script.default_reply);
    CHECK(server.request_count() == 1);
  }

  TEST_CASE("rules match the last user message") {
    MockScript script = MockScript::from_json(
        {{"rules", {{{"match", "emotions"}, {"reply", "E"}}, {{"match", "entities"}, {"reply", "N"}}}}});
    auto transport = std::make_shared<ScriptedTransport>(script);
    const LlmClient client(transport, SamplingParams{}, RetryPolicy{0, std::chrono::milliseconds(1)});
    CHECK(client.complete({{"user", "list entities"}}).content == "N");
    CHECK(client.complete({{"user", "list entities"}, {"assistant", "N"}, {"user", "now emotions"}}).content == "E");
    CHECK(client.complete({{"user", "other"}}).content == "No agenda");
    CHECK(transport->requests().size() == 3);
  }

  TEST_CASE("unreachable endpoint with retry=2 makes exactly three attempts") {
    const LlmClient client(std::make_shared<HttpChatTransport>("http://127.0.0.1:9/v1/chat/completions", "",
                                                               std::chrono::milliseconds(300)),
                           SamplingParams{}, RetryPolicy{2, std::chrono::milliseconds(1)});
    const ChatResult r = client.complete({{"user", "hi"}});
    CHECK_FALSE(r.ok);
    CHECK(r.attempts == 3);
    CHECK_FALSE(r.error.empty());
  }

  TEST_CASE("transient 503 is retried, 400 is not") {
    MockScript flaky;
    flaky.fail_first = 1;
    flaky.default_reply = "fine";
    const LlmClient retrying(std::make_shared<ScriptedTransport>(flaky), SamplingParams{},
                             RetryPolicy{2, std::chrono::milliseconds(1)});
    const ChatResult r = retrying.complete({{"user", "hi"}});
    CHECK(r.ok);
    CHECK(r.attempts == 2);

    MockScript bad = MockScript::from_json({{"rules", {{{"match", "hi"}, {"reply", "no"}, {"status", 400}}}}});
    const LlmClient client(std::make_shared<ScriptedTransport>(bad), SamplingParams{},
                           RetryPolicy{2, std::chrono::milliseconds(1)});
    const ChatResult r2 = client.complete({{"user", "hi"}});
    CHECK_FALSE(r2.ok);
    CHECK(r2.attempts == 1);
  }
}
