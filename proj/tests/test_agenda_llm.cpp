#include <doctest.h>

#include <random>

#include "convo/agenda_llm.hpp"
#include "convo/error.hpp"
#include "convo/llm_client.hpp"
#include "snapshot_gen.hpp"

using namespace convo;

namespace {

const char* kTemplate =
    "output = [\n{\n\"entity\": {entity},\n\"promoted_actions\": {action},\n\"emotions\": {emotion}\n},\n...\n]";

LlmClient scripted(std::shared_ptr<ScriptedTransport> t) {
  return LlmClient(std::move(t), SamplingParams{}, RetryPolicy{0, std::chrono::milliseconds(1)});
}

}  // namespace

TEST_SUITE("agenda_llm") {
  TEST_CASE("compiled-in prompts match the data files") {
    const PromptBundle def = PromptBundle::defaults();
    const PromptBundle disk = PromptBundle::load(std::string(CONVO_DATA_DIR) + "/prompts");
    CHECK(def.fingerprint() == disk.fingerprint());
    CHECK(def.output_template == kTemplate);
    CHECK(def.completion_stem == "The agenda behind this set of tweets is");
    CHECK_NOTHROW(def.validate());
  }

  TEST_CASE("turn builders") {
    const PromptBundle b = PromptBundle::defaults();
    CHECK(b.first_turn("m1\nm2") == b.prompts[0] + "\nMessages: m1\nm2");
    CHECK(b.final_turn() == b.prompts[3] + "\n" + b.output_template);
    CHECK(b.summary_turn("X").find("Messages: X") != std::string::npos);
    PromptBundle broken = b;
    broken.summary = "no slot";
    CHECK_THROWS_AS(broken.validate(), Error);
  }

  TEST_CASE("token estimate and budget") {
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens("abcd") == 1);
    CHECK(estimate_tokens("abcde") == 2);
    const PromptBundle b = PromptBundle::defaults();
    LlmConfig cfg;
    const int budget = chunk_budget(b, cfg);
    CHECK(budget > 0);
    CHECK(budget < cfg.context_budget_tokens);
    cfg.context_budget_tokens = 600;
    CHECK_THROWS_AS(chunk_budget(b, cfg), Error);
  }

  TEST_CASE("packing: one chunk under a large budget") {
    const auto chunks = pack_messages({{"a", "first", 0}, {"b", "second", 0}, {"c", "third", 0}}, 10000);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].message_ids.size() == 3);
    CHECK(chunks[0].text == "first\nsecond\nthird");
  }

  TEST_CASE("packing: split after the second message") {
    // Each line is 16 bytes; two lines plus a newline are 33 bytes = 9 tokens.
    const std::string line(16, 'x');
    const auto chunks = pack_messages({{"a", line, 0}, {"b", line, 0}, {"c", line, 0}}, 9);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].message_ids == std::vector<std::string>{"a", "b"});
    CHECK(chunks[1].message_ids == std::vector<std::string>{"c"});
    CHECK(chunks[1].index == 1);
  }

  TEST_CASE("packing orders by retweets then id") {
    const auto chunks = pack_messages({{"b", "x", 1}, {"a", "y", 1}, {"c", "z", 9}}, 1000);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].message_ids == std::vector<std::string>{"c", "a", "b"});
  }

  TEST_CASE("packing: oversize message is truncated and flagged") {
    const std::string big = "word " + std::string(400, 'y') + " tail";
    const auto chunks = pack_messages({{"a", "word word word word word word word word word word", 0}}, 4);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].truncated_ids == std::vector<std::string>{"a"});
    CHECK(estimate_tokens(chunks[0].text) <= 4);
    CHECK(truncate_to_budget(big, 10).size() <= 40);
  }

  TEST_CASE("verbatim template with one entity parses to one entry") {
    const std::string filled =
        "output = [\n{\n\"entity\": \"Asselineau\",\n\"promoted_actions\": \"vote for him\",\n\"emotions\": [\"support\"]\n},\n...\n]";
    const ConvoSnapshot s = parse_snapshot(filled);
    REQUIRE(s.entries.size() == 1);
    CHECK(s.entries[0].entity == "Asselineau");
    CHECK(s.entries[0].promoted_actions == "vote for him");
    CHECK(s.entries[0].emotions == std::vector<std::string>{"support"});
  }

  TEST_CASE("the raw template is not a snapshot") {
    CHECK_THROWS_AS(parse_snapshot(kTemplate), Error);
  }

  TEST_CASE("seven entities clamp to five") {
    std::string reply = "output = [";
    for (int i = 0; i < 7; ++i) {
      reply += std::string(i ? "," : "") + "{\"entity\": \"E" + std::to_string(i) +
               "\", \"promoted_actions\": \"a\", \"emotions\": [\"fear\"]}";
    }
    reply += "]";
    const ConvoSnapshot s = parse_snapshot(reply);
    CHECK(s.entries.size() == 5);
    CHECK(s.entries[4].entity == "E4");
  }

  TEST_CASE("prose without a list is unparseable") {
    CHECK_THROWS_AS(parse_snapshot("I cannot find entities"), Error);
  }

  TEST_CASE("lenient replies: surrounding prose, single quotes, scalar emotion") {
    const ConvoSnapshot s = parse_snapshot(
        "Sure! Here is the output:\noutput = [\n{'entity': 'EU', 'promoted_actions': ['leave', 'vote'], 'emotions': 'anger'}\n]\nHope it helps.");
    REQUIRE(s.entries.size() == 1);
    CHECK(s.entries[0].entity == "EU");
    CHECK(s.entries[0].promoted_actions == "leave; vote");
    CHECK(s.entries[0].emotions == std::vector<std::string>{"anger"});
  }

  TEST_CASE("render then parse is the identity on generated snapshots") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 100; ++i) {
      const ConvoSnapshot s = convo::testing::random_snapshot(rng);
      const ConvoSnapshot back = parse_snapshot(render_snapshot(s));
      REQUIRE(back.same_entries(s));
    }
  }

  TEST_CASE("summary parsing") {
    const PromptBundle b = PromptBundle::defaults();
    const AgendaSummary s = parse_summary("to promote the candidacy of Fran\xC3\xA7ois Asselineau for the French presidency.", b);
    CHECK(s.text.rfind("The agenda behind this set of tweets is to promote the candidacy of Fran\xC3\xA7ois Asselineau", 0) == 0);
    CHECK_FALSE(s.no_agenda);
    const AgendaSummary already = parse_summary("The agenda behind this set of tweets is to inform.", b);
    CHECK(already.text == "The agenda behind this set of tweets is to inform.");
    const AgendaSummary none = parse_summary("No agenda", b);
    CHECK(none.no_agenda);
    CHECK(none.text == "No agenda");
    CHECK_THROWS_AS(parse_summary("   ", b), Error);
  }

  TEST_CASE("merge: single part is the identity") {
    ConvoSnapshot a;
    a.entries = {{"Macron", "vote out", {"anger"}}};
    CHECK(merge_snapshots({a}).same_entries(a));
  }

  TEST_CASE("merge: shared entity unions emotions") {
    ConvoSnapshot a, b;
    a.entries = {{"Macron", "vote out", {"anger"}}};
    b.entries = {{"macron", "protest", {"fear", "anger"}}};
    const ConvoSnapshot m = merge_snapshots({a, b});
    REQUIRE(m.entries.size() == 1);
    CHECK(m.entries[0].entity == "Macron");
    CHECK(m.entries[0].promoted_actions == "vote out; protest");
    CHECK(m.entries[0].emotions == std::vector<std::string>{"anger", "fear"});
  }

  TEST_CASE("merge: ranking keeps multi-part entities first, then first-seen order") {
    ConvoSnapshot a, b;
    a.entries = {{"A1", "x", {"e"}}, {"A2", "x", {"e"}}, {"A3", "x", {"e"}}, {"A4", "x", {"e"}}};
    b.entries = {{"B1", "x", {"e"}}, {"B2", "x", {"e"}}, {"B3", "x", {"e"}}, {"A3", "y", {"f"}}};
    const ConvoSnapshot m = merge_snapshots({a, b});
    REQUIRE(m.entries.size() == 5);
    CHECK(m.entries[0].entity == "A3");
    CHECK(m.entries[1].entity == "A1");
    CHECK(m.entries[2].entity == "A2");
    CHECK(m.entries[3].entity == "A4");
    CHECK(m.entries[4].entity == "B1");
  }

  TEST_CASE("prompt chain sends system plus four user turns") {
    MockScript script = MockScript::from_json(
        {{"rules", {{{"match", "Combine the entities"}, {"reply", "output = [{\"entity\": \"EU\", \"promoted_actions\": \"leave\", \"emotions\": [\"anger\"]}]"}}}},
         {"default", "noted"}});
    auto t = std::make_shared<ScriptedTransport>(script);
    const LlmClient client = scripted(t);
    const PromptBundle b = PromptBundle::defaults();
    const ChainResult r = run_prompt_chain("msg one\nmsg two", b, LlmConfig{}, client);
    REQUIRE(r.ok);
    const auto reqs = t->requests();
    REQUIRE(reqs.size() == 4);
    const auto& last = reqs.back()["messages"];
    REQUIRE(last.size() == 8);
    CHECK(last[0]["role"] == "system");
    CHECK(last[0]["content"] == b.system);
    CHECK(last[1]["content"] == b.first_turn("msg one\nmsg two"));
    CHECK(last[3]["content"] == b.prompts[1]);
    CHECK(last[5]["content"] == b.prompts[2]);
    CHECK(last[7]["content"] == b.final_turn());
    CHECK(reqs[0]["top_p"] == 0.9);
    CHECK(reqs[0]["max_tokens"] == 500);
    CHECK(parse_snapshot(r.reply).entries.size() == 1);
  }

  TEST_CASE("single-turn mode sends one request") {
    auto t = std::make_shared<ScriptedTransport>(MockScript{});
    LlmConfig cfg;
    cfg.multi_turn = false;
    const ChainResult r = run_prompt_chain("m", PromptBundle::defaults(), cfg, scripted(t));
    CHECK(r.ok);
    CHECK(t->requests().size() == 1);
  }

  TEST_CASE("characterize merges chunks and summarises") {
    MockScript script = MockScript::from_json(
        {{"rules",
          {{{"match", "Combine the entities"}, {"reply", "output = [{\"entity\": \"EU\", \"promoted_actions\": \"leave\", \"emotions\": [\"anger\"]}]"}},
           {{"match", "overall agenda"}, {"reply", "to leave the EU."}}}},
         {"default", "noted"}});
    auto t = std::make_shared<ScriptedTransport>(script);
    const std::vector<Chunk> chunks = {{0, "a", {"1"}, {}}, {1, "b", {"2"}, {}}};
    const auto cc = characterize_cluster(3, chunks, PromptBundle::defaults(), LlmConfig{}, scripted(t));
    REQUIRE(cc.snapshot);
    CHECK(cc.snapshot->cluster_id == 3);
    CHECK(cc.snapshot->entries.size() == 1);
    REQUIRE(cc.summary);
    CHECK(cc.summary->text == "The agenda behind this set of tweets is to leave the EU.");
    CHECK(cc.failures.empty());
    CHECK(cc.chunks.size() == 2);
    const auto back = characterization_from_json(to_json(cc));
    CHECK(to_json(back) == to_json(cc));
  }

  TEST_CASE("failed chunks are recorded, not fatal") {
    auto t = std::make_shared<ScriptedTransport>(MockScript::from_json({{"default", "I cannot find entities"}}));
    const std::vector<Chunk> chunks = {{0, "a", {"1"}, {}}};
    const auto cc = characterize_cluster(0, chunks, PromptBundle::defaults(), LlmConfig{}, scripted(t));
    CHECK_FALSE(cc.snapshot);
    CHECK(cc.failures.size() == 1);
  }

  TEST_CASE("llm config json round trip omits the key") {
    LlmConfig c;
    c.api_key = "secret";
    c.nucleus_p = 0.8;
    const auto j = c.to_json();
    CHECK_FALSE(j.contains("api_key"));
    CHECK(LlmConfig::from_json(j).nucleus_p == 0.8);
    CHECK_THROWS_AS(LlmConfig::from_json({{"nucleus_p", 1.5}}), Error);
  }
}
