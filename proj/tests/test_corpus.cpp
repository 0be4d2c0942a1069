#include <doctest.h>

#include <sstream>

#include "convo/error.hpp"
#include "test_util.hpp"

using namespace convo;
using namespace convo::testing;

TEST_SUITE("corpus") {
  TEST_CASE("three well-formed lines") {
    const Corpus c = parse(jsonl({{"1", "a", "one two three #x"}, {"2", "b", "four five six #y"}, {"3", "c", "x y z"}}));
    CHECK(c.messages.size() == 3);
    CHECK(c.stats.raw == 3);
    CHECK(c.stats.skipped == 0);
  }

  TEST_CASE("malformed line is skipped and counted") {
    std::string lines = jsonl({{"1", "a", "t #x"}, {"2", "b", "t #x"}, {"3", "c", "t #x"}});
    lines.insert(lines.find('\n') + 1, "{not json\n");
    const Corpus c = parse(lines);
    CHECK(c.messages.size() == 3);
    CHECK(c.stats.raw == 4);
    CHECK(c.stats.skipped == 1);
    CHECK(c.stats.skipped_samples.size() == 1);
  }

  TEST_CASE("retweet field maps before resolution") {
    const Corpus c = parse(jsonl({{"1", "a", "hello there world #x"}, {"2", "b", "RT", std::string("1")}}));
    const Message* rt = c.find("2");
    REQUIRE(rt);
    REQUIRE(rt->retweet_of);
    CHECK(*rt->retweet_of == "1");
    CHECK(c.find("1")->retweet_count == 0);
  }

  TEST_CASE("direct and chained retweets count toward the root") {
    const Corpus one = resolve_retweets(parse(jsonl({{"A", "a", "orig text here #x"}, {"B", "b", "RT", std::string("A")}})));
    CHECK(one.find("A")->retweet_count == 1);

    const Corpus chain = resolve_retweets(parse(jsonl(
        {{"A", "a", "orig text here #x"}, {"B", "b", "RT", std::string("A")}, {"C", "c", "RT", std::string("B")}})));
    CHECK(chain.find("A")->retweet_count == 2);
    CHECK(chain.find("B")->retweet_count == 0);
    REQUIRE(chain.retweets.size() == 2);
    for (const auto& l : chain.retweets) {
      CHECK(l.root_id == "A");
      CHECK(l.root_author_id == "a");
    }
  }

  TEST_CASE("dangling retweet is counted, not fatal") {
    const Corpus c = resolve_retweets(parse(jsonl({{"B", "b", "RT", std::string("X")}})));
    CHECK(c.stats.dangling == 1);
    CHECK(c.retweets.empty());
  }

  TEST_CASE("retweet cycles are detected") {
    const Corpus c = resolve_retweets(parse(jsonl({{"A", "a", "RT", std::string("B")}, {"B", "b", "RT", std::string("A")}})));
    CHECK(c.stats.cycles >= 1);
    CHECK(c.retweets.empty());
  }

  TEST_CASE("filter boundaries") {
    const Corpus c = ingest({{"two", "a", "only two #x"},
                             {"nohash", "a", "five words but no hashtag"},
                             {"keep", "a", "three real words #x"}});
    CHECK(c.find("two")->filtered_out);
    CHECK(c.find("nohash")->filtered_out);
    CHECK_FALSE(c.find("keep")->filtered_out);
    CHECK(c.originals().size() == 1);
    CHECK(c.stats.retained == 1);
    CHECK(c.stats.dropped_filter == 2);
    CHECK_NOTHROW(check_corpus_invariants(c));
  }

  TEST_CASE("accounting identity") {
    std::string lines = jsonl({{"A", "a", "orig text here #x"},
                               {"B", "b", "RT", std::string("A")},
                               {"C", "c", "too short #x"},
                               {"D", "d", "RT", std::string("missing")}});
    lines += "garbage\n";
    const Corpus c = filter_messages(resolve_retweets(parse(lines)));
    const auto& s = c.stats;
    CHECK(s.raw == s.retained + s.dropped_filter + s.retweet_records + s.skipped);
    CHECK_NOTHROW(check_corpus_invariants(c));
  }

  TEST_CASE("messages are ordered by timestamp then id") {
    const Corpus c = parse(jsonl({{"b", "x", "t #x", std::nullopt, 5}, {"a", "x", "t #x", std::nullopt, 5},
                                  {"c", "x", "t #x", std::nullopt, 1}}));
    REQUIRE(c.messages.size() == 3);
    CHECK(c.messages[0].id == "c");
    CHECK(c.messages[1].id == "a");
    CHECK(c.messages[2].id == "b");
  }

  TEST_CASE("nested schema paths and field hashtags") {
    const std::string line =
        R"({"id_str":"9","user":{"id_str":"u1"},"full_text":"Sortir de l'UE maintenant","created_at":"Fri Apr 01 10:00:00 +0000 2022","entities":{"hashtags":[{"text":"Frexit"}]}})";
    std::istringstream in(line + "\n");
    const Corpus c = parse_corpus(in, SchemaMap::french_election(), "<fixture>");
    REQUIRE(c.messages.size() == 1);
    CHECK(c.messages[0].author_id == "u1");
    CHECK(c.messages[0].hashtags == std::vector<std::string>{"frexit"});
    CHECK(c.messages[0].timestamp.has_value());
  }

  TEST_CASE("json round trip") {
    const Corpus c = ingest({{"A", "a", "orig text here #x"}, {"B", "b", "RT", std::string("A")}});
    const Corpus back = corpus_from_json(corpus_to_json(c));
    CHECK(corpus_to_json(back) == corpus_to_json(c));
    CHECK(back.find("A")->retweet_count == 1);
  }

  TEST_CASE("unknown schema preset is an ingest error") {
    try {
      SchemaMap::from_json("nope");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.stage() == "ingest");
    }
  }
}
