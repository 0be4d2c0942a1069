#include <doctest.h>

#include "convo/lenient_json.hpp"
#include "convo/text.hpp"

using namespace convo;

TEST_SUITE("text") {
  TEST_CASE("link, emoji and hashtag stripping") {
    const auto n = normalize_text("Vive le #Frexit \xF0\x9F\x87\xAB\xF0\x9F\x87\xB7 https://t.co/x");
    CHECK(n.clean == "Vive le");
    REQUIRE(n.hashtags.size() == 1);
    CHECK(n.hashtags[0] == "frexit");
    CHECK(n.token_count == 2);
  }

  TEST_CASE("empty text") {
    const auto n = normalize_text("");
    CHECK(n.clean.empty());
    CHECK(n.hashtags.empty());
    CHECK(n.token_count == 0);
  }

  TEST_CASE("hashtags are not textual tokens") {
    const auto n = normalize_text("#a #b #c");
    CHECK(n.token_count == 0);
    CHECK(n.hashtags == std::vector<std::string>{"a", "b", "c"});
  }

  TEST_CASE("hashtags dedupe case-insensitively in first-seen order") {
    CHECK(extract_hashtags("#Frexit #UE #frexit #Asselineau") == std::vector<std::string>{"frexit", "ue", "asselineau"});
  }

  TEST_CASE("accented hashtags keep their letters") {
    CHECK(extract_hashtags("#Souveraineté oui") == std::vector<std::string>{"souverainet\xC3\xA9"});
  }

  TEST_CASE("mentions do not count as tokens") {
    CHECK(normalize_text("@someone says hello there").token_count == 3);
  }

  TEST_CASE("invalid UTF-8 is dropped rather than rejected") {
    const auto n = normalize_text(std::string("ok \xFF\xFE words here"));
    CHECK(n.token_count == 3);
  }

  TEST_CASE("canonical tags and casefold") {
    CHECK(canonical_tag("#FREXIT") == "frexit");
    CHECK(casefold("\xC3\x89LYS\xC3\x89") == "\xC3\xA9lys\xC3\xA9");
  }

  TEST_CASE("word tokens split on apostrophes") {
    CHECK(word_tokens("l'Europe c'est fini") == std::vector<std::string>{"l", "europe", "c", "est", "fini"});
  }

  TEST_CASE("fnv1a64 known vectors") {
    CHECK(fnv1a64("") == 14695981039346656037ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hex64(0xaf63dc4c8601ec8cULL) == "af63dc4c8601ec8c");
  }

  TEST_CASE("edit distance") {
    CHECK(edit_distance("frexit", "frexits") == 1);
    CHECK(edit_distance("", "abc") == 3);
  }

  TEST_CASE("lenient json: single quotes, barewords, trailing commas") {
    const auto j = parse_lenient("{'entity': EU, \"emotions\": [anger, 'fear',], }");
    REQUIRE(j);
    CHECK((*j)["entity"] == "EU");
    CHECK((*j)["emotions"] == nlohmann::json::array({"anger", "fear"}));
  }

  TEST_CASE("lenient json: apostrophe inside a single-quoted value") {
    const auto j = parse_lenient("{'entity': 'l'Europe', 'x': 1}");
    REQUIRE(j);
    CHECK((*j)["entity"] == "l'Europe");
  }

  TEST_CASE("lenient json: placeholder ellipsis is skipped") {
    const auto j = find_object_list("output = [\n{\"entity\": \"A\"},\n...\n]");
    REQUIRE(j);
    CHECK(j->size() == 1);
  }

  TEST_CASE("lenient json: no list") {
    CHECK_FALSE(find_object_list("I cannot find entities"));
  }
}
