#include <doctest.h>

#include <random>

#include "convo/error.hpp"
#include "convo/report.hpp"
#include "convo/schema_check.hpp"
#include "snapshot_gen.hpp"
#include "test_util.hpp"

using namespace convo;
using convo::testing::dot_problem;

namespace {

InfluencerNetwork two_nodes() {
  InfluencerNetwork net;
  net.nodes = {{"alice", 1, 3, 10}, {"bob", 2, 1, 2}};
  net.self_loops = {0, 0};
  return net;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("dot checker accepts valid and rejects broken graphs") {
    CHECK(dot_problem("digraph g { a -> b [label=\"x\"]; }").empty());
    CHECK(dot_problem("graph { a -- b; node [shape=box]; rankdir=LR }").empty());
    CHECK_FALSE(dot_problem("digraph g { a -- b }").empty());
    CHECK_FALSE(dot_problem("digraph g { a -> }").empty());
    CHECK_FALSE(dot_problem("digraph g { a [label=\"open }").empty());
    CHECK_FALSE(dot_problem("digraph { a } }").empty());
  }

  TEST_CASE("network edge label is the weight") {
    InfluencerNetwork net = two_nodes();
    net.add_retweet(0, 1, 3);
    const std::string dot = export_network(net);
    CHECK(dot.find("I1 -> I2 [label=\"3\"]") != std::string::npos);
    CHECK(dot_problem(dot).empty());
  }

  TEST_CASE("self-retweeting node is marked") {
    InfluencerNetwork net = two_nodes();
    net.add_retweet(1, 1, 2);
    const std::string dot = export_network(net);
    CHECK(dot.find("I2 [label=\"I2\", author=\"bob\", selfrt=\"true\"") != std::string::npos);
    CHECK(count(dot, "selfrt=\"true\"") == 1);
    CHECK(dot.find("I2 -> I2") == std::string::npos);
  }

  TEST_CASE("empty network is a valid empty graph") {
    const std::string dot = export_network(InfluencerNetwork{});
    CHECK(dot_problem(dot).empty());
    CHECK(dot.find("->") == std::string::npos);
  }

  TEST_CASE("edges are ordered by source then destination rank") {
    InfluencerNetwork net;
    for (int i = 0; i < 3; ++i) net.nodes.push_back({"a" + std::to_string(i), i + 1, 0, 0});
    net.self_loops = {0, 0, 0};
    net.add_retweet(2, 0);
    net.add_retweet(0, 2);
    net.add_retweet(0, 1);
    const std::string dot = export_network(net);
    const auto p01 = dot.find("I1 -> I2"), p02 = dot.find("I1 -> I3"), p20 = dot.find("I3 -> I1");
    CHECK(p01 < p02);
    CHECK(p02 < p20);
  }

  TEST_CASE("author ids with quotes are escaped") {
    InfluencerNetwork net = two_nodes();
    net.nodes[0].author_id = "we\"ird\\name";
    CHECK(dot_problem(export_network(net)).empty());
    CHECK(dot_quote("a\"b\\c\nd") == "\"a\\\"b\\\\c\\nd\"");
  }

  TEST_CASE("lexicon lookup") {
    const PolarityLexicon lex = PolarityLexicon::builtin();
    CHECK(lex.size() >= 55);
    CHECK(lex.lookup("anger") == Polarity::kNegative);
    CHECK(lex.lookup("  Fear ") == Polarity::kNegative);
    CHECK(lex.lookup("concern") == Polarity::kNegative);
    CHECK(lex.lookup("support") == Polarity::kPositive);
    CHECK(lex.lookup("admiration") == Polarity::kPositive);
    CHECK(lex.lookup("hope") == Polarity::kPositive);
    CHECK(lex.lookup("zorglub") == Polarity::kNeutral);
    const PolarityLexicon disk = PolarityLexicon::load(std::string(CONVO_DATA_DIR) + "/polarity_lexicon.tsv");
    CHECK(disk.size() == lex.size());
    CHECK_THROWS_AS(PolarityLexicon::parse("word\tsideways\n"), Error);
  }

  TEST_CASE("negative emotion gives a red edge, unknown a grey one") {
    ConvoSnapshot s;
    s.entries = {{"EU", "leave", {"anger", "zorglub"}}};
    const std::string dot = export_snapshot(s, PolarityLexicon::builtin());
    CHECK(dot_problem(dot).empty());
    CHECK(dot.find("class=\"negative\", color=\"red\"") != std::string::npos);
    CHECK(dot.find("class=\"neutral\", color=\"grey\"") != std::string::npos);
    CHECK(dot.find("label=\"leave\"") != std::string::npos);
  }

  TEST_CASE("positive emotion gives a blue edge") {
    ConvoSnapshot s;
    s.entries = {{"Asselineau", "vote", {"support"}}};
    CHECK(export_snapshot(s, PolarityLexicon::builtin()).find("class=\"positive\", color=\"blue\"") != std::string::npos);
  }

  TEST_CASE("five entities give exactly five entity nodes") {
    ConvoSnapshot s;
    for (int i = 0; i < 5; ++i) s.entries.push_back({"E" + std::to_string(i), "a", {"hope"}});
    const std::string dot = export_snapshot(s, PolarityLexicon::builtin());
    CHECK(count(dot, "class=\"entity\"") == 5);
    CHECK(count(dot, "class=\"cluster\"") == 1);
  }

  TEST_CASE("generated snapshots always export parseable DOT") {
    std::mt19937_64 rng(5);
    const PolarityLexicon lex = PolarityLexicon::builtin();
    for (int i = 0; i < 200; ++i) REQUIRE(dot_problem(export_snapshot(convo::testing::random_snapshot(rng), lex)).empty());
  }

  TEST_CASE("schema subset validator") {
    const nlohmann::json schema = nlohmann::json::parse(R"({
      "type": "object", "required": ["a"], "additionalProperties": false,
      "definitions": {"pos": {"type": "integer", "minimum": 1}},
      "properties": {"a": {"$ref": "#/definitions/pos"}, "b": {"enum": ["x", "y"]},
                     "c": {"type": "array", "items": {"type": "string"}, "maxItems": 1}}})");
    CHECK(validate_schema(schema, {{"a", 2}, {"b", "x"}}).empty());
    CHECK(validate_schema(schema, {{"a", 0}}).size() == 1);
    CHECK(validate_schema(schema, {{"b", "x"}}).size() == 1);
    CHECK(validate_schema(schema, {{"a", 1}, {"z", 1}}).size() == 1);
    CHECK(validate_schema(schema, {{"a", 1}, {"c", {"p", 2}}}).size() == 2);
  }

  TEST_CASE("shipped report schema loads") {
    const nlohmann::json s = load_report_schema();
    CHECK(s["properties"]["schema_version"]["const"] == kReportSchemaVersion);
  }
}
