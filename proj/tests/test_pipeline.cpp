#include <doctest.h>

#include <filesystem>

#include "convo/error.hpp"
#include "convo/pipeline.hpp"
#include "convo/schema_check.hpp"
#include "pipeline_fixture.hpp"
#include "test_util.hpp"

using namespace convo;
namespace fs = std::filesystem;

namespace {

fs::path fresh(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("convo_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("stage names round trip") {
    for (int i = 0; i < kStageCount; ++i) {
      const auto s = static_cast<Stage>(i);
      CHECK(parse_stage(stage_name(s)) == s);
    }
    CHECK(parse_stage("groups") == Stage::kGroups);
    CHECK_FALSE(parse_stage("everything"));
  }

  TEST_CASE("full run on the planted corpus") {
    const fs::path work = fresh("full");
    const PipelineConfig cfg = convo::testing::planted_config(work);
    const RunOutcome out = run_pipeline(cfg);
    const auto errors = validate_schema(load_report_schema(), out.report);
    for (const auto& e : errors) MESSAGE(e);
    CHECK(errors.empty());
    REQUIRE(out.report.contains("convos"));
    const auto& c0 = out.report["convos"][0];
    CHECK(c0["operation_flag"] == true);
    CHECK(c0["influencers"].size() == 10);
    CHECK_FALSE(c0["characterizations"].empty());
    CHECK(out.computed.size() == kStageCount);
    CHECK(out.loaded.empty());
    for (const auto& g : out.graph_files) {
      CHECK(fs::exists(g));
      CHECK(convo::testing::dot_problem(read_file(g)).empty());
    }
    CHECK(fs::exists(cfg.out_dir / "audit" / "convo0.json"));
    fs::remove_all(work);
  }

  TEST_CASE("stage gating keeps later sections out") {
    const fs::path work = fresh("gating");
    const PipelineConfig cfg = convo::testing::planted_config(work);
    RunOptions opts;
    opts.last = Stage::kGroups;
    const RunOutcome out = run_pipeline(cfg, opts);
    CHECK(out.report.contains("groups"));
    CHECK_FALSE(out.report.contains("convos"));
    CHECK(out.report["run"]["last_stage"] == "hashtag-groups");
    CHECK(validate_schema(load_report_schema(), out.report).empty());
    fs::remove_all(work);
  }

  TEST_CASE("resume restores every stage and reproduces the report byte for byte") {
    const fs::path work = fresh("resume");
    const PipelineConfig cfg = convo::testing::planted_config(work);
    const RunOutcome first = run_pipeline(cfg);
    const std::string report = read_file(first.report_path);
    RunOptions opts;
    opts.resume = true;
    const RunOutcome again = run_pipeline(cfg, opts);
    CHECK(again.loaded.size() == kStageCount - 1);
    CHECK(read_file(again.report_path) == report);

    PipelineConfig changed = cfg;
    changed.top_k = 5;
    const RunOutcome partial = run_pipeline(changed, opts);
    CHECK(partial.loaded == std::vector<std::string>{"ingest", "hashtag-groups", "convo"});
    CHECK(partial.report["convos"][0]["influencers"].size() == 5);
    fs::remove_all(work);
  }

  TEST_CASE("a failing stage names itself and keeps earlier caches") {
    const fs::path work = fresh("failing");
    PipelineConfig cfg = convo::testing::planted_config(work);
    cfg.terms = {"brexit"};
    try {
      run_pipeline(cfg);
      FAIL("expected the convo stage to fail");
    } catch (const Error& e) {
      CHECK(e.stage() == "convo");
    }
    CHECK(fs::exists(cfg.effective_cache_dir() / "0-ingest.json"));
    CHECK(fs::exists(cfg.effective_cache_dir() / "1-hashtag-groups.json"));
    fs::remove_all(work);
  }

  TEST_CASE("missing input is an ingest error") {
    PipelineConfig cfg;
    cfg.input = "/nonexistent/corpus.jsonl";
    cfg.terms = {"x"};
    try {
      run_pipeline(cfg);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.stage() == "ingest");
    }
  }

  TEST_CASE("config hash ignores the output location") {
    const fs::path work = fresh("hash");
    PipelineConfig a = convo::testing::planted_config(work);
    PipelineConfig b = a;
    b.out_dir = work / "elsewhere";
    CHECK(a.hash() == b.hash());
    b.seed = 7;
    CHECK(a.hash() != b.hash());
    fs::remove_all(work);
  }

  TEST_CASE("config file with relative paths and env overrides") {
    const fs::path work = fresh("config");
    fs::create_directories(work);
    write_file(work / "run.json", R"({"input": "c.jsonl", "terms": ["frexit"], "out_dir": "o",
                                     "llm": {"endpoint": "http://x/v1/chat/completions"}})");
    setenv("CONVO_LLM_ENDPOINT", "http://override/v1/chat/completions", 1);
    const PipelineConfig cfg = PipelineConfig::load(work / "run.json");
    unsetenv("CONVO_LLM_ENDPOINT");
    CHECK(cfg.input == work / "c.jsonl");
    CHECK(cfg.out_dir == work / "o");
    CHECK(cfg.llm.endpoint == "http://override/v1/chat/completions");
    CHECK_FALSE(cfg.to_json()["llm"].contains("api_key"));
    fs::remove_all(work);
  }

  TEST_CASE("message prompt text appends hashtags") {
    Message m;
    m.clean_text = "leave now";
    m.hashtags = {"frexit", "ue"};
    CHECK(message_prompt_text(m) == "leave now #frexit #ue");
  }
}
