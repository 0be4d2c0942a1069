#pragma once

#include <filesystem>
#include <string>

#include "convo/pipeline.hpp"
#include "convo/synthkit.hpp"

namespace convo::testing {

inline std::filesystem::path mock_script_path() { return std::filesystem::path(CONVO_DATA_DIR) / "mock" / "agenda_script.json"; }

/// Planted corpus: three communities, a 10-author clique in the frexit
/// community and a retweet-only audience.
inline PlantSpec planted_spec(std::uint64_t seed = 42) {
  PlantSpec spec;
  spec.seed = seed;
  spec.operation.clique_size = 10;
  spec.operation.mutual_rate = 0.8;
  spec.operation.self_rate = 0.3;
  spec.operation.organic_authors = 20;
  return spec;
}

/// Writes the planted corpus under `work` and returns a config running on it
/// against the scripted mock endpoint.
inline PipelineConfig planted_config(const std::filesystem::path& work, std::uint64_t seed = 42) {
  std::filesystem::create_directories(work);
  const auto corpus = work / "planted.jsonl";
  write_synth(synth_corpus(planted_spec(seed)), corpus);
  PipelineConfig cfg;
  cfg.input = corpus;
  cfg.out_dir = work / "out";
  cfg.seed = seed;
  cfg.terms = {"frexit"};
  cfg.grouping.min_cluster_size = 4;
  cfg.mock_llm = mock_script_path();
  return cfg;
}

}  // namespace convo::testing
