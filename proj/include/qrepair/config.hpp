#pragma once

#include <memory>
#include <string>

#include "qrepair/eval.hpp"
#include "qrepair/model_backends.hpp"
#include "qrepair/pipeline.hpp"
#include "qrepair/retrieval_backends.hpp"

namespace qrepair {

// "kind:arg" selection, e.g. mock:fixtures/retrieval.json, bm25:corpus.jsonl,
// http:settings.json, default, external:settings.json.
struct BackendSelection {
  std::string kind;
  std::string arg;
};

BackendSelection parse_selection(const std::string& text);

// Effective run configuration: a declarative config file plus flag
// overrides (flags win). Its canonical serialization is hashed into every
// trace. Auth credentials are referenced by environment-variable name only
// and never stored.
struct RunConfig {
  std::string corpus_path;
  std::string output_path;
  PipelineMode mode = PipelineMode::full;
  int k_b = 5;
  int k_r = 5;
  int concurrency = 1;
  std::string prompts_path = "data/prompts.txt";
  std::string stopwords_path = "data/stopwords.txt";
  std::string months_path = "data/months.txt";
  BackendSelection retrieval{"mock", ""};
  BackendSelection model{"mock", ""};
  BackendSelection grader{"default", ""};
  bool resume = false;
  bool record_timing = true;
};

std::string config_to_json(const RunConfig& c);
RunConfig config_from_json_text(const std::string& text);
RunConfig load_config_file(const std::string& path);

// Hash of the canonical serialization; reloading the serialized config
// yields the same hash.
std::string config_hash(const RunConfig& c);

std::unique_ptr<RetrievalBackend> make_retrieval_backend(const BackendSelection& sel);
std::unique_ptr<ModelBackend> make_model_backend(const BackendSelection& sel);
std::unique_ptr<Grader> make_grader(const BackendSelection& sel);

}  // namespace qrepair
