#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qrepair/evidence.hpp"
#include "qrepair/expand.hpp"
#include "qrepair/guard.hpp"
#include "qrepair/model_io.hpp"
#include "qrepair/qtype.hpp"

namespace qrepair {

// Runtime variants: the matched one-pass baseline, the full pipeline, and
// the ablation modes (second pass with the original question only, no
// validator, no canonicalization, simple reconsideration on first-pass
// evidence).
enum class PipelineMode {
  baseline_only,
  full,
  second_pass_original_only,
  no_validator,
  no_canonicalization,
  simple_reconsideration,
};

std::string_view mode_name(PipelineMode m);
PipelineMode mode_from_name(std::string_view name);  // throws ConfigError

// One benchmark item. `golds` is empty when the corpus carries no gold
// answer for the question.
struct QuestionRecord {
  std::string id;
  std::string question;
  std::vector<std::string> golds;
};

// JSONL, one {"id", "question", "gold": str|list|null} object per line.
// Throws ConfigError on unreadable files, bad JSON, blank ids/questions,
// or duplicate ids.
std::vector<QuestionRecord> load_question_corpus(const std::string& path);

enum class TraceStatus { ok, not_attempted, error };
std::string_view trace_status_name(TraceStatus s);

struct TraceCounters {
  int retrieval_queries = 0;
  int raw_snippets = 0;  // before deduplication
  int model_calls = 0;   // pipeline stages: draft and refine
};

// Full per-question record, serialized as one JSONL line ("schema": "v1").
struct PipelineTrace {
  std::string question_id;
  std::string question;
  QuestionType qtype = QuestionType::other;
  PipelineMode mode = PipelineMode::full;
  TraceStatus status = TraceStatus::ok;
  std::optional<DraftAnswer> draft;
  std::vector<EvidenceSnippet> r0;
  std::vector<std::string> expansion_queries;
  std::vector<EvidenceSnippet> r1;
  std::optional<std::string> refiner_raw;
  bool refine_unavailable = false;
  std::optional<RefinerVerdict> verdict;
  std::optional<ValidationOutcome> validation;
  std::string final_answer;
  TraceCounters counters;
  std::string prompt_hash;
  std::string stopwords_hash;
  std::string months_hash;
  std::string config_hash;
  std::int64_t timing_ms = 0;
  std::string error;  // populated only when status == error
};

// Single-line JSON with a fixed key order; invalid UTF-8 in model output is
// replaced rather than propagated so serialization is total.
std::string trace_to_jsonl(const PipelineTrace& t);

struct Backends {
  RetrievalBackend* retrieval = nullptr;
  ModelBackend* model = nullptr;
};

struct PipelineOptions {
  PipelineMode mode = PipelineMode::full;
  int k_b = 5;
  int k_r = 5;
  std::string config_hash;
  // timing_ms is wall time when true and 0 when false; disable for
  // byte-identical reruns.
  bool record_timing = true;
};

class Pipeline {
 public:
  Pipeline(Backends backends, const PromptSet& prompts,
           const ValidatorData& validator_data, PipelineOptions options);

  // Runs every stage for one question. Per-question failures land in the
  // trace (status not_attempted or error); nothing escapes.
  PipelineTrace run_question(const QuestionRecord& q) const;

  const PipelineOptions& options() const { return opt_; }

 private:
  void run_stages(const QuestionRecord& q, PipelineTrace& t) const;

  Backends backends_;
  const PromptSet& prompts_;
  const ValidatorData& validator_data_;
  PipelineOptions opt_;
};

struct CorpusRunOptions {
  std::string output_path;
  std::string checkpoint_path;  // defaults to output_path + ".ckpt"
  int concurrency = 1;
  bool resume = false;
};

struct RunSummary {
  std::string output_path;
  size_t total = 0;
  size_t processed = 0;
  size_t skipped = 0;  // already completed per checkpoint
  size_t not_attempted = 0;
  size_t errors = 0;
};

// Runs every question exactly once, up to `concurrency` in flight. Trace
// lines are written in input order regardless of completion order; each
// flushed line is followed by a checkpoint append, and --resume keeps the
// clean checkpointed prefix and processes the remainder. Throws IoError
// when the output cannot be opened and InvalidInputError on an empty
// corpus.
RunSummary run_corpus(const Pipeline& pipeline,
                      const std::vector<QuestionRecord>& questions,
                      const CorpusRunOptions& options);

}  // namespace qrepair
