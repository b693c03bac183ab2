#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "qrepair/evidence.hpp"
#include "qrepair/qtype.hpp"

namespace qrepair {

// Pluggable answer-model backend. `complete` returns the raw completion for
// a prompt and throws TransportError on failure after retries.
// Implementations must tolerate concurrent calls.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

enum class DraftOrigin { retrieved, closed_book, type_default };

struct DraftAnswer {
  std::string text;
  DraftOrigin origin = DraftOrigin::retrieved;
};

std::string_view draft_origin_name(DraftOrigin o);

enum class Decision { keep, revise };
enum class ParseStatus { ok, malformed };

// Parsed three-field refiner output. parse_status == malformed forces the
// pipeline to keep the draft; in that case decision is keep and answer is
// empty regardless of what could be salvaged.
struct RefinerVerdict {
  Decision decision = Decision::keep;
  std::string answer;
  std::optional<std::string> evidence;
  ParseStatus parse_status = ParseStatus::ok;
};

// Prompt templates loaded from a single file with [draft_evidence],
// [draft_closed_book], and [refine] sections. {question}, {draft}, and
// {evidence} placeholders are substituted at render time. The hash of the
// raw file bytes is recorded in every trace.
class PromptSet {
 public:
  static PromptSet load(const std::string& path);
  static PromptSet from_text(const std::string& text);

  std::string render_draft(const std::string& question,
                           const EvidenceSet& evidence) const;
  std::string render_closed_book(const std::string& question) const;
  std::string render_refine(const std::string& question,
                            const std::string& draft,
                            const EvidenceSet& evidence) const;

  const std::string& hash() const { return hash_; }

 private:
  std::string draft_evidence_;
  std::string draft_closed_book_;
  std::string refine_;
  std::string hash_;
};

// Snippet bodies are clipped to this many bytes when rendered into prompts.
constexpr size_t kPromptSnippetMaxChars = 1500;

std::string render_evidence_block(const EvidenceSet& evidence);

// Drafting fallback chain: evidence-grounded prompt (skipped when evidence
// is empty), then closed-book prompt, then a minimal type-dependent default.
// Model-quality failures never surface as errors; DraftUnavailableError is
// thrown only when every attempted model rung failed at transport level.
DraftAnswer draft(ModelBackend& model, const PromptSet& prompts,
                  const std::string& question, const EvidenceSet& evidence,
                  QuestionType qt);

std::string type_default_answer(QuestionType qt);

// One refinement call; returns the raw completion. Throws
// RefineUnavailableError on transport failure.
std::string refine_call(ModelBackend& model, const PromptSet& prompts,
                        const std::string& question, const DraftAnswer& draft,
                        const EvidenceSet& evidence);

// Total over all byte strings. Extracts DECISION/ANSWER/EVIDENCE lines
// case-insensitively, ignoring surrounding prose. Missing or duplicate
// fields, an unknown decision token, or an empty ANSWER yield a malformed
// verdict with decision forced to keep.
RefinerVerdict parse_verdict(const std::string& raw);

// Canonical three-line form; parse_verdict(render_verdict(d, a, e))
// reproduces (d, a, e) for single-line trimmed fields (the literal token
// NONE is reserved for absent evidence).
std::string render_verdict(Decision d, const std::string& answer,
                           const std::optional<std::string>& evidence);

}  // namespace qrepair
