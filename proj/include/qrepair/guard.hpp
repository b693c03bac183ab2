#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qrepair/model_io.hpp"
#include "qrepair/qtype.hpp"

namespace qrepair {

enum class RejectRule {
  r1_degenerate,
  r2_yesno_form,
  r3_entity_shape,
  r4_missing_marker,
  r5_no_evidence,
  r6_ungrounded,
};

std::string_view rule_name(RejectRule r);

// Outcome of validating one proposed revision. Exactly one of the two
// states holds: accepted with a canonical answer, or rejected with the
// lowest-numbered failing rule.
struct ValidationOutcome {
  bool accepted = false;
  std::optional<RejectRule> rejected_rule;
  std::optional<std::string> canonical_answer;
};

// Stopword and month lists are shipped as data files whose hashes are
// recorded in traces.
class ValidatorData {
 public:
  static ValidatorData load(const std::string& stopwords_path,
                            const std::string& months_path);
  static ValidatorData from_text(const std::string& stopwords_text,
                                 const std::string& months_text);

  bool is_stopword(const std::string& token) const;
  // Full month names and their 3-letter abbreviations, case handled by the
  // caller passing lowercase tokens.
  bool is_month(const std::string& token) const;
  // Canonical marker form ("december" and "dec" both map to "dec").
  std::optional<std::string> month_marker(const std::string& token) const;

  const std::string& stopwords_hash() const { return stopwords_hash_; }
  const std::string& months_hash() const { return months_hash_; }

 private:
  std::set<std::string> stopwords_;
  std::vector<std::string> months_;
  std::string stopwords_hash_;
  std::string months_hash_;
};

// Digit-bearing and month tokens in canonical marker form (commas stripped
// from digit tokens, months mapped to 3-letter form).
std::vector<std::string> marker_tokens(std::string_view text,
                                       const ValidatorData& data);

// Grounding check for temporal/year/numeric answers: some marker token of
// the answer occurs in the evidence.
bool marker_grounding(std::string_view answer, std::string_view evidence,
                      const ValidatorData& data);

struct EntityGrounding {
  bool any_overlap = false;   // >= 1 non-stopword answer token in evidence
  bool near_contiguous = false;  // all answer tokens within a window of |answer|+2
};

// Grounding check for entity-style answers. Acceptance needs any_overlap;
// near-contiguity is a confidence signal only.
EntityGrounding entity_grounding(std::string_view answer,
                                 std::string_view evidence,
                                 const ValidatorData& data);

// Applies rejection rules r1..r6 in order to a REVISE verdict and
// canonicalizes the answer on acceptance. Preconditions: verdict parsed ok
// and decision == revise (enforced with InvalidInputError).
ValidationOutcome validate(const std::string& question, QuestionType qt,
                           const DraftAnswer& draft,
                           const RefinerVerdict& verdict,
                           const ValidatorData& data);

// Type-specific normalization of an accepted answer: 4-digit year
// extraction, number-span compaction, leading-preposition stripping for
// locations, parenthetical-descriptor removal for names. Non-matching
// answers pass through trimmed; a result that would be empty falls back to
// the trimmed original.
std::string canonicalize(QuestionType qt, const std::string& answer);

}  // namespace qrepair
