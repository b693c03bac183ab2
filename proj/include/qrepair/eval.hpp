#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qrepair/pipeline.hpp"

namespace qrepair {

enum class GradeLabel { correct, incorrect, not_attempted };
std::string_view grade_label_name(GradeLabel g);

// SQuAD-style answer normalization: lowercase, delete punctuation, drop
// article tokens (a, an, the), collapse whitespace.
std::string squad_normalize(std::string_view s);

// 1 iff the normalized prediction equals any normalized gold variant.
// Throws InvalidInputError when golds is empty.
int exact_match(const std::string& pred, const std::vector<std::string>& golds);

// Max over gold variants of the harmonic mean of token precision/recall on
// normalized tokens. Both sides empty -> 1; exactly one empty -> 0.
double token_f1(const std::string& pred, const std::vector<std::string>& golds);

class Grader {
 public:
  virtual ~Grader() = default;
  virtual GradeLabel grade(const std::string& question, const std::string& pred,
                           const std::vector<std::string>& golds) = 0;
};

// Deterministic grader: exact_match == 1 -> correct, else incorrect.
class DefaultGrader : public Grader {
 public:
  GradeLabel grade(const std::string& question, const std::string& pred,
                   const std::vector<std::string>& golds) override;
};

struct ExternalGraderConfig {
  std::string endpoint;
  std::string model_name;
  std::string auth_env;
  double timeout_s = 30.0;
  int max_retries = 3;
  // Optional template file with {question}/{pred}/{gold} placeholders; a
  // minimal built-in letter-grade prompt is used when empty.
  std::string template_path;
};

// Forwards (question, pred, gold) to a model endpoint and maps the first
// standalone letter grade in the reply: A -> correct, B -> incorrect,
// C -> not_attempted. Throws GradingUnavailableError per item on transport
// failure and PayloadError when no letter grade can be found.
class ExternalGrader : public Grader {
 public:
  explicit ExternalGrader(ExternalGraderConfig cfg);
  GradeLabel grade(const std::string& question, const std::string& pred,
                   const std::vector<std::string>& golds) override;

 private:
  ExternalGraderConfig cfg_;
  std::string token_;
  std::string template_text_;
};

// Empty predictions short-circuit to not_attempted before any grader runs.
GradeLabel grade(Grader& grader, const std::string& question,
                 const std::string& pred, const std::vector<std::string>& golds);

// The per-question slice of a trace file the report layer needs.
struct TraceView {
  std::string id;
  std::string question;
  std::string draft_text;
  std::string final_answer;
  TraceStatus status = TraceStatus::ok;
  bool malformed = false;
  bool refine_unavailable = false;
};

// Loads a JSONL trace file. Throws IoError/ConfigError on unreadable or
// unparseable input.
std::vector<TraceView> load_trace_file(const std::string& path);

// Aggregate report over a paired baseline/refined run. Transition
// fractions are over attempted pairs and sum to 1; counts carry the exact
// integers the fractions are derived from.
struct EvalReport {
  size_t n = 0;
  double correct_rate = 0.0;  // refined side, not_attempted in denominator
  double f1 = 0.0;            // harmonic mean of correct|attempted and correct rate
  double em = 0.0;            // mean exact match, refined side
  double token_f1 = 0.0;      // mean token F1, refined side
  double revise_rate = 0.0;   // final != draft after normalization, attempted only
  double stay_correct = 0.0;
  double stay_wrong = 0.0;
  double corrected = 0.0;
  double harmed = 0.0;
  size_t stay_correct_count = 0;
  size_t stay_wrong_count = 0;
  size_t helped_count = 0;  // corrected count
  size_t hurt_count = 0;    // harmed count
  size_t attempted_pairs = 0;
  size_t format_failures = 0;  // malformed verdicts + refine transport failures
  double not_attempted_rate = 0.0;
  size_t ungraded = 0;  // ids with no gold answer
  std::vector<std::string> grading_failure_ids;
};

struct TransitionRow {
  std::string id;
  std::string gold;
  std::string baseline_answer;
  std::string refined_answer;
  std::string baseline_grade;
  std::string refined_grade;
  std::string transition;  // stay_correct|stay_wrong|corrected|harmed|not_attempted|ungraded|grading_failed
  bool revised = false;
};

// Computes paired outcome transitions per question id. Both trace files
// must cover the same id set; a mismatch raises InvalidInputError listing
// the symmetric difference. `rows` (optional) receives one entry per id in
// refined-file order.
EvalReport intervention_profile(const std::vector<TraceView>& baseline,
                                const std::vector<TraceView>& refined,
                                const std::map<std::string, std::vector<std::string>>& golds,
                                Grader& grader,
                                std::vector<TransitionRow>* rows = nullptr);

std::string report_to_json(const EvalReport& report);
std::string transitions_to_csv(const std::vector<TransitionRow>& rows);

}  // namespace qrepair
