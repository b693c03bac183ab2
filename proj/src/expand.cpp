#include "qrepair/expand.hpp"

#include "qrepair/errors.hpp"
#include "qrepair/util.hpp"

namespace qrepair {

ExpansionPlan build_queries(const std::string& question,
                            const DraftAnswer& draft, QuestionType qt) {
  if (is_blank(question)) throw InvalidInputError("build_queries: empty question");
  if (is_blank(draft.text)) throw InvalidInputError("build_queries: empty draft answer");

  const std::string q = trim(question);
  const std::string answer = trim(draft.text);

  ExpansionPlan plan;
  auto push_unique = [&plan](const std::string& candidate) {
    const std::string norm = lower_collapse(candidate);
    for (const std::string& existing : plan.queries) {
      if (lower_collapse(existing) == norm) return false;
    }
    plan.queries.push_back(candidate);
    return true;
  };

  push_unique(q);
  // The answer-conditioned query: question, separator, quoted draft answer.
  push_unique(q + " \"" + answer + "\"");
  if (is_slot_type(qt)) {
    plan.slot_query_included = push_unique(answer);
  }
  return plan;
}

}  // namespace qrepair
