#pragma once

#include <string>
#include <vector>

#include "qrepair/model_io.hpp"
#include "qrepair/qtype.hpp"

namespace qrepair {

// Second-pass query set. The original question always comes first, the
// question‖answer concatenation second, and the bare-answer query last when
// the question type is slot-like. Candidates that duplicate an earlier
// query after normalization are collapsed, so 2 <= |queries| <= 3 and
// slot_query_included iff the bare-answer query survived.
struct ExpansionPlan {
  std::vector<std::string> queries;
  bool slot_query_included = false;
};

// Throws InvalidInputError when question or draft text is blank.
ExpansionPlan build_queries(const std::string& question,
                            const DraftAnswer& draft, QuestionType qt);

}  // namespace qrepair
