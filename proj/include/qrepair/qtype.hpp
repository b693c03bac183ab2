#pragma once

#include <string>
#include <string_view>

namespace qrepair {

// Coarse question type used to route query expansion, validation, and
// canonicalization. Classification depends only on the question string.
enum class QuestionType {
  yesno,
  year,
  temporal,
  numeric,
  location,
  person,
  other,
};

// Total, deterministic classification. Rules fire in fixed precedence:
// yesno > year > temporal > numeric > location > person > other.
// Throws InvalidInputError when the question is empty after trimming.
QuestionType classify(std::string_view question);

// True for slot-like types, which additionally receive a bare-answer
// expansion query: person, location, temporal, year, numeric.
bool is_slot_type(QuestionType t);

std::string_view qtype_name(QuestionType t);

// Inverse of qtype_name; throws InvalidInputError on unknown names.
QuestionType qtype_from_name(std::string_view name);

}  // namespace qrepair
