#include "qrepair/qtype.hpp"

#include <array>

#include "qrepair/errors.hpp"
#include "qrepair/util.hpp"

namespace qrepair {

namespace {

constexpr std::array kAuxVerbs = {
    "is",   "are",  "was",    "were", "do",  "does",  "did",
    "can",  "could", "will",  "would", "has", "have",  "had",
    "should", "may", "might", "must",
};

constexpr std::array kYearCues = {"what year", "in what year", "which year"};

constexpr std::array kTemporalCues = {
    "what day", "what month", "what date", "day, month, and year", "timeframe",
};

constexpr std::array kNumericCues = {"how many", "how much", "population", "number"};

constexpr std::array kLocationNouns = {
    "city", "county", "town", "village", "municipality", "neighborhood",
};

constexpr std::array kLocationPrefixes = {"what ", "which ", "in what ", "in which "};

constexpr std::array kPersonCues = {"who", "whom", "whose"};

bool any_phrase(std::string_view q, const auto& cues) {
  for (std::string_view cue : cues) {
    if (contains_phrase(q, cue)) return true;
  }
  return false;
}

bool location_cue(std::string_view q) {
  if (starts_with_word(q, "where")) return true;
  for (std::string_view prefix : kLocationPrefixes) {
    for (std::string_view noun : kLocationNouns) {
      std::string phrase(prefix);
      phrase += noun;
      if (contains_phrase(q, phrase)) return true;
    }
  }
  return false;
}

}  // namespace

QuestionType classify(std::string_view question) {
  if (is_blank(question)) {
    throw InvalidInputError("classify: question is empty");
  }
  const std::string q = lower_collapse(question);

  for (std::string_view aux : kAuxVerbs) {
    if (starts_with_word(q, aux)) return QuestionType::yesno;
  }
  if (any_phrase(q, kYearCues)) return QuestionType::year;
  if (starts_with_word(q, "when") || any_phrase(q, kTemporalCues)) {
    return QuestionType::temporal;
  }
  if (any_phrase(q, kNumericCues)) return QuestionType::numeric;
  if (location_cue(q)) return QuestionType::location;
  for (std::string_view cue : kPersonCues) {
    if (starts_with_word(q, cue)) return QuestionType::person;
  }
  return QuestionType::other;
}

bool is_slot_type(QuestionType t) {
  switch (t) {
    case QuestionType::person:
    case QuestionType::location:
    case QuestionType::temporal:
    case QuestionType::year:
    case QuestionType::numeric:
      return true;
    case QuestionType::yesno:
    case QuestionType::other:
      return false;
  }
  return false;
}

std::string_view qtype_name(QuestionType t) {
  switch (t) {
    case QuestionType::yesno: return "yesno";
    case QuestionType::year: return "year";
    case QuestionType::temporal: return "temporal";
    case QuestionType::numeric: return "numeric";
    case QuestionType::location: return "location";
    case QuestionType::person: return "person";
    case QuestionType::other: return "other";
  }
  return "other";
}

QuestionType qtype_from_name(std::string_view name) {
  if (name == "yesno") return QuestionType::yesno;
  if (name == "year") return QuestionType::year;
  if (name == "temporal") return QuestionType::temporal;
  if (name == "numeric") return QuestionType::numeric;
  if (name == "location") return QuestionType::location;
  if (name == "person") return QuestionType::person;
  if (name == "other") return QuestionType::other;
  throw InvalidInputError("unknown question type: " + std::string(name));
}

}  // namespace qrepair
