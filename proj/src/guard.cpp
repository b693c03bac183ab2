#include "qrepair/guard.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "qrepair/errors.hpp"
#include "qrepair/util.hpp"

namespace qrepair {

std::string_view rule_name(RejectRule r) {
  switch (r) {
    case RejectRule::r1_degenerate: return "r1_degenerate";
    case RejectRule::r2_yesno_form: return "r2_yesno_form";
    case RejectRule::r3_entity_shape: return "r3_entity_shape";
    case RejectRule::r4_missing_marker: return "r4_missing_marker";
    case RejectRule::r5_no_evidence: return "r5_no_evidence";
    case RejectRule::r6_ungrounded: return "r6_ungrounded";
  }
  return "r1_degenerate";
}

// ---------------------------------------------------------------------------
// ValidatorData

namespace {

std::vector<std::string> parse_word_list(const std::string& text) {
  std::vector<std::string> out;
  for (const std::string& line : split_ws(text)) {
    out.push_back(to_lower(line));
  }
  return out;
}

}  // namespace

ValidatorData ValidatorData::from_text(const std::string& stopwords_text,
                                       const std::string& months_text) {
  ValidatorData d;
  for (std::string& w : parse_word_list(stopwords_text)) d.stopwords_.insert(std::move(w));
  d.months_ = parse_word_list(months_text);
  d.stopwords_hash_ = fnv1a64_hex(stopwords_text);
  d.months_hash_ = fnv1a64_hex(months_text);
  if (d.stopwords_.empty()) throw ConfigError("stopword list is empty");
  if (d.months_.empty()) throw ConfigError("month list is empty");
  return d;
}

ValidatorData ValidatorData::load(const std::string& stopwords_path,
                                  const std::string& months_path) {
  return from_text(read_file(stopwords_path), read_file(months_path));
}

bool ValidatorData::is_stopword(const std::string& token) const {
  return stopwords_.count(token) > 0;
}

std::optional<std::string> ValidatorData::month_marker(const std::string& token) const {
  for (const std::string& m : months_) {
    if (token == m || (token.size() == 3 && m.rfind(token, 0) == 0)) {
      return m.substr(0, 3);
    }
  }
  return std::nullopt;
}

bool ValidatorData::is_month(const std::string& token) const {
  return month_marker(token).has_value();
}

// ---------------------------------------------------------------------------
// Grounding

namespace {

bool has_digit(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c) != 0;
  });
}

std::string strip_outer_punct(std::string_view tok) {
  size_t b = 0, e = tok.size();
  while (b < e && std::ispunct(static_cast<unsigned char>(tok[b]))) ++b;
  while (e > b && std::ispunct(static_cast<unsigned char>(tok[e - 1]))) --e;
  return std::string(tok.substr(b, e - b));
}

std::string strip_commas(std::string tok) {
  tok.erase(std::remove(tok.begin(), tok.end(), ','), tok.end());
  return tok;
}

}  // namespace

std::vector<std::string> marker_tokens(std::string_view text,
                                       const ValidatorData& data) {
  std::vector<std::string> out;
  for (const std::string& raw : split_ws(to_lower(text))) {
    const std::string tok = strip_outer_punct(raw);
    if (tok.empty()) continue;
    if (has_digit(tok)) {
      out.push_back(strip_commas(tok));
    } else if (auto m = data.month_marker(tok)) {
      out.push_back(*m);
    }
  }
  return out;
}

bool marker_grounding(std::string_view answer, std::string_view evidence,
                      const ValidatorData& data) {
  const std::vector<std::string> want = marker_tokens(answer, data);
  const std::vector<std::string> have = marker_tokens(evidence, data);
  for (const std::string& w : want) {
    if (std::find(have.begin(), have.end(), w) != have.end()) return true;
  }
  return false;
}

EntityGrounding entity_grounding(std::string_view answer,
                                 std::string_view evidence,
                                 const ValidatorData& data) {
  EntityGrounding g;
  const std::vector<std::string> answer_tokens = split_ws(normalize_loose(answer));
  const std::vector<std::string> evidence_tokens = split_ws(normalize_loose(evidence));
  if (answer_tokens.empty() || evidence_tokens.empty()) return g;

  for (const std::string& t : answer_tokens) {
    if (data.is_stopword(t)) continue;
    if (std::find(evidence_tokens.begin(), evidence_tokens.end(), t) !=
        evidence_tokens.end()) {
      g.any_overlap = true;
      break;
    }
  }

  // Near-contiguous: every answer token inside some evidence window of
  // length |answer| + 2.
  const size_t window = answer_tokens.size() + 2;
  for (size_t start = 0; start < evidence_tokens.size(); ++start) {
    const size_t end = std::min(start + window, evidence_tokens.size());
    bool all = true;
    for (const std::string& t : answer_tokens) {
      bool found = false;
      for (size_t i = start; i < end; ++i) {
        if (evidence_tokens[i] == t) {
          found = true;
          break;
        }
      }
      if (!found) {
        all = false;
        break;
      }
    }
    if (all) {
      g.near_contiguous = true;
      break;
    }
    if (end == evidence_tokens.size()) break;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

constexpr std::array kNonResponsive = {
    "unknown",      "none",         "n a",          "na",
    "no answer",    "not available", "not found",   "unclear",
    "i don t know", "i dont know",  "cannot determine", "no idea",
    "it depends",   "not sure",
};

bool is_non_responsive(const std::string& normalized_answer) {
  for (std::string_view s : kNonResponsive) {
    if (normalized_answer == s) return true;
  }
  return false;
}

bool is_entity_style(QuestionType qt) {
  return qt == QuestionType::person || qt == QuestionType::location ||
         qt == QuestionType::other;
}

constexpr std::array kClauseMarkers = {" who ", " which ", " that ",
                                       " because ", " when "};

constexpr std::array kDescriptorOpeners = {"the answer is", "it is", "he is",
                                           "she is"};

// "a"/"an"/"the" followed by a lowercased (common-noun) token in the
// original surface form.
bool begins_with_article_common_noun(const std::string& answer) {
  const std::string t = collapse_ws(answer);
  const std::string lower = to_lower(t);
  size_t article_len = 0;
  if (starts_with_word(lower, "the")) {
    article_len = 3;
  } else if (starts_with_word(lower, "an")) {
    article_len = 2;
  } else if (starts_with_word(lower, "a")) {
    article_len = 1;
  } else {
    return false;
  }
  size_t p = article_len;
  while (p < t.size() && t[p] == ' ') ++p;
  if (p >= t.size()) return false;
  const unsigned char first = static_cast<unsigned char>(t[p]);
  return std::isalpha(first) != 0 && std::islower(first) != 0;
}

bool entity_shape_violation(const std::string& answer) {
  const std::string lower = lower_collapse(answer);
  for (std::string_view marker : kClauseMarkers) {
    if (lower.find(marker) != std::string::npos) return true;
  }
  if (split_ws(lower).size() > 8) return true;
  for (std::string_view opener : kDescriptorOpeners) {
    if (starts_with_word(lower, opener)) return true;
  }
  return begins_with_article_common_noun(answer);
}

bool is_marker_type(QuestionType qt) {
  return qt == QuestionType::temporal || qt == QuestionType::year ||
         qt == QuestionType::numeric;
}

}  // namespace

ValidationOutcome validate(const std::string& question, QuestionType qt,
                           const DraftAnswer& draft,
                           const RefinerVerdict& verdict,
                           const ValidatorData& data) {
  if (verdict.parse_status != ParseStatus::ok || verdict.decision != Decision::revise) {
    throw InvalidInputError("validate: only well-formed REVISE verdicts are validated");
  }

  auto reject = [](RejectRule r) {
    ValidationOutcome out;
    out.accepted = false;
    out.rejected_rule = r;
    return out;
  };

  const std::string answer = trim(verdict.answer);
  const std::string norm_answer = normalize_loose(answer);

  // r1: empty, non-responsive, or identical to the draft after normalization.
  if (norm_answer.empty() || is_non_responsive(norm_answer) ||
      norm_answer == normalize_loose(draft.text) ||
      norm_answer == normalize_loose(question)) {
    return reject(RejectRule::r1_degenerate);
  }

  // r2: yes/no questions take exactly yes or no.
  if (qt == QuestionType::yesno && norm_answer != "yes" && norm_answer != "no") {
    return reject(RejectRule::r2_yesno_form);
  }

  // r3: entity-style answers must look like short noun phrases.
  if (is_entity_style(qt) && entity_shape_violation(answer)) {
    return reject(RejectRule::r3_entity_shape);
  }

  // r4: temporal/year/numeric answers need an explicit marker.
  if (is_marker_type(qt) && marker_tokens(answer, data).empty()) {
    return reject(RejectRule::r4_missing_marker);
  }

  // r5: a revision must cite evidence.
  if (!verdict.evidence || is_blank(*verdict.evidence)) {
    return reject(RejectRule::r5_no_evidence);
  }

  // r6: necessary lexical grounding in the cited evidence. Yes/no answers
  // carry no groundable surface token, so the check applies to marker and
  // entity types only.
  if (is_marker_type(qt)) {
    if (!marker_grounding(answer, *verdict.evidence, data)) {
      return reject(RejectRule::r6_ungrounded);
    }
  } else if (is_entity_style(qt)) {
    if (!entity_grounding(answer, *verdict.evidence, data).any_overlap) {
      return reject(RejectRule::r6_ungrounded);
    }
  }

  ValidationOutcome out;
  out.accepted = true;
  out.canonical_answer = canonicalize(qt, answer);
  return out;
}

// ---------------------------------------------------------------------------
// Canonicalization

namespace {

std::string strip_trailing_punct(std::string s) {
  static const std::string kTrail = ".,;:!?";
  while (!s.empty() && kTrail.find(s.back()) != std::string::npos) s.pop_back();
  return trim(s);
}

std::string remove_parentheticals(const std::string& s) {
  std::string out;
  int depth = 0;
  for (char c : s) {
    if (c == '(') {
      ++depth;
    } else if (c == ')') {
      if (depth > 0) --depth;
    } else if (depth == 0) {
      out.push_back(c);
    }
  }
  return collapse_ws(out);
}

std::string drop_leading_words(const std::string& s,
                               const std::vector<std::string_view>& words) {
  std::vector<std::string> tokens = split_ws(s);
  size_t start = 0;
  while (start + 1 < tokens.size()) {
    const std::string lower = to_lower(tokens[start]);
    if (std::find(words.begin(), words.end(), lower) == words.end()) break;
    ++start;
  }
  std::string out;
  for (size_t i = start; i < tokens.size(); ++i) {
    if (!out.empty()) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::string extract_four_digit_year(const std::string& s) {
  size_t run_start = 0, run_len = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    const bool digit = i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]));
    if (digit) {
      if (run_len == 0) run_start = i;
      ++run_len;
    } else {
      if (run_len == 4) return s.substr(run_start, 4);
      run_len = 0;
    }
  }
  return {};
}

bool is_magnitude_word(const std::string& token) {
  const std::string t = to_lower(strip_outer_punct(token));
  return t == "thousand" || t == "million" || t == "billion";
}

std::string compact_number_span(const std::string& s) {
  const std::vector<std::string> tokens = split_ws(remove_parentheticals(s));
  const size_t n = tokens.size();

  auto digit_bearing = [](const std::string& tok) {
    return has_digit(strip_commas(tok));
  };
  auto qualifies = [&](const std::string& tok) {
    return digit_bearing(tok) || is_magnitude_word(tok);
  };

  size_t best_start = 0, best_len = 0;
  size_t i = 0;
  while (i < n) {
    if (!qualifies(tokens[i])) {
      ++i;
      continue;
    }
    size_t j = i;
    bool any_digit = false;
    while (j < n && qualifies(tokens[j])) {
      any_digit = any_digit || digit_bearing(tokens[j]);
      ++j;
    }
    if (any_digit && j - i > best_len) {
      best_start = i;
      best_len = j - i;
    }
    i = j;
  }
  if (best_len == 0) return {};

  std::string out;
  for (size_t k = best_start; k < best_start + best_len; ++k) {
    if (!out.empty()) out.push_back(' ');
    out += tokens[k];
  }
  return strip_trailing_punct(std::move(out));
}

}  // namespace

std::string canonicalize(QuestionType qt, const std::string& answer) {
  if (is_blank(answer)) throw InvalidInputError("canonicalize: empty answer");
  const std::string trimmed = trim(answer);
  std::string result;

  switch (qt) {
    case QuestionType::yesno: {
      const std::string n = normalize_loose(trimmed);
      if (n == "yes" || n == "no") result = n;
      break;
    }
    case QuestionType::year:
      result = extract_four_digit_year(trimmed);
      break;
    case QuestionType::temporal:
      result = strip_trailing_punct(
          drop_leading_words(trimmed, {"on", "in", "at", "during", "since", "by", "the"}));
      break;
    case QuestionType::numeric:
      result = compact_number_span(trimmed);
      break;
    case QuestionType::location:
      result = strip_trailing_punct(
          drop_leading_words(trimmed, {"in", "at", "on", "near", "from"}));
      break;
    case QuestionType::person:
      result = strip_trailing_punct(remove_parentheticals(trimmed));
      break;
    case QuestionType::other:
      result = strip_trailing_punct(trimmed);
      break;
  }

  if (result.empty()) return trimmed;
  return result;
}

}  // namespace qrepair
