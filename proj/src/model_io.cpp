#include "qrepair/model_io.hpp"

#include <cctype>
#include <map>
#include <sstream>

#include "qrepair/errors.hpp"
#include "qrepair/util.hpp"

namespace qrepair {

std::string_view draft_origin_name(DraftOrigin o) {
  switch (o) {
    case DraftOrigin::retrieved: return "retrieved";
    case DraftOrigin::closed_book: return "closed_book";
    case DraftOrigin::type_default: return "type_default";
  }
  return "retrieved";
}

// ---------------------------------------------------------------------------
// PromptSet

namespace {

std::string substitute(std::string text, std::string_view key,
                       const std::string& value) {
  const std::string needle = "{" + std::string(key) + "}";
  size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace

PromptSet PromptSet::from_text(const std::string& text) {
  std::map<std::string, std::string> sections;
  std::string current;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.size() >= 2 && t.front() == '[' && t.back() == ']') {
      current = t.substr(1, t.size() - 2);
      continue;
    }
    if (current.empty()) continue;  // preamble / comments
    sections[current] += line;
    sections[current] += '\n';
  }

  PromptSet p;
  for (const char* name : {"draft_evidence", "draft_closed_book", "refine"}) {
    auto it = sections.find(name);
    if (it == sections.end() || is_blank(it->second)) {
      throw ConfigError(std::string("prompt template file is missing section [") +
                        name + "]");
    }
  }
  p.draft_evidence_ = trim(sections["draft_evidence"]);
  p.draft_closed_book_ = trim(sections["draft_closed_book"]);
  p.refine_ = trim(sections["refine"]);
  p.hash_ = fnv1a64_hex(text);
  return p;
}

PromptSet PromptSet::load(const std::string& path) {
  return from_text(read_file(path));
}

std::string render_evidence_block(const EvidenceSet& evidence) {
  if (evidence.empty()) return "(no evidence retrieved)";
  std::string out;
  size_t i = 0;
  for (const EvidenceSnippet& s : evidence.snippets()) {
    ++i;
    out += "[" + std::to_string(i) + "] ";
    if (!is_blank(s.title)) {
      out += trim(s.title);
      out += ": ";
    }
    std::string body = collapse_ws(s.body);
    if (body.size() > kPromptSnippetMaxChars) body.resize(kPromptSnippetMaxChars);
    out += body;
    out += '\n';
  }
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::string PromptSet::render_draft(const std::string& question,
                                    const EvidenceSet& evidence) const {
  std::string p = substitute(draft_evidence_, "question", question);
  return substitute(std::move(p), "evidence", render_evidence_block(evidence));
}

std::string PromptSet::render_closed_book(const std::string& question) const {
  return substitute(draft_closed_book_, "question", question);
}

std::string PromptSet::render_refine(const std::string& question,
                                     const std::string& draft,
                                     const EvidenceSet& evidence) const {
  std::string p = substitute(refine_, "question", question);
  p = substitute(std::move(p), "draft", draft);
  return substitute(std::move(p), "evidence", render_evidence_block(evidence));
}

// ---------------------------------------------------------------------------
// Drafting

std::string type_default_answer(QuestionType qt) {
  switch (qt) {
    case QuestionType::yesno: return "no";
    case QuestionType::numeric: return "0";
    case QuestionType::year:
    case QuestionType::temporal:
    case QuestionType::location:
    case QuestionType::person:
    case QuestionType::other:
      return "unknown";
  }
  return "unknown";
}

namespace {

// A usable short answer: first non-blank line, trimmed.
std::string clean_answer(const std::string& raw) {
  std::istringstream in(raw);
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (!t.empty()) return t;
  }
  return {};
}

}  // namespace

DraftAnswer draft(ModelBackend& model, const PromptSet& prompts,
                  const std::string& question, const EvidenceSet& evidence,
                  QuestionType qt) {
  bool quality_failure = false;
  std::string transport_detail;

  if (!evidence.empty()) {
    try {
      std::string answer = clean_answer(model.complete(prompts.render_draft(question, evidence)));
      if (!answer.empty()) return DraftAnswer{std::move(answer), DraftOrigin::retrieved};
      quality_failure = true;
    } catch (const TransportError& e) {
      transport_detail = e.what();
    }
  }

  try {
    std::string answer = clean_answer(model.complete(prompts.render_closed_book(question)));
    if (!answer.empty()) return DraftAnswer{std::move(answer), DraftOrigin::closed_book};
    quality_failure = true;
  } catch (const TransportError& e) {
    transport_detail = e.what();
  }

  if (quality_failure) {
    return DraftAnswer{type_default_answer(qt), DraftOrigin::type_default};
  }
  throw DraftUnavailableError("draft unavailable: " + transport_detail);
}

std::string refine_call(ModelBackend& model, const PromptSet& prompts,
                        const std::string& question, const DraftAnswer& draft,
                        const EvidenceSet& evidence) {
  try {
    return model.complete(prompts.render_refine(question, draft.text, evidence));
  } catch (const TransportError& e) {
    throw RefineUnavailableError(std::string("refine unavailable: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Verdict parsing

namespace {

// Matches "<field> :" at the start of a trimmed line, case-insensitively;
// returns the value part when it matches.
bool match_field(const std::string& line, std::string_view field,
                 std::string* value) {
  size_t i = 0;
  while (i < line.size() &&
         std::isspace(static_cast<unsigned char>(line[i]))) {
    ++i;
  }
  size_t j = 0;
  while (j < field.size() && i + j < line.size()) {
    const char a = static_cast<char>(std::tolower(static_cast<unsigned char>(line[i + j])));
    if (a != field[j]) return false;
    ++j;
  }
  if (j != field.size()) return false;
  size_t p = i + j;
  while (p < line.size() && std::isspace(static_cast<unsigned char>(line[p]))) ++p;
  if (p >= line.size() || line[p] != ':') return false;
  *value = trim(std::string_view(line).substr(p + 1));
  return true;
}

RefinerVerdict malformed_verdict() {
  RefinerVerdict v;
  v.decision = Decision::keep;
  v.answer.clear();
  v.evidence.reset();
  v.parse_status = ParseStatus::malformed;
  return v;
}

}  // namespace

RefinerVerdict parse_verdict(const std::string& raw) {
  std::optional<std::string> decision_text, answer_text, evidence_text;

  std::string line;
  std::istringstream in(raw);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string value;
    if (match_field(line, "decision", &value)) {
      if (decision_text) return malformed_verdict();  // duplicate field
      decision_text = value;
    } else if (match_field(line, "answer", &value)) {
      if (answer_text) return malformed_verdict();
      answer_text = value;
    } else if (match_field(line, "evidence", &value)) {
      if (evidence_text) return malformed_verdict();
      evidence_text = value;
    }
    // Anything else is surrounding prose; ignore it.
  }

  if (!decision_text || !answer_text || !evidence_text) return malformed_verdict();

  // Decision token: case-insensitive, tolerating trailing periods.
  std::string token = to_lower(*decision_text);
  while (!token.empty() && token.back() == '.') token.pop_back();
  token = trim(token);

  RefinerVerdict v;
  if (token == "keep") {
    v.decision = Decision::keep;
  } else if (token == "revise") {
    v.decision = Decision::revise;
  } else {
    return malformed_verdict();
  }

  v.answer = trim(*answer_text);
  if (v.answer.empty()) return malformed_verdict();

  const std::string ev = trim(*evidence_text);
  if (!ev.empty() && to_lower(ev) != "none") v.evidence = ev;
  v.parse_status = ParseStatus::ok;
  return v;
}

std::string render_verdict(Decision d, const std::string& answer,
                           const std::optional<std::string>& evidence) {
  std::string out = "DECISION: ";
  out += (d == Decision::keep) ? "KEEP" : "REVISE";
  out += "\nANSWER: " + answer;
  out += "\nEVIDENCE: " + (evidence ? *evidence : std::string("NONE"));
  return out;
}

}  // namespace qrepair
