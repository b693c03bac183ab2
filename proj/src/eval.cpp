#include "qrepair/eval.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "qrepair/errors.hpp"
#include "qrepair/retrieval_backends.hpp"
#include "qrepair/util.hpp"

namespace qrepair {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view grade_label_name(GradeLabel g) {
  switch (g) {
    case GradeLabel::correct: return "correct";
    case GradeLabel::incorrect: return "incorrect";
    case GradeLabel::not_attempted: return "not_attempted";
  }
  return "incorrect";
}

// ---------------------------------------------------------------------------
// Metrics

std::string squad_normalize(std::string_view s) {
  std::string lowered;
  lowered.reserve(s.size());
  for (char c : s) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (std::ispunct(u)) continue;  // delete punctuation
    lowered.push_back(static_cast<char>(std::tolower(u)));
  }
  std::string out;
  for (const std::string& tok : split_ws(lowered)) {
    if (tok == "a" || tok == "an" || tok == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

int exact_match(const std::string& pred, const std::vector<std::string>& golds) {
  if (golds.empty()) throw InvalidInputError("exact_match: no gold answers");
  const std::string p = squad_normalize(pred);
  for (const std::string& g : golds) {
    if (p == squad_normalize(g)) return 1;
  }
  return 0;
}

namespace {

double pair_token_f1(const std::vector<std::string>& pred_tokens,
                     const std::vector<std::string>& gold_tokens) {
  if (pred_tokens.empty() && gold_tokens.empty()) return 1.0;
  if (pred_tokens.empty() || gold_tokens.empty()) return 0.0;

  std::map<std::string, int> gold_counts;
  for (const std::string& t : gold_tokens) ++gold_counts[t];
  int common = 0;
  for (const std::string& t : pred_tokens) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / pred_tokens.size();
  const double recall = static_cast<double>(common) / gold_tokens.size();
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double token_f1(const std::string& pred, const std::vector<std::string>& golds) {
  if (golds.empty()) throw InvalidInputError("token_f1: no gold answers");
  const std::vector<std::string> pred_tokens = split_ws(squad_normalize(pred));
  double best = 0.0;
  for (const std::string& g : golds) {
    best = std::max(best, pair_token_f1(pred_tokens, split_ws(squad_normalize(g))));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Graders

GradeLabel DefaultGrader::grade(const std::string& /*question*/,
                                const std::string& pred,
                                const std::vector<std::string>& golds) {
  if (is_blank(pred)) return GradeLabel::not_attempted;
  return exact_match(pred, golds) == 1 ? GradeLabel::correct : GradeLabel::incorrect;
}

namespace {

constexpr char kBuiltinGraderTemplate[] =
    "Grade the predicted answer against the gold answer.\n"
    "Reply with a single letter: A if the prediction is correct, B if it is\n"
    "incorrect, C if the prediction does not attempt to answer.\n"
    "\n"
    "Question: {question}\n"
    "Gold answer: {gold}\n"
    "Predicted answer: {pred}\n"
    "\n"
    "Grade:";

std::string substitute_all(std::string text, std::string_view key,
                           const std::string& value) {
  const std::string needle = "{" + std::string(key) + "}";
  size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

std::optional<GradeLabel> find_letter_grade(const std::string& reply) {
  for (size_t i = 0; i < reply.size(); ++i) {
    const char c = reply[i];
    if (c != 'A' && c != 'B' && c != 'C') continue;
    const bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(reply[i - 1]));
    const bool right_ok =
        i + 1 >= reply.size() || !std::isalnum(static_cast<unsigned char>(reply[i + 1]));
    if (!left_ok || !right_ok) continue;
    if (c == 'A') return GradeLabel::correct;
    if (c == 'B') return GradeLabel::incorrect;
    return GradeLabel::not_attempted;
  }
  return std::nullopt;
}

}  // namespace

ExternalGrader::ExternalGrader(ExternalGraderConfig cfg) : cfg_(std::move(cfg)) {
  token_ = auth_token_from_env(cfg_.auth_env);
  template_text_ = cfg_.template_path.empty() ? kBuiltinGraderTemplate
                                              : read_file(cfg_.template_path);
}

GradeLabel ExternalGrader::grade(const std::string& question,
                                 const std::string& pred,
                                 const std::vector<std::string>& golds) {
  std::string gold_text;
  for (const std::string& g : golds) {
    if (!gold_text.empty()) gold_text += " | ";
    gold_text += g;
  }
  std::string prompt = substitute_all(template_text_, "question", question);
  prompt = substitute_all(std::move(prompt), "pred", pred);
  prompt = substitute_all(std::move(prompt), "gold", gold_text);

  const json payload{
      {"model", cfg_.model_name},
      {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
      {"temperature", 0.0},
  };

  const UrlParts url = split_url(cfg_.endpoint);
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::duration<double>(0.25 * std::pow(2.0, attempt - 1)));
    }
    httplib::Client client(url.origin);
    client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    auto res = client.Post(url.path, headers, payload.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_error = "server status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw PayloadError("grader endpoint returned status " + std::to_string(res->status));
    }
    std::string content;
    try {
      content = json::parse(res->body)
                    .at("choices").at(0).at("message").at("content")
                    .get<std::string>();
    } catch (const json::exception&) {
      throw PayloadError("grader response has no choices[0].message.content");
    }
    if (auto label = find_letter_grade(content)) return *label;
    throw PayloadError("grader reply has no letter grade: " + content);
  }
  throw GradingUnavailableError("grading unavailable after retries: " + last_error);
}

GradeLabel grade(Grader& grader, const std::string& question,
                 const std::string& pred, const std::vector<std::string>& golds) {
  if (is_blank(pred)) return GradeLabel::not_attempted;
  return grader.grade(question, pred, golds);
}

// ---------------------------------------------------------------------------
// Trace loading

std::vector<TraceView> load_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw IoError("cannot open trace file: " + path);

  std::vector<TraceView> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError(path + ": line " + std::to_string(line_no) +
                        " is not valid JSON: " + e.what());
    }
    TraceView v;
    v.id = j.value("id", std::string());
    v.question = j.value("question", std::string());
    if (j.contains("draft") && j["draft"].is_object()) {
      v.draft_text = j["draft"].value("text", std::string());
    }
    v.final_answer = j.value("final_answer", std::string());
    const std::string status = j.value("status", std::string("ok"));
    v.status = status == "not_attempted" ? TraceStatus::not_attempted
               : status == "error"       ? TraceStatus::error
                                         : TraceStatus::ok;
    v.refine_unavailable = j.value("refine_unavailable", false);
    if (j.contains("verdict") && j["verdict"].is_object()) {
      v.malformed = j["verdict"].value("parse_status", std::string("ok")) == "malformed";
    }
    if (v.id.empty()) {
      throw ConfigError(path + ": line " + std::to_string(line_no) + " has no id");
    }
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Intervention profile

namespace {

std::string join_ids(const std::vector<std::string>& ids, size_t limit = 10) {
  std::string out;
  for (size_t i = 0; i < ids.size() && i < limit; ++i) {
    if (!out.empty()) out += ", ";
    out += ids[i];
  }
  if (ids.size() > limit) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

}  // namespace

EvalReport intervention_profile(
    const std::vector<TraceView>& baseline, const std::vector<TraceView>& refined,
    const std::map<std::string, std::vector<std::string>>& golds, Grader& grader,
    std::vector<TransitionRow>* rows) {
  std::map<std::string, const TraceView*> base_by_id;
  for (const TraceView& t : baseline) base_by_id[t.id] = &t;

  // The two runs must cover the same questions.
  std::vector<std::string> only_baseline, only_refined;
  std::set<std::string> refined_ids;
  for (const TraceView& t : refined) refined_ids.insert(t.id);
  for (const auto& [id, ptr] : base_by_id) {
    if (!refined_ids.count(id)) only_baseline.push_back(id);
  }
  for (const TraceView& t : refined) {
    if (!base_by_id.count(t.id)) only_refined.push_back(t.id);
  }
  if (!only_baseline.empty() || !only_refined.empty()) {
    throw InvalidInputError(
        "trace id sets differ; only in baseline: [" + join_ids(only_baseline) +
        "], only in refined: [" + join_ids(only_refined) + "]");
  }

  EvalReport r;
  r.n = refined.size();

  size_t correct = 0, not_attempted = 0, revised = 0, attempted = 0;
  double em_sum = 0.0, f1_sum = 0.0;
  size_t graded = 0, graded_not_attempted = 0;

  for (const TraceView& t : refined) {
    const TraceView& b = *base_by_id.at(t.id);

    if (t.malformed || t.refine_unavailable) ++r.format_failures;

    const bool t_attempted = !is_blank(t.final_answer);
    if (!t_attempted) ++not_attempted;
    if (t_attempted) {
      ++attempted;
      if (normalize_loose(t.final_answer) != normalize_loose(t.draft_text)) ++revised;
    }

    TransitionRow row;
    row.id = t.id;
    row.baseline_answer = b.final_answer;
    row.refined_answer = t.final_answer;
    row.revised = t_attempted &&
                  normalize_loose(t.final_answer) != normalize_loose(t.draft_text);

    auto git = golds.find(t.id);
    if (git == golds.end() || git->second.empty()) {
      ++r.ungraded;
      row.transition = "ungraded";
      if (rows) rows->push_back(std::move(row));
      continue;
    }
    const std::vector<std::string>& gold = git->second;
    row.gold = gold.front();

    GradeLabel bg, tg;
    try {
      bg = grade(grader, b.question, b.final_answer, gold);
      tg = grade(grader, t.question, t.final_answer, gold);
    } catch (const GradingUnavailableError&) {
      r.grading_failure_ids.push_back(t.id);
      row.transition = "grading_failed";
      if (rows) rows->push_back(std::move(row));
      continue;
    }
    ++graded;
    row.baseline_grade = grade_label_name(bg);
    row.refined_grade = grade_label_name(tg);

    em_sum += exact_match(t.final_answer, gold);
    f1_sum += token_f1(t.final_answer, gold);
    if (tg == GradeLabel::correct) ++correct;
    if (tg == GradeLabel::not_attempted) ++graded_not_attempted;

    if (bg == GradeLabel::not_attempted || tg == GradeLabel::not_attempted) {
      row.transition = "not_attempted";
    } else if (bg == GradeLabel::correct && tg == GradeLabel::correct) {
      ++r.stay_correct_count;
      row.transition = "stay_correct";
    } else if (bg == GradeLabel::incorrect && tg == GradeLabel::incorrect) {
      ++r.stay_wrong_count;
      row.transition = "stay_wrong";
    } else if (bg == GradeLabel::incorrect && tg == GradeLabel::correct) {
      ++r.helped_count;
      row.transition = "corrected";
    } else {
      ++r.hurt_count;
      row.transition = "harmed";
    }
    if (rows) rows->push_back(std::move(row));
  }

  r.attempted_pairs = r.stay_correct_count + r.stay_wrong_count +
                      r.helped_count + r.hurt_count;
  if (r.attempted_pairs > 0) {
    const double d = static_cast<double>(r.attempted_pairs);
    r.stay_correct = r.stay_correct_count / d;
    r.stay_wrong = r.stay_wrong_count / d;
    r.corrected = r.helped_count / d;
    r.harmed = r.hurt_count / d;
  }
  if (graded > 0) {
    r.em = em_sum / static_cast<double>(graded);
    r.token_f1 = f1_sum / static_cast<double>(graded);
    r.correct_rate = static_cast<double>(correct) / static_cast<double>(graded);
    const size_t graded_attempted = graded - graded_not_attempted;
    const double given_attempted =
        graded_attempted > 0 ? static_cast<double>(correct) / graded_attempted : 0.0;
    r.f1 = (given_attempted + r.correct_rate) > 0
               ? 2.0 * given_attempted * r.correct_rate /
                     (given_attempted + r.correct_rate)
               : 0.0;
  }
  if (attempted > 0) r.revise_rate = static_cast<double>(revised) / attempted;
  if (r.n > 0) r.not_attempted_rate = static_cast<double>(not_attempted) / r.n;
  return r;
}

std::string report_to_json(const EvalReport& r) {
  ordered_json j;
  j["schema"] = "report-v1";
  j["n"] = r.n;
  j["correct_rate"] = r.correct_rate;
  j["f1"] = r.f1;
  j["em"] = r.em;
  j["token_f1"] = r.token_f1;
  j["revise_rate"] = r.revise_rate;
  j["transitions"] = ordered_json{
      {"stay_correct", r.stay_correct},
      {"stay_wrong", r.stay_wrong},
      {"corrected", r.corrected},
      {"harmed", r.harmed},
  };
  j["counts"] = ordered_json{
      {"stay_correct", r.stay_correct_count},
      {"stay_wrong", r.stay_wrong_count},
      {"helped", r.helped_count},
      {"hurt", r.hurt_count},
      {"attempted_pairs", r.attempted_pairs},
  };
  j["helped_count"] = r.helped_count;
  j["hurt_count"] = r.hurt_count;
  j["format_failures"] = r.format_failures;
  j["not_attempted_rate"] = r.not_attempted_rate;
  j["ungraded"] = r.ungraded;
  j["grading_failures"] = r.grading_failure_ids.size();
  j["grading_failure_ids"] = r.grading_failure_ids;
  return j.dump(2);
}

namespace {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

}  // namespace

std::string transitions_to_csv(const std::vector<TransitionRow>& rows) {
  std::string out =
      "id,gold,baseline_answer,refined_answer,baseline_grade,refined_grade,"
      "transition,revised\n";
  for (const TransitionRow& r : rows) {
    out += csv_escape(r.id) + ',' + csv_escape(r.gold) + ',' +
           csv_escape(r.baseline_answer) + ',' + csv_escape(r.refined_answer) +
           ',' + csv_escape(r.baseline_grade) + ',' + csv_escape(r.refined_grade) +
           ',' + csv_escape(r.transition) + ',' + (r.revised ? "1" : "0") + '\n';
  }
  return out;
}

}  // namespace qrepair
