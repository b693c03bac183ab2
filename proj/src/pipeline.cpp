#include "qrepair/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "qrepair/errors.hpp"
#include "qrepair/util.hpp"

namespace qrepair {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view mode_name(PipelineMode m) {
  switch (m) {
    case PipelineMode::baseline_only: return "baseline_only";
    case PipelineMode::full: return "full";
    case PipelineMode::second_pass_original_only: return "second_pass_original_only";
    case PipelineMode::no_validator: return "no_validator";
    case PipelineMode::no_canonicalization: return "no_canonicalization";
    case PipelineMode::simple_reconsideration: return "simple_reconsideration";
  }
  return "full";
}

PipelineMode mode_from_name(std::string_view name) {
  for (PipelineMode m : {PipelineMode::baseline_only, PipelineMode::full,
                         PipelineMode::second_pass_original_only,
                         PipelineMode::no_validator,
                         PipelineMode::no_canonicalization,
                         PipelineMode::simple_reconsideration}) {
    if (mode_name(m) == name) return m;
  }
  throw ConfigError("unknown pipeline mode: " + std::string(name));
}

std::string_view trace_status_name(TraceStatus s) {
  switch (s) {
    case TraceStatus::ok: return "ok";
    case TraceStatus::not_attempted: return "not_attempted";
    case TraceStatus::error: return "error";
  }
  return "ok";
}

// ---------------------------------------------------------------------------
// Corpus loading

std::vector<QuestionRecord> load_question_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw ConfigError("cannot open corpus: " + path);

  std::vector<QuestionRecord> out;
  std::set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError("corpus line " + std::to_string(line_no) +
                        " is not valid JSON: " + e.what());
    }
    QuestionRecord q;
    if (j.contains("id") && j["id"].is_string()) {
      q.id = j["id"].get<std::string>();
    } else if (j.contains("id") && j["id"].is_number_integer()) {
      q.id = std::to_string(j["id"].get<long long>());
    }
    q.question = j.value("question", std::string());
    if (j.contains("gold") && !j["gold"].is_null()) {
      if (j["gold"].is_string()) {
        q.golds.push_back(j["gold"].get<std::string>());
      } else if (j["gold"].is_array()) {
        for (const json& g : j["gold"]) q.golds.push_back(g.get<std::string>());
      } else {
        throw ConfigError("corpus line " + std::to_string(line_no) +
                          ": gold must be a string, list, or null");
      }
    }
    if (is_blank(q.id) || q.id.find('\n') != std::string::npos) {
      throw ConfigError("corpus line " + std::to_string(line_no) + ": bad id");
    }
    if (is_blank(q.question)) {
      throw ConfigError("corpus line " + std::to_string(line_no) + ": empty question");
    }
    if (!seen.insert(q.id).second) {
      throw ConfigError("corpus has duplicate id: " + q.id);
    }
    out.push_back(std::move(q));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trace serialization

namespace {

ordered_json snippet_to_json(const EvidenceSnippet& s) {
  ordered_json j;
  j["title"] = s.title;
  if (s.url) {
    j["url"] = *s.url;
  } else {
    j["url"] = nullptr;
  }
  j["body"] = s.body;
  j["source_query"] = s.source_query;
  j["pass"] = s.pass == RetrievalPass::first ? "first" : "second";
  return j;
}

}  // namespace

std::string trace_to_jsonl(const PipelineTrace& t) {
  ordered_json j;
  j["schema"] = "v1";
  j["id"] = t.question_id;
  j["question"] = t.question;
  j["qtype"] = std::string(qtype_name(t.qtype));
  j["mode"] = std::string(mode_name(t.mode));
  j["status"] = std::string(trace_status_name(t.status));
  if (t.draft) {
    j["draft"] = ordered_json{{"text", t.draft->text},
                              {"origin", std::string(draft_origin_name(t.draft->origin))}};
  } else {
    j["draft"] = nullptr;
  }
  j["r0"] = ordered_json::array();
  for (const EvidenceSnippet& s : t.r0) j["r0"].push_back(snippet_to_json(s));
  j["expansion_queries"] = t.expansion_queries;
  j["r1"] = ordered_json::array();
  for (const EvidenceSnippet& s : t.r1) j["r1"].push_back(snippet_to_json(s));
  if (t.refiner_raw) {
    j["refiner_raw"] = *t.refiner_raw;
  } else {
    j["refiner_raw"] = nullptr;
  }
  j["refine_unavailable"] = t.refine_unavailable;
  if (t.verdict) {
    ordered_json v;
    v["decision"] = t.verdict->decision == Decision::keep ? "KEEP" : "REVISE";
    v["answer"] = t.verdict->answer;
    if (t.verdict->evidence) {
      v["evidence"] = *t.verdict->evidence;
    } else {
      v["evidence"] = nullptr;
    }
    v["parse_status"] =
        t.verdict->parse_status == ParseStatus::ok ? "ok" : "malformed";
    j["verdict"] = v;
  } else {
    j["verdict"] = nullptr;
  }
  if (t.validation) {
    ordered_json v;
    v["accepted"] = t.validation->accepted;
    if (t.validation->rejected_rule) {
      v["rejected_rule"] = std::string(rule_name(*t.validation->rejected_rule));
    } else {
      v["rejected_rule"] = nullptr;
    }
    if (t.validation->canonical_answer) {
      v["canonical_answer"] = *t.validation->canonical_answer;
    } else {
      v["canonical_answer"] = nullptr;
    }
    j["validation"] = v;
  } else {
    j["validation"] = nullptr;
  }
  j["final_answer"] = t.final_answer;
  j["counters"] = ordered_json{{"retrieval_queries", t.counters.retrieval_queries},
                               {"raw_snippets", t.counters.raw_snippets},
                               {"model_calls", t.counters.model_calls}};
  j["prompt_hash"] = t.prompt_hash;
  j["stopwords_hash"] = t.stopwords_hash;
  j["months_hash"] = t.months_hash;
  j["config_hash"] = t.config_hash;
  j["timing_ms"] = t.timing_ms;
  if (t.status == TraceStatus::error) j["error"] = t.error;

  // Model output can contain arbitrary bytes; replace invalid UTF-8 instead
  // of failing serialization.
  return j.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

// ---------------------------------------------------------------------------
// Pipeline

Pipeline::Pipeline(Backends backends, const PromptSet& prompts,
                   const ValidatorData& validator_data, PipelineOptions options)
    : backends_(backends), prompts_(prompts), validator_data_(validator_data),
      opt_(options) {
  if (backends_.retrieval == nullptr || backends_.model == nullptr) {
    throw InvalidInputError("pipeline needs retrieval and model backends");
  }
  if (opt_.k_b < 1 || opt_.k_r < 1) {
    throw InvalidInputError("k_b and k_r must be >= 1");
  }
}

void Pipeline::run_stages(const QuestionRecord& q, PipelineTrace& t) const {
  const std::string question = trim(q.question);

  // First pass. A dead retrieval backend degrades to an empty support set;
  // drafting then goes closed-book.
  std::vector<EvidenceSnippet> r0_snippets;
  try {
    r0_snippets = retrieve(*backends_.retrieval, question, opt_.k_b,
                           RetrievalPass::first);
  } catch (const RetrievalUnavailableError&) {
  }
  t.counters.retrieval_queries = 1;
  t.counters.raw_snippets = static_cast<int>(r0_snippets.size());

  EvidenceSet r0;
  r0.extend(r0_snippets);
  t.r0 = r0.snippets();

  const DraftAnswer d =
      draft(*backends_.model, prompts_, question, r0, t.qtype);
  t.draft = d;
  t.counters.model_calls = 1;

  if (opt_.mode == PipelineMode::baseline_only) {
    t.final_answer = d.text;
    return;
  }

  // Second pass.
  EvidenceSet r1 = r0;
  if (opt_.mode != PipelineMode::simple_reconsideration) {
    if (opt_.mode == PipelineMode::second_pass_original_only) {
      t.expansion_queries = {question};
    } else {
      t.expansion_queries = build_queries(question, d, t.qtype).queries;
    }
    t.counters.retrieval_queries += static_cast<int>(t.expansion_queries.size());
    for (const std::string& query : t.expansion_queries) {
      try {
        std::vector<EvidenceSnippet> snippets =
            retrieve(*backends_.retrieval, query, opt_.k_r, RetrievalPass::second);
        t.counters.raw_snippets += static_cast<int>(snippets.size());
        r1.extend(snippets);
      } catch (const RetrievalUnavailableError&) {
        // Degrade to whatever evidence is already gathered.
      }
    }
  }
  t.r1 = r1.snippets();

  // Refinement. A transport failure here keeps the draft and is counted as
  // a format failure by the report layer.
  t.counters.model_calls = 2;
  std::string raw;
  try {
    raw = refine_call(*backends_.model, prompts_, question, d, r1);
  } catch (const RefineUnavailableError&) {
    t.refine_unavailable = true;
    t.final_answer = d.text;
    return;
  }
  t.refiner_raw = raw;

  const RefinerVerdict v = parse_verdict(raw);
  t.verdict = v;
  if (v.parse_status == ParseStatus::malformed || v.decision == Decision::keep) {
    t.final_answer = d.text;
    return;
  }

  if (opt_.mode == PipelineMode::no_validator) {
    t.final_answer = canonicalize(t.qtype, v.answer);
    return;
  }

  const ValidationOutcome outcome =
      validate(question, t.qtype, d, v, validator_data_);
  t.validation = outcome;
  if (!outcome.accepted) {
    t.final_answer = d.text;
    return;
  }
  t.final_answer = opt_.mode == PipelineMode::no_canonicalization
                       ? trim(v.answer)
                       : *outcome.canonical_answer;
}

PipelineTrace Pipeline::run_question(const QuestionRecord& q) const {
  const auto started = std::chrono::steady_clock::now();

  PipelineTrace t;
  t.question_id = q.id;
  t.question = q.question;
  t.mode = opt_.mode;
  t.prompt_hash = prompts_.hash();
  t.stopwords_hash = validator_data_.stopwords_hash();
  t.months_hash = validator_data_.months_hash();
  t.config_hash = opt_.config_hash;

  try {
    t.qtype = classify(q.question);
    run_stages(q, t);
    t.status = TraceStatus::ok;
  } catch (const DraftUnavailableError&) {
    t.status = TraceStatus::not_attempted;
    t.final_answer.clear();
  } catch (const std::exception& e) {
    t.status = TraceStatus::error;
    t.error = e.what();
    t.final_answer = t.draft ? t.draft->text : std::string();
  }

  if (opt_.record_timing) {
    t.timing_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - started)
                      .count();
  } else {
    t.timing_ms = 0;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Corpus runner

namespace {

std::set<std::string> read_checkpoint(const std::string& path) {
  std::set<std::string> ids;
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) return ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.insert(line);
  }
  return ids;
}

// Keeps the clean prefix of an interrupted run: lines that parse and whose
// id was checkpointed. Returns the surviving lines in file order.
std::vector<std::string> salvage_trace_lines(const std::string& trace_path,
                                             const std::set<std::string>& checkpointed,
                                             std::set<std::string>* completed_ids) {
  std::vector<std::string> kept;
  std::ifstream in(trace_path, std::ios::binary);
  if (!in.is_open()) return kept;
  std::string line;
  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") ||
        !j["id"].is_string()) {
      continue;
    }
    const std::string id = j["id"].get<std::string>();
    if (!checkpointed.count(id) || completed_ids->count(id)) continue;
    completed_ids->insert(id);
    kept.push_back(line);
  }
  return kept;
}

}  // namespace

RunSummary run_corpus(const Pipeline& pipeline,
                      const std::vector<QuestionRecord>& questions,
                      const CorpusRunOptions& options) {
  if (questions.empty()) throw InvalidInputError("run_corpus: empty corpus");
  if (options.concurrency < 1) {
    throw InvalidInputError("run_corpus: concurrency must be >= 1");
  }
  const std::string checkpoint_path = options.checkpoint_path.empty()
                                          ? options.output_path + ".ckpt"
                                          : options.checkpoint_path;

  std::set<std::string> completed;
  if (options.resume && file_exists(options.output_path)) {
    const std::set<std::string> checkpointed = read_checkpoint(checkpoint_path);
    std::set<std::string> salvaged_ids;
    const std::vector<std::string> kept =
        salvage_trace_lines(options.output_path, checkpointed, &salvaged_ids);
    std::string rewritten;
    for (const std::string& line : kept) {
      rewritten += line;
      rewritten += '\n';
    }
    atomic_write_file(options.output_path, rewritten);
    std::string ckpt_text;
    for (const std::string& line : kept) {
      json j = json::parse(line);
      ckpt_text += j["id"].get<std::string>();
      ckpt_text += '\n';
    }
    atomic_write_file(checkpoint_path, ckpt_text);
    completed = std::move(salvaged_ids);
  }

  std::ofstream out(options.output_path,
                    options.resume ? (std::ios::binary | std::ios::app)
                                   : (std::ios::binary | std::ios::trunc));
  if (!out.is_open()) {
    throw IoError("cannot open trace output: " + options.output_path);
  }
  std::ofstream ckpt(checkpoint_path,
                     options.resume ? (std::ios::binary | std::ios::app)
                                    : (std::ios::binary | std::ios::trunc));
  if (!ckpt.is_open()) {
    throw IoError("cannot open checkpoint: " + checkpoint_path);
  }

  std::vector<size_t> pending;
  for (size_t i = 0; i < questions.size(); ++i) {
    if (!completed.count(questions[i].id)) pending.push_back(i);
  }

  RunSummary summary;
  summary.output_path = options.output_path;
  summary.total = questions.size();
  summary.skipped = questions.size() - pending.size();

  std::mutex mu;
  std::condition_variable cv;
  std::map<size_t, PipelineTrace> finished;  // pending-index -> trace
  size_t next_claim = 0;

  const size_t workers = std::min<size_t>(
      static_cast<size_t>(options.concurrency), std::max<size_t>(pending.size(), 1));

  auto work = [&]() {
    while (true) {
      size_t slot;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next_claim >= pending.size()) return;
        slot = next_claim++;
      }
      PipelineTrace t = pipeline.run_question(questions[pending[slot]]);
      {
        std::lock_guard<std::mutex> lock(mu);
        finished.emplace(slot, std::move(t));
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t i = 0; i < workers; ++i) pool.emplace_back(work);

  // Single appender: drains traces in input order as they become available.
  size_t next_write = 0;
  bool write_failed = false;
  std::string write_error;
  while (next_write < pending.size()) {
    PipelineTrace t;
    {
      std::unique_lock<std::mutex> lock(mu);
      cv.wait(lock, [&] { return finished.count(next_write) > 0; });
      t = std::move(finished.at(next_write));
      finished.erase(next_write);
    }
    ++next_write;

    if (t.status == TraceStatus::not_attempted) ++summary.not_attempted;
    if (t.status == TraceStatus::error) ++summary.errors;
    ++summary.processed;

    out << trace_to_jsonl(t) << '\n';
    out.flush();
    if (!out.good()) {
      write_failed = true;
      write_error = "trace write failed: " + options.output_path;
      break;
    }
    ckpt << t.question_id << '\n';
    ckpt.flush();
  }

  for (std::thread& th : pool) th.join();
  if (write_failed) throw IoError(write_error);
  return summary;
}

}  // namespace qrepair
