#include <fstream>
#include <random>

#include "doctest.h"

#include "qrepair/errors.hpp"
#include "qrepair/pipeline.hpp"
#include "qrepair/util.hpp"
#include "test_support.hpp"

using namespace qrepair;

namespace {

PipelineOptions opts(PipelineMode mode) {
  PipelineOptions o;
  o.mode = mode;
  o.k_b = 5;
  o.k_r = 5;
  o.record_timing = false;
  return o;
}

}  // namespace

TEST_CASE("award-trace scenario: full mode revises, baseline keeps") {
  const PromptSet prompts = testsup::load_prompts();
  const ValidatorData vdata = testsup::load_validator_data();
  MockRetrieval retrieval = testsup::jerlov_retrieval();
  MockModel model = testsup::jerlov_model();
  const QuestionRecord q = testsup::jerlov_question();

  SUBCASE("full") {
    Pipeline p(Backends{&retrieval, &model}, prompts, vdata, opts(PipelineMode::full));
    const PipelineTrace t = p.run_question(q);
    CHECK(t.status == TraceStatus::ok);
    CHECK(t.qtype == QuestionType::person);
    REQUIRE(t.draft.has_value());
    CHECK(t.draft->text == "Collin Roesler");
    CHECK(t.draft->origin == DraftOrigin::retrieved);
    REQUIRE(t.expansion_queries.size() == 3);
    CHECK(t.expansion_queries[0] == q.question);
    CHECK(t.expansion_queries[1] == q.question + " \"Collin Roesler\"");
    CHECK(t.expansion_queries[2] == "Collin Roesler");
    REQUIRE(t.verdict.has_value());
    CHECK(t.verdict->decision == Decision::revise);
    REQUIRE(t.validation.has_value());
    CHECK(t.validation->accepted);
    CHECK(t.final_answer == "Annick Bricaud");
    CHECK(t.counters.retrieval_queries == 4);
    CHECK(t.counters.model_calls == 2);
    // 3 + 1 + 1 scripted snippets across the four queries.
    CHECK(t.counters.raw_snippets == 5);
    CHECK(t.r1.size() == 5);
  }

  SUBCASE("baseline_only") {
    Pipeline p(Backends{&retrieval, &model}, prompts, vdata,
               opts(PipelineMode::baseline_only));
    const PipelineTrace t = p.run_question(q);
    CHECK(t.final_answer == "Collin Roesler");
    CHECK(t.counters.model_calls == 1);
    CHECK(t.counters.retrieval_queries == 1);
    CHECK(t.expansion_queries.empty());
    CHECK_FALSE(t.verdict.has_value());
  }

  SUBCASE("mode algebra: baseline final equals full-mode draft") {
    Pipeline full(Backends{&retrieval, &model}, prompts, vdata, opts(PipelineMode::full));
    Pipeline base(Backends{&retrieval, &model}, prompts, vdata,
                  opts(PipelineMode::baseline_only));
    CHECK(base.run_question(q).final_answer == full.run_question(q).draft->text);
  }
}

TEST_CASE("ablation mode semantics") {
  const PromptSet prompts = testsup::load_prompts();
  const ValidatorData vdata = testsup::load_validator_data();
  testsup::SyntheticCorpus corpus = testsup::make_ablation_corpus(0);
  const QuestionRecord no_evidence_q = corpus.questions[0];  // ab-noevidence
  const QuestionRecord year_q = corpus.questions[1];         // ab-yearform

  SUBCASE("full rejects the evidence-free revision (r5)") {
    Pipeline p(Backends{&corpus.retrieval, &corpus.model}, prompts, vdata,
               opts(PipelineMode::full));
    const PipelineTrace t = p.run_question(no_evidence_q);
    REQUIRE(t.validation.has_value());
    CHECK_FALSE(t.validation->accepted);
    CHECK(*t.validation->rejected_rule == RejectRule::r5_no_evidence);
    CHECK(t.final_answer == "Arthur Penn");
  }

  SUBCASE("no_validator accepts it") {
    Pipeline p(Backends{&corpus.retrieval, &corpus.model}, prompts, vdata,
               opts(PipelineMode::no_validator));
    const PipelineTrace t = p.run_question(no_evidence_q);
    CHECK_FALSE(t.validation.has_value());
    CHECK(t.final_answer == "Marcus Webb");
  }

  SUBCASE("full canonicalizes the year revision") {
    Pipeline p(Backends{&corpus.retrieval, &corpus.model}, prompts, vdata,
               opts(PipelineMode::full));
    const PipelineTrace t = p.run_question(year_q);
    REQUIRE(t.validation.has_value());
    CHECK(t.validation->accepted);
    CHECK(t.final_answer == "1942");
  }

  SUBCASE("no_canonicalization leaves the surface form") {
    Pipeline p(Backends{&corpus.retrieval, &corpus.model}, prompts, vdata,
               opts(PipelineMode::no_canonicalization));
    const PipelineTrace t = p.run_question(year_q);
    REQUIRE(t.validation.has_value());
    CHECK(t.validation->accepted);
    CHECK(t.final_answer == "in the year 1942");
  }

  SUBCASE("second_pass_original_only reissues only the question") {
    Pipeline p(Backends{&corpus.retrieval, &corpus.model}, prompts, vdata,
               opts(PipelineMode::second_pass_original_only));
    const PipelineTrace t = p.run_question(year_q);
    REQUIRE(t.expansion_queries.size() == 1);
    CHECK(t.expansion_queries[0] == year_q.question);
    CHECK(t.counters.retrieval_queries == 2);
    // The decisive 1942 snippet is only reachable via the answer-conditioned
    // query, so the revision fails grounding and the draft survives.
    CHECK(t.final_answer == "1940s");
  }

  SUBCASE("simple_reconsideration reuses first-pass evidence only") {
    Pipeline p(Backends{&corpus.retrieval, &corpus.model}, prompts, vdata,
               opts(PipelineMode::simple_reconsideration));
    const PipelineTrace t = p.run_question(year_q);
    CHECK(t.expansion_queries.empty());
    CHECK(t.counters.retrieval_queries == 1);
    CHECK(t.counters.model_calls == 2);
    CHECK(t.r1.size() == t.r0.size());
  }
}

TEST_CASE("keep and malformed verdicts preserve the draft byte-for-byte") {
  const PromptSet prompts = testsup::load_prompts();
  const ValidatorData vdata = testsup::load_validator_data();
  MockRetrieval retrieval;
  retrieval.add("Who keeps?", {RawSnippet{"t", std::nullopt, "some evidence"}});

  SUBCASE("KEEP decision") {
    MockModel model;
    model.on("BASELINE ANSWER:", "DECISION: KEEP\nANSWER: whatever\nEVIDENCE: NONE");
    model.set_default("The Keeper");
    Pipeline p(Backends{&retrieval, &model}, prompts, vdata, opts(PipelineMode::full));
    const PipelineTrace t = p.run_question({"k1", "Who keeps?", {}});
    CHECK(t.final_answer == "The Keeper");
    CHECK_FALSE(t.validation.has_value());
  }

  SUBCASE("malformed refiner output") {
    MockModel model;
    model.on("BASELINE ANSWER:", "I would revise this to something else.");
    model.set_default("The Keeper");
    Pipeline p(Backends{&retrieval, &model}, prompts, vdata, opts(PipelineMode::full));
    const PipelineTrace t = p.run_question({"k2", "Who keeps?", {}});
    REQUIRE(t.verdict.has_value());
    CHECK(t.verdict->parse_status == ParseStatus::malformed);
    CHECK(t.final_answer == "The Keeper");
  }

  SUBCASE("refine transport failure") {
    MockModel model;
    model.fail_on("BASELINE ANSWER:");
    model.set_default("The Keeper");
    Pipeline p(Backends{&retrieval, &model}, prompts, vdata, opts(PipelineMode::full));
    const PipelineTrace t = p.run_question({"k3", "Who keeps?", {}});
    CHECK(t.refine_unavailable);
    CHECK(t.final_answer == "The Keeper");
    CHECK(t.counters.model_calls == 2);
  }
}

TEST_CASE("retrieval failures degrade instead of aborting") {
  const PromptSet prompts = testsup::load_prompts();
  const ValidatorData vdata = testsup::load_validator_data();

  SUBCASE("first pass down: closed-book draft") {
    MockRetrieval retrieval;
    retrieval.fail_on("Who endures?");
    MockModel model;
    model.set_default("Survivor");
    Pipeline p(Backends{&retrieval, &model}, prompts, vdata, opts(PipelineMode::full));
    const PipelineTrace t = p.run_question({"d1", "Who endures?", {}});
    CHECK(t.status == TraceStatus::ok);
    CHECK(t.r0.empty());
    REQUIRE(t.draft.has_value());
    CHECK(t.draft->origin == DraftOrigin::closed_book);
  }

  SUBCASE("second pass down: R0 carries through") {
    MockRetrieval retrieval;
    retrieval.add("Who endures?", {RawSnippet{"t", std::nullopt, "endurance evidence"}});
    retrieval.fail_on("Who endures? \"Survivor\"");
    retrieval.fail_on("Survivor");
    MockModel model;
    model.on("BASELINE ANSWER:", "DECISION: KEEP\nANSWER: Survivor\nEVIDENCE: NONE");
    model.set_default("Survivor");
    Pipeline p(Backends{&retrieval, &model}, prompts, vdata, opts(PipelineMode::full));
    const PipelineTrace t = p.run_question({"d2", "Who endures?", {}});
    CHECK(t.status == TraceStatus::ok);
    CHECK(t.r1.size() == t.r0.size());
    CHECK(t.final_answer == "Survivor");
  }

  SUBCASE("draft unavailable: not attempted") {
    MockRetrieval retrieval;
    MockModel model;
    model.fail_on("");
    Pipeline p(Backends{&retrieval, &model}, prompts, vdata, opts(PipelineMode::full));
    const PipelineTrace t = p.run_question({"d3", "Who vanished?", {}});
    CHECK(t.status == TraceStatus::not_attempted);
    CHECK(t.final_answer.empty());
  }
}

TEST_CASE("counter fidelity over a synthetic corpus") {
  const PromptSet prompts = testsup::load_prompts();
  const ValidatorData vdata = testsup::load_validator_data();
  testsup::SyntheticCorpus corpus = testsup::make_synthetic_corpus(10);

  Pipeline full(Backends{&corpus.retrieval, &corpus.model}, prompts, vdata,
                opts(PipelineMode::full));
  Pipeline base(Backends{&corpus.retrieval, &corpus.model}, prompts, vdata,
                opts(PipelineMode::baseline_only));

  for (const QuestionRecord& q : corpus.questions) {
    const PipelineTrace t = full.run_question(q);
    CHECK(t.counters.model_calls == 2);
    CHECK(t.counters.retrieval_queries ==
          1 + static_cast<int>(t.expansion_queries.size()));
    CHECK(t.counters.raw_snippets <= 5 + 5 * static_cast<int>(t.expansion_queries.size()));
    CHECK((t.counters.retrieval_queries == 3 || t.counters.retrieval_queries == 4));

    const PipelineTrace b = base.run_question(q);
    CHECK(b.counters.model_calls == 1);
    CHECK(b.counters.retrieval_queries == 1);
    CHECK(b.counters.raw_snippets <= 5);
  }
}

TEST_CASE("conservatism: fuzzed refiner outputs never break the draft contract") {
  const PromptSet prompts = testsup::load_prompts();
  const ValidatorData vdata = testsup::load_validator_data();

  // Refiner returns arbitrary bytes; the final answer must equal the draft
  // unless a well-formed REVISE was accepted by the validator.
  struct FuzzModel : ModelBackend {
    std::string draft_reply;
    std::string refine_reply;
    std::string complete(const std::string& prompt) override {
      return prompt.find("BASELINE ANSWER:") != std::string::npos ? refine_reply
                                                                  : draft_reply;
    }
  };

  MockRetrieval retrieval;
  retrieval.add("Who is tested?", {RawSnippet{"t", std::nullopt, "fuzz evidence"}});

  FuzzModel model;
  model.draft_reply = "Fuzz Draft";
  Pipeline p(Backends{&retrieval, &model}, prompts, vdata, opts(PipelineMode::full));

  std::mt19937 rng(8675309);
  for (int i = 0; i < 200; ++i) {
    model.refine_reply = testsup::random_bytes(rng, 160);
    const PipelineTrace t = p.run_question({"f", "Who is tested?", {}});
    CHECK(t.status == TraceStatus::ok);
    const bool accepted = t.validation.has_value() && t.validation->accepted;
    if (!accepted) CHECK(t.final_answer == "Fuzz Draft");
    CHECK_FALSE(t.final_answer.empty());
    (void)trace_to_jsonl(t);  // serialization must be total too
  }
}

TEST_CASE("run_corpus writes traces in input order and resumes cleanly") {
  const PromptSet prompts = testsup::load_prompts();
  const ValidatorData vdata = testsup::load_validator_data();
  testsup::SyntheticCorpus corpus = testsup::make_synthetic_corpus(12);
  Pipeline p(Backends{&corpus.retrieval, &corpus.model}, prompts, vdata,
             opts(PipelineMode::full));

  const std::string out = testsup::temp_file("traces.jsonl");
  CorpusRunOptions ro;
  ro.output_path = out;
  ro.concurrency = 4;

  const RunSummary s = run_corpus(p, corpus.questions, ro);
  CHECK(s.processed == 12);
  CHECK(s.skipped == 0);

  const std::string full_run = read_file(out);
  std::vector<std::string> lines;
  {
    std::istringstream in(full_run);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  REQUIRE(lines.size() == 12);
  for (size_t i = 0; i < lines.size(); ++i) {
    CHECK(lines[i].find("\"id\":\"syn-" + std::to_string(i) + "\"") !=
          std::string::npos);
  }

  SUBCASE("identical rerun bytes at any concurrency") {
    for (int conc : {1, 4}) {
      const std::string out2 = testsup::temp_file("traces_rerun.jsonl");
      CorpusRunOptions ro2;
      ro2.output_path = out2;
      ro2.concurrency = conc;
      run_corpus(p, corpus.questions, ro2);
      CHECK(read_file(out2) == full_run);
    }
  }

  SUBCASE("resume after a simulated crash, including a torn line") {
    const std::string out3 = testsup::temp_file("traces_resume.jsonl");
    // Pretend the first 5 records were completed, then a torn write happened.
    {
      std::ofstream f(out3, std::ios::binary);
      for (size_t i = 0; i < 5; ++i) f << lines[i] << "\n";
      f << lines[5].substr(0, 40);  // torn, never checkpointed
    }
    {
      std::ofstream f(out3 + ".ckpt", std::ios::binary);
      for (size_t i = 0; i < 5; ++i) f << corpus.questions[i].id << "\n";
    }
    CorpusRunOptions ro3;
    ro3.output_path = out3;
    ro3.concurrency = 2;
    ro3.resume = true;
    const RunSummary s3 = run_corpus(p, corpus.questions, ro3);
    CHECK(s3.skipped == 5);
    CHECK(s3.processed == 7);
    CHECK(read_file(out3) == full_run);  // no duplicates, no gaps
  }

  SUBCASE("empty corpus is an input error") {
    CorpusRunOptions ro4;
    ro4.output_path = testsup::temp_file("never.jsonl");
    CHECK_THROWS_AS(run_corpus(p, {}, ro4), InvalidInputError);
  }

  SUBCASE("unwritable output is a startup io error") {
    CorpusRunOptions ro5;
    ro5.output_path = "/nonexistent-dir/never.jsonl";
    CHECK_THROWS_AS(run_corpus(p, corpus.questions, ro5), IoError);
  }
}

TEST_CASE("corpus loader validates structure") {
  const std::string path = testsup::temp_file("corpus.jsonl");
  {
    std::ofstream f(path);
    f << R"({"id": "a", "question": "Who?", "gold": "X"})" << "\n";
    f << R"({"id": "b", "question": "Where?", "gold": ["Y", "Z"]})" << "\n";
    f << R"({"id": 3, "question": "When?", "gold": null})" << "\n";
  }
  const auto qs = load_question_corpus(path);
  REQUIRE(qs.size() == 3);
  CHECK(qs[0].golds == std::vector<std::string>{"X"});
  CHECK(qs[1].golds == std::vector<std::string>{"Y", "Z"});
  CHECK(qs[2].id == "3");
  CHECK(qs[2].golds.empty());

  const std::string dup = testsup::temp_file("corpus_dup.jsonl");
  {
    std::ofstream f(dup);
    f << R"({"id": "a", "question": "Who?"})" << "\n";
    f << R"({"id": "a", "question": "Who again?"})" << "\n";
  }
  CHECK_THROWS_AS(load_question_corpus(dup), ConfigError);

  const std::string empty_q = testsup::temp_file("corpus_empty.jsonl");
  {
    std::ofstream f(empty_q);
    f << R"({"id": "a", "question": "   "})" << "\n";
  }
  CHECK_THROWS_AS(load_question_corpus(empty_q), ConfigError);
}
