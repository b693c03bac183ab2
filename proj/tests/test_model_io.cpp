#include <random>

#include "doctest.h"

#include "qrepair/errors.hpp"
#include "qrepair/model_backends.hpp"
#include "qrepair/model_io.hpp"
#include "test_support.hpp"

using namespace qrepair;

namespace {

EvidenceSet one_snippet(const std::string& body) {
  EvidenceSet set;
  EvidenceSnippet s;
  s.title = "title";
  s.body = body;
  s.source_query = "q";
  set.extend({s});
  return set;
}

}  // namespace

TEST_CASE("prompt templates load, substitute, and hash") {
  const PromptSet prompts = testsup::load_prompts();
  CHECK(prompts.hash().size() == 16);

  const EvidenceSet ev = one_snippet("The award went to Annick Bricaud.");
  const std::string p = prompts.render_draft("Who won?", ev);
  CHECK(p.find("Who won?") != std::string::npos);
  CHECK(p.find("[1] title: The award went to Annick Bricaud.") != std::string::npos);

  const std::string cb = prompts.render_closed_book("Who won?");
  CHECK(cb.find("Who won?") != std::string::npos);
  CHECK(cb.find("Evidence") == std::string::npos);

  const std::string r = prompts.render_refine("Who won?", "Collin Roesler", ev);
  CHECK(r.find("BASELINE ANSWER: Collin Roesler") != std::string::npos);
  CHECK(r.find("DECISION: KEEP or REVISE") != std::string::npos);

  // Identical inputs give identical prompts.
  CHECK(prompts.render_refine("Who won?", "Collin Roesler", ev) == r);
}

TEST_CASE("prompt evidence block truncates long snippet bodies") {
  const std::string body(kPromptSnippetMaxChars + 500, 'x');
  const std::string block = render_evidence_block(one_snippet(body));
  CHECK(block.size() < body.size());
  CHECK(block.find(std::string(10, 'x')) != std::string::npos);
}

TEST_CASE("missing template sections are configuration errors") {
  CHECK_THROWS_AS(PromptSet::from_text("[draft_evidence]\nonly this\n"), ConfigError);
}

TEST_CASE("draft follows the fallback chain") {
  const PromptSet prompts = testsup::load_prompts();
  const EvidenceSet ev = one_snippet("Jerlov Award context.");
  const EvidenceSet no_ev;

  SUBCASE("evidence-grounded answer") {
    MockModel model;
    model.on("Jerlov Award context", "Collin Roesler");
    const DraftAnswer d = draft(model, prompts, "Who won the award?", ev,
                                QuestionType::person);
    CHECK(d.text == "Collin Roesler");
    CHECK(d.origin == DraftOrigin::retrieved);
  }

  SUBCASE("empty evidence answer falls back to closed book") {
    MockModel model;
    // Draft prompt (contains the evidence block) answers empty; the
    // closed-book prompt matches the default.
    model.on("Evidence:", "");
    model.set_default("Paris");
    const DraftAnswer d = draft(model, prompts, "Where is it?", ev,
                                QuestionType::location);
    CHECK(d.text == "Paris");
    CHECK(d.origin == DraftOrigin::closed_book);
  }

  SUBCASE("empty on both rungs emits the type default") {
    MockModel model;  // default completion is empty
    const DraftAnswer d = draft(model, prompts, "Is it real?", ev,
                                QuestionType::yesno);
    CHECK(d.text == "no");
    CHECK(d.origin == DraftOrigin::type_default);
  }

  SUBCASE("empty evidence skips the grounded rung") {
    MockModel model;
    model.set_default("42");
    const DraftAnswer d = draft(model, prompts, "How many?", no_ev,
                                QuestionType::numeric);
    CHECK(d.origin == DraftOrigin::closed_book);
  }

  SUBCASE("transport failure on one rung still drafts") {
    MockModel model;
    model.fail_on("Evidence:");
    model.set_default("fallback answer");
    const DraftAnswer d = draft(model, prompts, "Who?", ev, QuestionType::person);
    CHECK(d.text == "fallback answer");
    CHECK(d.origin == DraftOrigin::closed_book);
  }

  SUBCASE("transport failure on all rungs raises draft-unavailable") {
    MockModel model;
    model.fail_on("");  // matches every prompt
    CHECK_THROWS_AS(draft(model, prompts, "Who?", ev, QuestionType::person),
                    DraftUnavailableError);
  }

  SUBCASE("multi-line completions are clipped to the first line") {
    MockModel model;
    model.set_default("  Paris\nBecause it is the capital.");
    const DraftAnswer d = draft(model, prompts, "Where?", no_ev,
                                QuestionType::location);
    CHECK(d.text == "Paris");
  }
}

TEST_CASE("type defaults cover every question type") {
  CHECK(type_default_answer(QuestionType::yesno) == "no");
  CHECK(type_default_answer(QuestionType::numeric) == "0");
  CHECK(type_default_answer(QuestionType::year) == "unknown");
  CHECK(type_default_answer(QuestionType::temporal) == "unknown");
  CHECK(type_default_answer(QuestionType::location) == "unknown");
  CHECK(type_default_answer(QuestionType::person) == "unknown");
  CHECK(type_default_answer(QuestionType::other) == "unknown");
}

TEST_CASE("refine_call passes completions through and maps failures") {
  const PromptSet prompts = testsup::load_prompts();
  const EvidenceSet ev = one_snippet("2018 Jerlov Award recipient Annick Bricaud");
  const DraftAnswer d{"Collin Roesler", DraftOrigin::retrieved};

  MockModel model;
  model.on("BASELINE ANSWER: Collin Roesler",
           "DECISION: REVISE\nANSWER: Annick Bricaud\nEVIDENCE: 2018 Jerlov Award "
           "recipient Annick Bricaud");
  CHECK(refine_call(model, prompts, "Who won in 2018?", d, ev) ==
        "DECISION: REVISE\nANSWER: Annick Bricaud\nEVIDENCE: 2018 Jerlov Award "
        "recipient Annick Bricaud");

  MockModel keeper;
  keeper.set_default("DECISION: KEEP\nANSWER: Paris\nEVIDENCE: NONE");
  CHECK(refine_call(keeper, prompts, "q", d, ev) ==
        "DECISION: KEEP\nANSWER: Paris\nEVIDENCE: NONE");

  MockModel dead;
  dead.fail_on("");
  CHECK_THROWS_AS(refine_call(dead, prompts, "q", d, ev), RefineUnavailableError);
}

TEST_CASE("parse_verdict: well-formed inputs") {
  const RefinerVerdict v = parse_verdict("DECISION: KEEP\nANSWER: 1942\nEVIDENCE: NONE");
  CHECK(v.parse_status == ParseStatus::ok);
  CHECK(v.decision == Decision::keep);
  CHECK(v.answer == "1942");
  CHECK_FALSE(v.evidence.has_value());

  const RefinerVerdict r = parse_verdict(
      "DECISION: REVISE\nANSWER: Annick Bricaud\nEVIDENCE: award list names Annick "
      "Bricaud as the 2018 recipient");
  CHECK(r.parse_status == ParseStatus::ok);
  CHECK(r.decision == Decision::revise);
  CHECK(r.answer == "Annick Bricaud");
  REQUIRE(r.evidence.has_value());
  CHECK(*r.evidence == "award list names Annick Bricaud as the 2018 recipient");
}

TEST_CASE("parse_verdict: tolerated variation") {
  // Case-insensitive fields, CRLF endings, surrounding prose.
  const RefinerVerdict v = parse_verdict(
      "Sure, here is my verdict:\r\ndecision: revise\r\nanswer: Paris\r\n"
      "evidence: The capital is Paris.\r\nHope that helps!");
  CHECK(v.parse_status == ParseStatus::ok);
  CHECK(v.decision == Decision::revise);
  CHECK(v.answer == "Paris");
  CHECK(*v.evidence == "The capital is Paris.");

  // Evidence value "none" in any case maps to absent.
  const RefinerVerdict n =
      parse_verdict("DECISION: KEEP\nANSWER: x\nEVIDENCE: none");
  CHECK(n.parse_status == ParseStatus::ok);
  CHECK_FALSE(n.evidence.has_value());
}

TEST_CASE("parse_verdict: malformed inputs collapse to conservative keep") {
  auto check_malformed = [](const std::string& raw) {
    const RefinerVerdict v = parse_verdict(raw);
    CHECK(v.parse_status == ParseStatus::malformed);
    CHECK(v.decision == Decision::keep);
    CHECK(v.answer.empty());
    CHECK_FALSE(v.evidence.has_value());
  };
  check_malformed("I think the answer is Paris.");
  check_malformed("DECISION: MAYBE\nANSWER: x\nEVIDENCE: y");
  check_malformed("DECISION: KEEP\nANSWER: x");  // missing EVIDENCE
  check_malformed("DECISION: KEEP\nANSWER:  \nEVIDENCE: y");  // empty answer
  check_malformed("DECISION: KEEP\nDECISION: KEEP\nANSWER: x\nEVIDENCE: y");
  check_malformed("");
}

TEST_CASE("parse_verdict: fuzz totality over random byte strings") {
  std::mt19937 rng(424242);
  for (int i = 0; i < 10000; ++i) {
    const std::string raw = testsup::random_bytes(rng, 200);
    const RefinerVerdict v = parse_verdict(raw);  // must not throw
    if (v.parse_status == ParseStatus::malformed) {
      CHECK(v.decision == Decision::keep);
      CHECK(v.answer.empty());
    } else {
      CHECK_FALSE(v.answer.empty());
    }
  }
}

TEST_CASE("verdict render/parse round trip") {
  std::mt19937 rng(99);
  const std::vector<std::string> words = {"Annick", "Bricaud", "1942", "May",
                                          "Paris", "x", "answer", "7"};
  std::uniform_int_distribution<size_t> pick(0, words.size() - 1);
  std::uniform_int_distribution<int> len(1, 4);
  std::uniform_int_distribution<int> coin(0, 1);

  auto phrase = [&] {
    std::string out;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      if (!out.empty()) out += " ";
      out += words[pick(rng)];
    }
    return out;
  };

  for (int i = 0; i < 300; ++i) {
    const Decision d = coin(rng) ? Decision::keep : Decision::revise;
    const std::string answer = phrase();
    // The literal token NONE is reserved for absent evidence, so the
    // generator never emits it as an evidence value.
    std::optional<std::string> evidence;
    if (coin(rng)) evidence = phrase();

    const RefinerVerdict v = parse_verdict(render_verdict(d, answer, evidence));
    CHECK(v.parse_status == ParseStatus::ok);
    CHECK(v.decision == d);
    CHECK(v.answer == answer);
    CHECK(v.evidence == evidence);
  }
}
