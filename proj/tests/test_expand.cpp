#include <random>

#include "doctest.h"

#include "qrepair/errors.hpp"
#include "qrepair/expand.hpp"
#include "test_support.hpp"

using namespace qrepair;

namespace {
DraftAnswer da(const std::string& text) {
  return DraftAnswer{text, DraftOrigin::retrieved};
}
}  // namespace

TEST_CASE("slot-like questions get three queries in order") {
  const std::string q = "Who was awarded the Oceanography Society's Jerlov Award in 2018?";
  const ExpansionPlan plan = build_queries(q, da("Collin Roesler"), QuestionType::person);
  REQUIRE(plan.queries.size() == 3);
  CHECK(plan.queries[0] == q);
  CHECK(plan.queries[1] == q + " \"Collin Roesler\"");
  CHECK(plan.queries[2] == "Collin Roesler");
  CHECK(plan.slot_query_included);
}

TEST_CASE("non-slot questions get two queries") {
  const ExpansionPlan plan =
      build_queries("Describe the treaty.", da("Treaty of Ghent"), QuestionType::other);
  REQUIRE(plan.queries.size() == 2);
  CHECK(plan.queries[0] == "Describe the treaty.");
  CHECK(plan.queries[1] == "Describe the treaty. \"Treaty of Ghent\"");
  CHECK_FALSE(plan.slot_query_included);
}

TEST_CASE("bare-answer duplicate of the question collapses") {
  const ExpansionPlan plan =
      build_queries("Collin Roesler", da("collin  roesler"), QuestionType::person);
  REQUIRE(plan.queries.size() == 2);
  CHECK_FALSE(plan.slot_query_included);
}

TEST_CASE("empty draft is an input error") {
  CHECK_THROWS_AS(build_queries("q?", da("   "), QuestionType::person),
                  InvalidInputError);
  CHECK_THROWS_AS(build_queries("  ", da("a"), QuestionType::person),
                  InvalidInputError);
}

TEST_CASE("query-count law over a fuzz corpus") {
  std::mt19937 rng(5150);
  const std::vector<std::string> starters = {
      "Who wrote",  "Where is",   "When did",   "Is it true that",
      "How many",   "Describe",   "What year saw", "Name"};
  const std::vector<std::string> answers = {"Paris", "1942", "Treaty of Ghent",
                                            "Marie Curie", "42", "yes"};
  std::uniform_int_distribution<size_t> s(0, starters.size() - 1);
  std::uniform_int_distribution<size_t> a(0, answers.size() - 1);

  for (int i = 0; i < 2000; ++i) {
    const std::string q = starters[s(rng)] + " item " + std::to_string(i) + "?";
    const QuestionType qt = classify(q);
    const ExpansionPlan plan = build_queries(q, da(answers[a(rng)]), qt);
    CHECK(plan.queries.size() >= 2);
    CHECK(plan.queries.size() <= 3);
    CHECK(plan.queries[0] == q);
    if (is_slot_type(qt)) {
      CHECK(plan.queries.size() == 3);
    } else {
      CHECK(plan.queries.size() == 2);
    }
    // Total per-question retrieval queries: shared first pass + expansion.
    const size_t total = 1 + plan.queries.size();
    CHECK(total >= 3);
    CHECK(total <= 4);
  }
}
