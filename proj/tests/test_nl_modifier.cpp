#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "piia/error.hpp"
#include "piia/nl_modifier.hpp"

using namespace piia;

namespace {

CandidateOption column(std::string name, std::string table) {
  std::string surface = name;
  std::replace(surface.begin(), surface.end(), '_', ' ');
  return {surface, OptionKind::kColumn, 0, name, table};
}

CandidateOption value() { return {"Value", OptionKind::kValue, 0, "", ""}; }
CandidateOption none() { return {"None", OptionKind::kNone, 0, "", ""}; }

std::string apply(const std::string& x, std::vector<TokenAnswer> a) {
  return apply_answers(pos_tag(x), a).text;
}

}  // namespace

TEST_CASE("pos tags") {
  auto t = pos_tag("the cat aged 3 quickly");
  CHECK(t.tags[0] == PosTag::kOther);
  CHECK(t.tags[1] == PosTag::kNoun);
  CHECK(t.tags[2] == PosTag::kAdjective);
  CHECK(t.tags[3] == PosTag::kNumber);
  CHECK(t.tags[4] == PosTag::kOther);
  CHECK(pos_tag("earning").tags[0] == PosTag::kVerb);
  CHECK(pos_tag("'big cat'").tags[0] == PosTag::kNoun);
  auto o = pos_tag("cat aged", {std::nullopt, PosTag::kVerb});
  CHECK(o.tags[1] == PosTag::kVerb);
}

TEST_CASE("modifier fixtures") {
  CHECK(apply("aged 3", {{0, column("pet_age", "pet")}}) == "whose pet_age is 3");
  CHECK(apply("cat", {{0, value()}}) == "'cat'");
  CHECK(apply("cat", {{0, none()}}) == "cat");
  const std::string x = "find the lname of the students who have a cat aged 3";
  CHECK(apply(x, {{9, value()}, {10, column("pet_age", "pet")}}) ==
        "find the lname of the students who have a 'cat' whose pet_age is 3");
  CHECK(apply(x, {{9, value()}, {10, none()}}) == "find the lname of the students who have a 'cat' aged 3");
}

TEST_CASE("all None keeps the text byte for byte") {
  const std::string x = "  find  the surname, of students   earning more than 5000 ";
  auto tagged = pos_tag(x);
  std::vector<TokenAnswer> answers;
  for (std::size_t i = 0; i < tagged.tokens.size(); ++i) answers.emplace_back(i, none());
  auto out = apply_answers(tagged, answers);
  CHECK(out.text == x);
  CHECK(out.edits.empty());
}

TEST_CASE("other rules") {
  CHECK(apply("students aged over 20", {{1, column("age", "student")}}) == "students whose age is over 20");
  CHECK(apply("the aged students", {{1, column("age", "student")}}) == "the with age students");
  CHECK(apply("employees earning more than 5000", {{1, column("salary", "employee")}}) ==
        "employees whose salary is more than 5000");
  CHECK(apply("the surname of students", {{1, column("lname", "student")}}) == "the lname of students");
  CHECK(apply("models made in 2010", {{3, column("year", "model")}}) == "models made in whose year is 2010");
  CandidateOption table{"car maker", OptionKind::kTable, 0, "car_maker", ""};
  CHECK(apply("the makers", {{1, table}}) == "the car_maker");
  CandidateOption agg{"max", OptionKind::kAggregation, 0, "max", ""};
  CHECK(apply("the greatest capacity", {{1, agg}}) == "the maximum capacity");
  CHECK(apply("the maker 'BMW'", {{2, value()}}) == "the maker 'BMW'");
  CHECK(aggregation_phrase("count") == "number of");
}

TEST_CASE("every non-None answer changes a token not already in target form") {
  auto s = fixtures::pets();
  auto cands = candidate_set(s);
  cands.push_back(value());
  for (const char* x : {"show the cat", "older than 3", "the heaviest pet"}) {
    auto tagged = pos_tag(x);
    for (std::size_t i = 0; i < tagged.tokens.size(); ++i) {
      if (StopWordList::builtin().contains(normalize_word(tagged.tokens[i].text))) continue;
      for (const auto& c : cands) {
        auto out = apply_answers(tagged, {{i, c}});
        const auto& tok = tagged.tokens[i].text;
        bool target_form = tok == c.ref || (c.kind == OptionKind::kAggregation && tok == aggregation_phrase(c.ref));
        if (target_form) continue;
        CAPTURE(x);
        CAPTURE(c.surface);
        CHECK(out.text != x);
      }
    }
  }
}

TEST_CASE("bad answers") {
  auto t = pos_tag("the cat");
  CHECK_THROWS_AS(apply_answers(t, {{1, value()}, {1, none()}}), Error);
  CHECK_THROWS_AS(apply_answers(t, {{5, value()}}), Error);
}

TEST_CASE("rule file") {
  auto path = std::filesystem::temp_directory_path() / "piia_rules.json";
  {
    std::ofstream out(path);
    out << R"([{"id": "q", "kind": "value", "replacement": "\"{bare}\""},
               {"id": "c", "kind": "column", "replacement": "[{column}]"}])";
  }
  auto rules = RuleTable::load(path);
  CHECK(rules.rules().size() == 2);
  CHECK(apply_answers(pos_tag("cat aged"), {{0, value()}, {1, column("pet_age", "pet")}}, rules).text ==
        "\"cat\" [pet_age]");
  std::filesystem::remove(path);
}
