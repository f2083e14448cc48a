#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "piia/error.hpp"
#include "piia/restater.hpp"

using namespace piia;

namespace {

RestatedUtterance restate_sql(const std::string& sql) {
  auto s = fixtures::pets();
  return restate(to_ir(parse_sql(sql, s), s), s);
}

}  // namespace

TEST_CASE("select with two filters") {
  auto s = fixtures::pets();
  IrTree t;
  t.query.select.push_back(IrColumn{Aggregation::kNone, false, "lname", "student"});
  t.query.scope.push_back(IrTable{"student", {}});
  IrFilter f;
  f.conditions.push_back(IrCondition{IrColumn{Aggregation::kNone, false, "pettype", "pet"}, CompareOp::kEq,
                                     {Literal{Literal::Kind::kString, "cat"}}, nullptr});
  f.conditions.push_back(IrCondition{IrColumn{Aggregation::kNone, false, "pet_age", "pet"}, CompareOp::kEq,
                                     {Literal{Literal::Kind::kNumber, "3"}}, nullptr});
  t.query.filter = f;
  auto r = restate(t, s);
  CHECK(r.text == "find the lname of student whose pettype is 'cat' and whose pet_age is 3");
}

TEST_CASE("count of rows alone") {
  auto s = fixtures::pets();
  IrTree t;
  t.query.select.push_back(IrColumn{Aggregation::kCount, false, "*", ""});
  CHECK(restate(t, s).text == "find the number of rows");
}

TEST_CASE("provenance tags") {
  auto r = restate_sql("SELECT max(weight) FROM pet WHERE pettype = 'dog'");
  CHECK(r.text == "find the maximum weight of pet whose pettype is 'dog'");
  std::vector<TokenOrigin> want = {TokenOrigin::kTemplate, TokenOrigin::kTemplate, TokenOrigin::kAggregation,
                                   TokenOrigin::kColumn,   TokenOrigin::kTemplate, TokenOrigin::kTable,
                                   TokenOrigin::kTemplate, TokenOrigin::kColumn,   TokenOrigin::kTemplate,
                                   TokenOrigin::kValue};
  REQUIRE(r.tokens.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CAPTURE(i);
    CHECK(r.tokens[i].origin == want[i]);
  }
  CHECK(r.surfaces().size() == want.size());
}

TEST_CASE("nested filter introduces a subordinate clause") {
  auto r = restate_sql("SELECT lname FROM student WHERE stuid IN (SELECT stuid FROM has_pet)");
  auto words = r.surfaces();
  auto that = std::find(words.begin(), words.end(), "that");
  REQUIRE(that != words.end());
  auto inner = std::find(that, words.end(), "has_pet");
  CHECK(inner != words.end());
}

TEST_CASE("order, superlative and set operations") {
  CHECK(restate_sql("SELECT fname FROM student ORDER BY age DESC").text ==
        "find the fname of student sorted by age in descending order");
  CHECK(restate_sql("SELECT fname FROM student ORDER BY age ASC LIMIT 1").text ==
        "find the fname of student with the least age");
  auto u = restate_sql("SELECT stuid FROM student EXCEPT SELECT stuid FROM has_pet").text;
  CHECK(u.find("excluding") != std::string::npos);
}

TEST_CASE("template vocabulary") {
  auto v = template_vocabulary(TemplateTable::builtin());
  CHECK(v.count("find"));
  CHECK(v.count("whose"));
  CHECK(v.count("that"));
  CHECK_FALSE(v.count("maximum"));
  CHECK(template_vocabulary(TemplateTable{}).empty());

  std::ifstream in(fixtures::data("sql_corpus.jsonl"));
  std::string line;
  const auto& schemas = fixtures::bundled_schemas();
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    const auto& schema = schemas.at(j["db_id"].get<std::string>());
    auto r = restate(to_ir(parse_sql(j["sql"].get<std::string>(), schema), schema), schema);
    for (const auto& t : r.tokens) {
      if (t.origin == TokenOrigin::kTemplate) CHECK(v.count(t.surface));
    }
  }
}

TEST_CASE("template overrides") {
  auto path = std::filesystem::temp_directory_path() / "piia_templates.json";
  {
    std::ofstream out(path);
    out << R"({"query": "show {select} {filter?} {order?}"})";
  }
  auto t = TemplateTable::load(path);
  auto s = fixtures::pets();
  auto r = restate(to_ir(parse_sql("SELECT lname FROM student", s), s), s, t);
  CHECK(r.text == "show the lname of student");
  TemplateTable empty;
  CHECK_THROWS_AS(restate(to_ir(parse_sql("SELECT lname FROM student", s), s), s, empty), Error);
  std::filesystem::remove(path);
}
