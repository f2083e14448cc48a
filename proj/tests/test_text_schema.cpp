#include "doctest.h"
#include "fixtures.hpp"
#include "piia/error.hpp"
#include "piia/text.hpp"

using namespace piia;

TEST_CASE("tokenize keeps quoted spans whole") {
  auto t = tokenize("students with a 'big cat' aged 3");
  REQUIRE(t.size() == 6);
  CHECK(t[3].text == "'big cat'");
  CHECK(t[3].quoted);
  CHECK(t[5].text == "3");
  CHECK(t[5].begin == 31);
  CHECK(normalize_word("'Cat'") == "cat");
}

TEST_CASE("lemmatizer") {
  CHECK(lemmatize("students") == "student");
  CHECK(lemmatize("cities") == "city");
  CHECK(lemmatize("aged") == "age");
  CHECK(lemmatize("pets") == "pet");
  CHECK(lemmatize("classes") == "class");
  CHECK(lemmatize("running") == "run");
  CHECK(lemmatize("is") == "be");
  CHECK(lemmatize("name") == "name");
}

TEST_CASE("name units") {
  CHECK(split_name_units("Pet_Age") == std::vector<std::string>{"pet", "age"});
  CHECK(split_name_units("last name") == std::vector<std::string>{"last", "name"});
}

TEST_CASE("stop words") {
  const auto& s = StopWordList::builtin();
  CHECK(s.contains("the"));
  CHECK(s.contains("of"));
  CHECK_FALSE(s.contains("cat"));
}

TEST_CASE("load schemas") {
  auto v = parse_schemas(fixtures::kPetsSchema);
  REQUIRE(v.size() == 1);
  CHECK(v[0].db_id() == "pets");
  CHECK(v[0].tables().size() == 3);
  CHECK(parse_schemas("").empty());
  std::string twice = std::string(fixtures::kPetsSchema) + "\n" + fixtures::kPetsSchema;
  try {
    parse_schemas(twice);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kValidation);
  }
}

TEST_CASE("schema lookups are case-insensitive") {
  auto s = fixtures::pets();
  REQUIRE(s.find_table("PET") != nullptr);
  CHECK(s.find_table("pet")->find_column("Pet_Age") != nullptr);
  CHECK(s.tables_with_column("stuid").size() == 2);
  CHECK(s.distinct_columns().size() == 10);
}

TEST_CASE("occurrence count") {
  auto s = fixtures::pets();
  CHECK(occurrence_count(s, "age") == 2);
  CHECK(occurrence_count(s, "zzzz") == 0);
  CHECK(occurrence_count(s, "pet") == 3);
  auto names = parse_schemas(
      R"({"db_id": "n", "tables": [{"name": "people", "columns": [{"name": "name", "type": "text"}, {"name": "first_name", "type": "text"}, {"name": "last_name", "type": "text"}]}]})");
  CHECK(occurrence_count(names[0], "name") == 3);
}

TEST_CASE("load examples") {
  auto schemas = fixtures::pets_set();
  auto ex = parse_examples(
      "{\"question\": \"a\", \"sql\": \"SELECT lname FROM student\", \"db_id\": \"pets\"}\n"
      "{\"question\": \"b\", \"sql\": \"SELECT count(*) FROM pet\", \"db_id\": \"pets\"}\n"
      "{\"question\": \"c\", \"sql\": \"SELECT weight FROM pet WHERE pet_age = 3\", \"db_id\": \"pets\"}\n",
      schemas);
  CHECK(ex.size() == 3);
  CHECK(ex[2].gold_sql == "SELECT weight FROM pet WHERE pet_age = 3");

  try {
    parse_examples(R"({"question": "a", "sql": "SELECT x FROM y", "db_id": "missing"})", schemas);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("missing") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_examples(R"({"question": "a", "sql": "SELECT color FROM pet", "db_id": "pets"})", schemas),
                  Error);
}

TEST_CASE("bundled corpus loads") {
  const auto& schemas = fixtures::bundled_schemas();
  CHECK(schemas.size() >= 5);
  auto ex = load_examples(fixtures::data("examples.jsonl"), schemas);
  CHECK(ex.size() >= 30);
}
