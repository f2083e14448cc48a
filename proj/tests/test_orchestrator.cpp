#include <algorithm>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "piia/error.hpp"
#include "piia/service.hpp"

using namespace piia;

namespace {

const Runtime& runtime() {
  static const Runtime rt{Config{}};
  return rt;
}

const std::string kFig = "find the lname of the students who have a cat aged 3";
const std::string kFigGold =
    "SELECT student.lname FROM student JOIN has_pet ON student.stuid = has_pet.stuid JOIN pet ON "
    "has_pet.petid = pet.petid WHERE pet.pettype = 'cat' AND pet.pet_age = 3";

int option_index(const MultiChoiceQuestion& q, OptionKind kind, const std::string& ref = {}) {
  for (std::size_t i = 0; i < q.options.size(); ++i) {
    if (q.options[i].kind == kind && (ref.empty() || q.options[i].ref == ref)) return static_cast<int>(i);
  }
  return -1;
}

CandidateOption opt(const std::string& surface, OptionKind kind, double score, const std::string& ref = {}) {
  CandidateOption o;
  o.surface = surface;
  o.kind = kind;
  o.score = score;
  o.ref = ref;
  return o;
}

MultiChoiceQuestion question(std::size_t idx, const std::string& token, std::vector<double> scores) {
  MultiChoiceQuestion q;
  q.token_index = idx;
  q.token = token;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    q.options.push_back(opt("o" + std::to_string(i), OptionKind::kColumn, scores[i], "c" + std::to_string(i)));
  }
  q.options.push_back(opt("Value", OptionKind::kValue, 0.0));
  q.options.push_back(opt("None", OptionKind::kNone, 0.0));
  return q;
}

std::vector<int> iota(std::size_t n) {
  std::vector<int> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<int>(i);
  return v;
}

ExampleRecord record(std::size_t turns, bool before, bool after, std::size_t questions, bool found = false,
                     std::size_t none = 0) {
  ExampleRecord r;
  r.turns = turns;
  r.before_correct = before;
  r.after_correct = after;
  r.questions = questions;
  r.found = found;
  r.none_answers = none;
  return r;
}

}  // namespace

TEST_CASE("running example asks about cat and aged") {
  const auto& rt = runtime();
  auto r = run_pipeline_once(kFig, "pets", rt.gateway(), rt.artifacts());
  REQUIRE(r.questions.size() == 2);
  CHECK(r.questions[0].token == "cat");
  CHECK(r.questions[1].token == "aged");
  for (const auto& q : r.questions) {
    CHECK(q.options.size() == 5);
    CHECK(q.options[3].kind == OptionKind::kValue);
    CHECK(q.options[4].kind == OptionKind::kNone);
  }
  CHECK(option_index(r.questions[1], OptionKind::kColumn, "pet_age") >= 0);
  CHECK(r.alignment.threshold == doctest::Approx(rt.artifacts().threshold));
}

TEST_CASE("session answers rewrite the question and fix the parse") {
  const auto& rt = runtime();
  const auto& m = rt.artifacts();
  auto gold = parse_sql(kFigGold, rt.schemas().at("pets"));
  auto s = start_session("s", kFig, "pets", rt.gateway(), m);
  CHECK(s.phase == SessionPhase::kAsking);
  CHECK_FALSE(canonical_equal(s.y, gold));
  CHECK(s.total_questions == 2);

  auto json = to_json(s);
  CHECK(json["phase"] == "asking");
  CHECK(json["progress"]["answered"] == 0);
  CHECK(json["progress"]["total"] == 2);
  CHECK(json["current"]["token"] == "cat");

  SUBCASE("wrong question and bad option are rejected") {
    CHECK_THROWS_AS(submit_answer(s, Answer{s.pending[1].token_index, 0}, rt.gateway(), m), Error);
    CHECK_THROWS_AS(submit_answer(s, Answer{s.pending[0].token_index, 9}, rt.gateway(), m), Error);
    CHECK_THROWS_AS(submit_answer(s, Answer{s.pending[0].token_index, -1}, rt.gateway(), m), Error);
  }

  SUBCASE("value then pet age") {
    s = submit_answer(s, Answer{s.pending[0].token_index, option_index(s.pending[0], OptionKind::kValue)},
                      rt.gateway(), m);
    CHECK(s.phase == SessionPhase::kAsking);
    CHECK(to_json(s)["progress"]["answered"] == 1);
    s = submit_answer(s, Answer{s.pending[0].token_index, option_index(s.pending[0], OptionKind::kColumn, "pet_age")},
                      rt.gateway(), m);
    REQUIRE(s.phase == SessionPhase::kFinalized);
    REQUIRE(s.x_hat);
    REQUIRE(s.y_hat);
    CHECK(*s.x_hat == "find the lname of the students who have a 'cat' whose pet_age is 3");
    CHECK(canonical_equal(*s.y_hat, gold));
    auto done = to_json(s);
    CHECK(done["phase"] == "finalized");
    CHECK(done["modified_question"] == *s.x_hat);
    try {
      submit_answer(s, Answer{0, 0}, rt.gateway(), m);
      FAIL("expected a state error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kState);
    }
  }

  SUBCASE("all None reproduces the input") {
    while (s.phase == SessionPhase::kAsking) {
      s = submit_answer(s, Answer{s.pending[0].token_index, option_index(s.pending[0], OptionKind::kNone)},
                        rt.gateway(), m);
    }
    CHECK(*s.x_hat == kFig);
    CHECK(canonical_equal(*s.y_hat, s.y));
  }
}

TEST_CASE("questions without uncertain tokens finalize at once") {
  const auto& rt = runtime();
  auto s = start_session("z", "what is the total budget of departments", "company", rt.gateway(), rt.artifacts());
  CHECK(s.phase == SessionPhase::kFinalized);
  CHECK(s.total_questions == 0);
  REQUIRE(s.y_hat);
  CHECK(to_sql(*s.y_hat) == to_sql(s.y));
  CHECK(*s.x_hat == s.x);
  CHECK(to_json(s)["progress"]["total"] == 0);
}

TEST_CASE("an unmapped mention becomes a question") {
  const auto& rt = runtime();
  auto r = run_pipeline_once("find the surname of students whose pettype is 'cat'", "pets", rt.gateway(),
                             rt.artifacts());
  REQUIRE_FALSE(r.questions.empty());
  CHECK(r.questions[0].token == "surname");
  CHECK(option_index(r.questions[0], OptionKind::kColumn, "lname") >= 0);
}

TEST_CASE("unknown database is an error") {
  const auto& rt = runtime();
  CHECK_THROWS_AS(start_session("u", "how many pets are there", "nope", rt.gateway(), rt.artifacts()), Error);
}

TEST_CASE("dedup skips a question answered by an earlier choice") {
  const auto& rt = runtime();
  const auto& m = rt.artifacts();
  auto r = run_pipeline_once(kFig, "pets", rt.gateway(), m);
  SessionState s;
  s.id = "d";
  s.db_id = "pets";
  s.x = kFig;
  s.y = r.y;
  s.phase = SessionPhase::kAsking;
  // "aged" first, then a question on "pet" that the pet_age choice covers
  auto aged = r.questions[1];
  MultiChoiceQuestion pet = aged;
  pet.token = "pet";
  pet.token_index = 99;
  s.pending = {aged, pet};
  s.total_questions = 2;
  s = submit_answer(s, Answer{aged.token_index, option_index(aged, OptionKind::kColumn, "pet_age")}, rt.gateway(), m);
  CHECK(s.phase == SessionPhase::kFinalized);
  CHECK(s.answers.size() == 1);
}

TEST_CASE("ranking by summed score with lexicographic ties") {
  std::vector<MultiChoiceQuestion> qs = {question(0, "a", {0.9, 0.5, 0.1}), question(1, "b", {0.8, 0.8, 0.2}),
                                         question(2, "c", {0.7, 0.3, 0.3})};
  std::vector<std::vector<int>> all(3, iota(5));
  auto full = rank_combinations(qs, all, 0);
  CHECK(full.size() == 125);
  auto capped = rank_combinations(qs, all, 100);
  CHECK(capped.size() == 100);
  CHECK(full.front().options == std::vector<int>{0, 0, 0});
  CHECK(full.front().score == doctest::Approx(2.4));
  CHECK(full[1].options == std::vector<int>{0, 1, 0});
  for (std::size_t i = 1; i < full.size(); ++i) {
    bool ordered = full[i - 1].score > full[i].score ||
                   (full[i - 1].score == full[i].score && full[i - 1].options < full[i].options);
    CHECK(ordered);
  }
  for (std::size_t i = 0; i < capped.size(); ++i) CHECK(capped[i].options == full[i].options);

  auto heap = rank_combinations(qs, all, 30, 10);
  REQUIRE(heap.size() == 30);
  for (std::size_t i = 0; i < heap.size(); ++i) CHECK(heap[i].options == full[i].options);

  std::vector<MultiChoiceQuestion> two = {qs[0], qs[1]};
  CHECK(rank_combinations(two, {iota(5), iota(5)}, 100).size() == 25);

  auto filtered = rank_combinations(two, {{1, 4}, {3}}, 0);
  REQUIRE(filtered.size() == 2);
  CHECK(filtered[0].options == std::vector<int>{1, 3});
  CHECK(filtered[1].options == std::vector<int>{4, 3});

  CHECK_THROWS_AS(rank_combinations(two, {iota(5)}, 0), Error);
}

TEST_CASE("gold filter keeps gold names, matching values and None") {
  const auto& rt = runtime();
  auto r = run_pipeline_once(kFig, "pets", rt.gateway(), rt.artifacts());
  auto gold = parse_sql(kFigGold, rt.schemas().at("pets"));
  auto cat = gold_filtered_options(r.questions[0], gold);
  auto aged = gold_filtered_options(r.questions[1], gold);
  // cat: student and lname are gold names, Value matches 'cat'
  CHECK(std::find(cat.begin(), cat.end(), option_index(r.questions[0], OptionKind::kValue)) != cat.end());
  CHECK(std::find(cat.begin(), cat.end(), option_index(r.questions[0], OptionKind::kNone)) != cat.end());
  CHECK(std::find(cat.begin(), cat.end(), option_index(r.questions[0], OptionKind::kAggregation)) == cat.end());
  CHECK(std::find(aged.begin(), aged.end(), option_index(r.questions[1], OptionKind::kColumn, "pet_age")) != aged.end());
  CHECK(std::find(aged.begin(), aged.end(), option_index(r.questions[1], OptionKind::kColumn, "age")) == aged.end());
  CHECK(std::find(aged.begin(), aged.end(), option_index(r.questions[1], OptionKind::kValue)) == aged.end());
}

TEST_CASE("simulated example succeeds by replaying the found combination") {
  const auto& rt = runtime();
  Example ex{kFig, kFigGold, "pets"};
  auto rec = simulate_example(ex, 0, rt.gateway(), rt.artifacts(), {});
  CHECK_FALSE(rec.before_correct);
  CHECK(rec.found);
  CHECK(rec.after_correct);
  CHECK(rec.turns == 2);
  CHECK(rec.combos_tried <= rec.combos_ranked);
  auto pipe = run_pipeline_once(kFig, "pets", rt.gateway(), rt.artifacts());
  auto replay = replay_combination(kFig, "pets", pipe.questions, rec.combination, rt.gateway(), rt.artifacts());
  REQUIRE(replay.y_hat);
  CHECK(canonical_equal(*replay.y_hat, parse_sql(kFigGold, rt.schemas().at("pets"))));
  CHECK(replay.x_hat == rec.modified_question);
}

TEST_CASE("failures are unreachable by any combination") {
  const auto& rt = runtime();
  auto examples = load_examples(fixtures::data("examples.jsonl"), rt.schemas());
  SimulationConfig open;
  open.cap = 0;
  open.filter_options = false;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto rec = simulate_example(examples[i], i, rt.gateway(), rt.artifacts(), {});
    if (rec.after_correct || rec.questions == 0) continue;
    auto pipe = run_pipeline_once(examples[i].question, examples[i].db_id, rt.gateway(), rt.artifacts());
    std::size_t space = 1;
    for (const auto& q : pipe.questions) space *= q.options.size();
    if (space > 200) continue;
    auto full = simulate_example(examples[i], i, rt.gateway(), rt.artifacts(), open);
    CHECK(full.combos_tried == space);
    CHECK_FALSE(full.found);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("serial and parallel simulation agree") {
  const auto& rt = runtime();
  auto examples = load_examples(fixtures::data("examples.jsonl"), rt.schemas());
  examples.resize(12);
  auto a = simulate_serial(examples, rt.gateway(), rt.artifacts());
  auto b = simulate_parallel(examples, rt.gateway(), rt.artifacts());
  CHECK(to_json(a).dump() == to_json(b).dump());
  auto m = metrics(a);
  CHECK(m.total == 12);
  CHECK(m.sql_acc_after >= m.sql_acc_before);
}

TEST_CASE("metrics") {
  SimulationReport r;
  r.records = {record(2, false, true, 2, true, 1), record(3, false, true, 3, true), record(1, true, true, 1),
               record(2, false, false, 2), record(2, true, true, 2, true)};
  auto m = metrics(r);
  CHECK(m.total == 5);
  CHECK(m.avg_turns == doctest::Approx(2.0));
  CHECK(m.sql_acc_before == doctest::Approx(0.4));
  CHECK(m.sql_acc_after == doctest::Approx(0.8));
  CHECK(m.turn_histogram.at(2) == 3);
  std::size_t sum = 0;
  for (const auto& [t, n] : m.turn_histogram) sum += n;
  CHECK(sum == 5);
  CHECK(m.none_ratio == doctest::Approx(1.0 / 7.0));

  SimulationReport z;
  z.records = {record(0, true, true, 0), record(2, false, true, 2, true)};
  auto mz = metrics(z);
  CHECK(mz.avg_turns == doctest::Approx(1.0));
  CHECK(mz.avg_turns_interactive == doctest::Approx(2.0));
  CHECK_THROWS_AS(metrics(SimulationReport{}), Error);
  auto j = to_json(m);
  CHECK(j["total"] == 5);
  CHECK(j["turn_histogram"]["2"] == 3);
}

TEST_CASE("bundled model loads with a matching dimension") {
  auto model = EncoderModel::load(fixtures::data("model.json"));
  CHECK(model.projection.dimension() == fixtures::bundled_embeddings().dimension());
  CHECK(model.threshold > 0.0);
  CHECK(model.threshold < 1.0);
}
