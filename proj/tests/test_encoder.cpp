#include <cmath>
#include <fstream>

#include "checks.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "piia/error.hpp"
#include "piia/ir.hpp"

using namespace piia;

namespace {

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

RestatedUtterance content(const std::string& words) {
  RestatedUtterance r;
  r.text = words;
  for (const auto& w : split_whitespace(words)) r.tokens.push_back({w, TokenOrigin::kColumn});
  return r;
}

// Embeddings whose identity-projected images are exactly the given vectors.
EmbeddingTable preimage_table(const std::map<std::string, Eigen::Vector2d>& images) {
  std::unordered_map<std::string, Eigen::VectorXd> v;
  for (const auto& [w, img] : images) v[w] = img.array().atanh().matrix();
  return EmbeddingTable(2, v);
}

}  // namespace

TEST_CASE("sentence similarity") {
  CHECK(sentence_similarity(mat({{0.5}})) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(sentence_similarity(mat({{0.9, 0.1}, {0.2, 0.8}})) - 0.85) < 1e-12);
  CHECK(sentence_similarity(mat({{0.3, 0.1, -0.2}, {0.0, 0.3, 0.3}})) == doctest::Approx(0.3));
  CHECK(sentence_similarity(Eigen::MatrixXd(0, 0)) == 0.0);
}

TEST_CASE("loss") {
  CHECK(std::abs(loss(mat({{1.0}}), mat({{0.2}}), 1.0, 0.5) - 0.8) < 1e-12);
  CHECK(loss(mat({{0.9}}), mat({{0.2}}), 1.0, 0.0) == doctest::Approx(0.3));
  CHECK(loss(mat({{1.0}}), mat({{-0.5}}), 1.0, 0.0) == 0.0);
  CHECK(loss(mat({{0.5, -0.5}}), mat({{0.0, 0.0}}), 1.0, 1.0) == doctest::Approx(0.5 + 1.0));
}

TEST_CASE("cosine") {
  Eigen::MatrixXd h(2, 1), u(2, 3);
  h << 1, 0;
  u << 1, 0, 1,
       0, 1, 1;
  auto a = cosine_matrix(h, u);
  CHECK(a(0, 0) == doctest::Approx(1.0));
  CHECK(a(0, 1) == doctest::Approx(0.0));
  CHECK(std::abs(a(0, 2) - 0.70710678118654752) < 1e-12);
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(2, 1);
  CHECK(cosine_matrix(z, u)(0, 0) == 0.0);
}

TEST_CASE("embedding table") {
  auto t = EmbeddingTable::parse("cat 1 0\nage 0 1\npet 1 1\n");
  CHECK(t.dimension() == 2);
  CHECK(t.size() == 3);
  CHECK(t.lookup("Cats")(0) == 1.0);
  CHECK(t.lookup("'cat'")(0) == 1.0);
  auto pa = t.lookup("pet_age");
  CHECK(pa(0) == doctest::Approx(0.5));
  CHECK(pa(1) == doctest::Approx(1.0));
  auto unk = t.lookup("zqx");
  CHECK(unk(0) == doctest::Approx(2.0 / 3));
  auto zero = EmbeddingTable::parse("cat 1 0\n", "m", EmbeddingTable::UnknownPolicy::kZero);
  CHECK(zero.lookup("zqx").isZero());
  try {
    EmbeddingTable::parse("cat 1 0\ndog 1\n", "emb.txt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("emb.txt:2") != std::string::npos);
  }
  CHECK_THROWS_AS(EmbeddingTable::parse("cat 1 x\n"), Error);
}

TEST_CASE("encode") {
  auto t = EmbeddingTable::parse("a 0.001 0.002\nb -0.003 0.001\n");
  auto h = encode({"a", "b"}, t, Projection::identity(2));
  CHECK(h(0, 0) == doctest::Approx(0.001).epsilon(1e-6));
  CHECK(h(0, 1) == doctest::Approx(-0.003).epsilon(1e-5));

  const auto& big = fixtures::bundled_embeddings();
  auto p = Projection::random(big.dimension(), 1, 3, 0.1);
  auto h3 = encode({"find", "cat", "zqx"}, big, p);
  CHECK(h3.rows() == 50);
  CHECK(h3.cols() == 3);
  Eigen::VectorXd want = (p.layers()[0].weight * big.unknown() + p.layers()[0].bias).array().tanh();
  CHECK((h3.col(2) - want).norm() < 1e-12);

  CHECK_THROWS_AS(encode({}, t, Projection::identity(2)), Error);
  CHECK_THROWS_AS(encode({"a"}, t, Projection::identity(3)), Error);
}

TEST_CASE("triples") {
  const auto& schemas = fixtures::bundled_schemas();
  auto all = load_examples(fixtures::data("examples.jsonl"), schemas);
  std::vector<Example> ten(all.begin(), all.begin() + 10);
  TrainConfig cfg;
  auto triples = make_triples(ten, schemas, cfg);
  CHECK(triples.size() == 1000);
  std::size_t perturbed = 0;
  for (const auto& t : triples) {
    CHECK(t.neg.text != t.pos.text);
    perturbed += t.perturbed;
  }
  CHECK(perturbed > 400);
  auto again = make_triples(ten, schemas, cfg);
  for (std::size_t i = 0; i < triples.size(); ++i) CHECK(again[i].neg.text == triples[i].neg.text);

  cfg.random_negatives = 0;
  cfg.perturbed_negatives = 0;
  CHECK(make_triples(ten, schemas, cfg).empty());
}

TEST_CASE("perturbation replaces columns") {
  auto s = fixtures::pets();
  auto pos = restate(to_ir(parse_sql("SELECT lname FROM student", s), s), s);
  CHECK(pos.text == "find the lname of student");
  RestatedUtterance out;
  REQUIRE(perturb_restatement(pos, s, {}, 1, out));
  CHECK(out.text != pos.text);
  CHECK(out.tokens.size() == pos.tokens.size());
  std::size_t changed = 0;
  for (std::size_t i = 0; i < pos.tokens.size(); ++i) {
    if (out.tokens[i].surface != pos.tokens[i].surface) {
      ++changed;
      CHECK(pos.tokens[i].origin == TokenOrigin::kColumn);
      CHECK(s.find_table("student") != nullptr);
    }
  }
  CHECK(changed == 1);
}

TEST_CASE("threshold of one triple") {
  auto table = preimage_table({{"alpha", {0.5, 0.0}}, {"beta", {0.4, 0.3}}, {"gamma", {0.2, 0.2 * std::sqrt(1 / 0.16 - 1)}}});
  std::vector<TrainingTriple> tr{{"alpha", content("beta"), content("gamma"), 0, false}};
  TripleSet set(tr, table);
  auto p = Projection::identity(2);
  auto sc = score_triple(set.utterance(0), set.utterance(1), set.utterance(2), p, 1, 0.5);
  CHECK(sc.s_pos == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(sc.s_neg == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(std::abs(threshold_serial(set, p) - 0.6) < 1e-12);
  CHECK(threshold_parallel(set, p) == threshold_serial(set, p));
}

TEST_CASE("training") {
  auto table = EmbeddingTable::parse(
      "alpha 0.3 -0.2 0.1 0.4\nbeta -0.1 0.5 0.2 -0.3\ngamma 0.2 0.2 -0.4 0.1\n"
      "delta -0.3 0.1 0.3 0.2\nepsilon 0.1 -0.4 -0.2 0.3\nzeta 0.4 0.3 0.1 -0.1\n");
  std::vector<TrainingTriple> tr = {
      {"alpha beta", content("alpha beta"), content("gamma delta"), 0, false},
      {"gamma", content("gamma"), content("epsilon"), 1, false},
      {"delta zeta", content("delta zeta"), content("alpha"), 2, false},
      {"epsilon", content("epsilon"), content("beta zeta"), 3, false},
      {"zeta", content("zeta"), content("delta"), 4, false},
  };
  TripleSet set(tr, table);

  SUBCASE("zero epochs keep the initial layer") {
    TrainConfig cfg;
    cfg.epochs = 0;
    auto r = train(set, 4, cfg);
    auto init = Projection::random(4, 1, cfg.seed, cfg.init_noise);
    CHECK(r.model.projection.layers()[0].weight == init.layers()[0].weight);
    CHECK(r.model.threshold == threshold_serial(set, init));
    CHECK(r.epoch_losses.empty());
  }
  SUBCASE("separable triples saturate the hinge without the L1 term") {
    TrainConfig cfg;
    cfg.lambda = 0;
    cfg.learning_rate = 0.2;
    cfg.epochs = 400;
    auto r = train(set, 4, cfg);
    CHECK(r.epoch_losses.back() == doctest::Approx(0.0).epsilon(1e-9));
    for (std::size_t i = 0; i < set.size(); ++i) {
      const auto& e = set.entry(i);
      auto s = score_triple(set.utterance(e.x), set.utterance(e.pos), set.utterance(e.neg), r.model.projection, 1, 0);
      CHECK(s.loss == 0.0);
    }
  }
  SUBCASE("same seed, same layer") {
    TrainConfig cfg;
    cfg.epochs = 5;
    auto a = train(set, 4, cfg), b = train(set, 4, cfg);
    CHECK(a.model.projection.layers()[0].weight == b.model.projection.layers()[0].weight);
    CHECK(a.model.threshold == b.model.threshold);
  }
  SUBCASE("loss decreases") {
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.learning_rate = 0.05;
    auto r = train(set, 4, cfg);
    CHECK(r.epoch_losses.back() < r.epoch_losses.front());
  }
  SUBCASE("bad config") {
    TrainConfig cfg;
    cfg.margin = 0;
    CHECK_THROWS_AS(train(set, 4, cfg), Error);
  }
}

TEST_CASE("gradient matches finite differences") {
  std::mt19937_64 rng(99);
  int checked = 0;
  for (int trial = 0; trial < 40 && checked < 10; ++trial) {
    const int d = 8;
    auto x = checks::random_matrix(rng, d, 3, 0.5);
    auto pos = checks::random_matrix(rng, d, 4, 0.5);
    auto neg = checks::random_matrix(rng, d, 2, 0.5);
    auto p = Projection::random(d, 1 + trial % 2, 100 + static_cast<std::uint64_t>(trial), 0.3);
    auto r = checks::gradient_check(x, pos, neg, p, 1.0, 0.5);
    if (!r.differentiable) continue;
    ++checked;
    CHECK(r.max_rel_error < 1e-4);
  }
  CHECK(checked == 10);
}

TEST_CASE("model file round trip") {
  EncoderModel m{Projection::random(3, 2, 5, 0.2), 0.4321};
  auto path = std::filesystem::temp_directory_path() / "piia_model.json";
  m.save(path);
  auto back = EncoderModel::load(path);
  CHECK(back.threshold == m.threshold);
  REQUIRE(back.projection.depth() == 2);
  for (int l = 0; l < 2; ++l) {
    CHECK((back.projection.layers()[l].weight - m.projection.layers()[l].weight).norm() < 1e-15);
    CHECK((back.projection.layers()[l].bias - m.projection.layers()[l].bias).norm() < 1e-15);
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(EncoderModel::load(path), Error);
}

TEST_CASE("content views") {
  ContentFilter f;
  CHECK(f.question_view("find the lname of the students") == std::vector<std::string>{"lname", "students"});
  CHECK(f.keep_question_word("'the'"));
  auto s = fixtures::pets();
  auto r = restate(to_ir(parse_sql("SELECT weight FROM pet WHERE pettype = 'cat'", s), s), s);
  CHECK(f.restatement_view(r) == std::vector<std::string>{"weight", "pet", "pettype", "cat"});
}
