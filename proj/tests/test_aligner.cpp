#include <sstream>

#include "checks.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "piia/aligner.hpp"
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

// Unit vectors: shared axis for near-synonyms, private axes otherwise.
EmbeddingTable fig3_table() {
  const int d = 10;
  auto axis = [&](int i, double w = 1.0) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    v(i) = w;
    return v;
  };
  std::unordered_map<std::string, Eigen::VectorXd> v;
  v["lname"] = axis(0);
  v["student"] = axis(1);
  v["age"] = axis(2);
  v["3"] = axis(3);
  v["cat"] = axis(4);
  Eigen::VectorXd aged = axis(2) * 0.9 + axis(5) * std::sqrt(1 - 0.81);
  v["aged"] = aged;
  v["find"] = axis(6);
  v["the"] = axis(7);
  v["of"] = axis(8);
  v["whose"] = axis(9);
  v["is"] = axis(9);
  return EmbeddingTable(d, v, EmbeddingTable::UnknownPolicy::kZero);
}

}  // namespace

TEST_CASE("hungarian small cases") {
  auto a = mat({{0.9, 0.1}, {0.2, 0.8}});
  auto m = hungarian_match(a);
  CHECK(m == std::vector<int>{0, 1});
  CHECK(matching_weight(a, m) == doctest::Approx(1.7));
  CHECK(hungarian_match(mat({{0.3}})) == std::vector<int>{0});
  auto tall = mat({{0.1, 0.5}, {0.9, 0.2}, {0.4, 0.3}});
  auto mt = hungarian_match(tall);
  CHECK(std::count_if(mt.begin(), mt.end(), [](int j) { return j >= 0; }) == 2);
  CHECK(mt == std::vector<int>{1, 0, -1});
}

TEST_CASE("hungarian ties are lexicographic") {
  CHECK(hungarian_match(mat({{1, 1}, {1, 1}})) == std::vector<int>{0, 1});
  CHECK(hungarian_match(mat({{1, 1}, {1, 1}, {1, 1}})) == std::vector<int>{0, 1, -1});
  CHECK(hungarian_match(mat({{0.5, 0.5, 0.5}})) == std::vector<int>{0});
  CHECK(hungarian_match(mat({{0, 1, 1}, {1, 1, 0}})) == std::vector<int>{1, 0});
}

TEST_CASE("hungarian respects masks") {
  auto a = mat({{0.9, 0.8}, {0.7, 0.1}});
  auto m = hungarian_match(a, {true, true}, {false, true});
  CHECK(m == std::vector<int>{1, -1});
  auto m2 = hungarian_match(a, {false, true}, {true, true});
  CHECK(m2 == std::vector<int>{-1, 0});
}

TEST_CASE("hungarian equals brute force") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> size(1, 7);
  std::uniform_int_distribution<int> level(0, 4);
  for (int trial = 0; trial < 150; ++trial) {
    int n = size(rng), m = size(rng);
    Eigen::MatrixXd a(n, m);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = trial % 2 ? level(rng) / 4.0 : std::uniform_real_distribution<double>(-1, 1)(rng);
    auto match = hungarian_match(a);
    std::vector<int> used;
    for (int j : match) {
      if (j >= 0) used.push_back(j);
    }
    CHECK(used.size() == static_cast<std::size_t>(std::min(n, m)));
    std::sort(used.begin(), used.end());
    CHECK(std::adjacent_find(used.begin(), used.end()) == used.end());
    CHECK(matching_weight(a, match) == doctest::Approx(checks::brute_force_max(a)).epsilon(1e-12));
  }
}

TEST_CASE("masking and S/C") {
  auto s = fixtures::pets();
  RestatedUtterance r;
  r.text = "find age";
  r.tokens = {{"find", TokenOrigin::kTemplate}, {"age", TokenOrigin::kColumn}};
  SimilarityMatrix m;
  m.a = mat({{0.2, 0.3}, {0.5, 0.8}, {0.1, 0.9}});
  m.row_labels = {"the", "age", "lname"};
  m.col_labels = {"find", "age"};
  auto out = mask_and_postprocess(m, m.row_labels, r, s, ContentFilter{});
  CHECK(out.row_exempt == std::vector<bool>{true, false, false});
  CHECK(out.col_excluded == std::vector<bool>{true, false});
  CHECK(out.a(1, 1) == doctest::Approx(0.4));
  CHECK(out.row_divisor[1] == 2.0);
  CHECK(out.a(2, 1) == doctest::Approx(0.9));
  auto res = align(out, 0.5);
  CHECK(res.uncertain == std::vector<std::size_t>{1});
}

TEST_CASE("cosine entries") {
  Eigen::MatrixXd h(2, 1), u(2, 1);
  h << 1, 0;
  u << 1, 1;
  auto m = similarity_matrix(h, u);
  CHECK(m.a(0, 0) == doctest::Approx(0.70710678118));
}

TEST_CASE("locate uncertain tokens, pets case") {
  auto s = fixtures::pets();
  auto table = fig3_table();
  auto proj = Projection::identity(table.dimension());
  LocalEncoder enc(table, proj);
  auto restated = restate(to_ir(parse_sql("SELECT lname FROM student WHERE age = 3", s), s), s);
  CHECK(restated.text == "find the lname of student whose age is 3");
  auto x = tokenize("find the lname of the students who have a cat aged 3");
  // tanh(1) scaling is shared by every unit vector, so cosines stay exact.
  auto r = locate_uncertain(x, restated, enc, s, ContentFilter{}, 0.6);
  std::vector<std::string> got;
  for (auto i : r.uncertain) got.push_back(x[i].text);
  CHECK(got == std::vector<std::string>{"cat", "aged"});
  const double t9 = std::tanh(0.9), tr = std::tanh(std::sqrt(1 - 0.81));
  CHECK(r.scores[10] == doctest::Approx(t9 / std::sqrt(t9 * t9 + tr * tr) / 2).epsilon(1e-12));

  // "age" sits in two schema names, so its matched score is 1/2.
  auto perfect = locate_uncertain(tokenize("find the lname of student whose age is 3"), restated, enc, s,
                                  ContentFilter{}, 0.4);
  CHECK(perfect.uncertain.empty());

  auto one = locate_uncertain(tokenize("lname of student with cat"), restate(to_ir(parse_sql("SELECT lname FROM student", s), s), s),
                              enc, s, ContentFilter{}, 0.6);
  REQUIRE(one.uncertain.size() == 1);
  CHECK(one.matrix.row_labels[one.uncertain[0]] == "cat");
}

TEST_CASE("tsv dump") {
  SimilarityMatrix m;
  m.a = mat({{0.5, 0.25}});
  m.row_labels = {"cat"};
  m.col_labels = {"pet", "'cat'"};
  std::ostringstream out;
  write_tsv(out, m);
  CHECK(out.str() == "x\\x'\tpet\t'cat'\ncat\t0.5000\t0.2500\n");
}
