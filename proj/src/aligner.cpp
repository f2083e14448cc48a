#include "piia/aligner.hpp"

#include <cmath>
#include <iomanip>
#include <limits>

#include "piia/error.hpp"

namespace piia {

SimilarityMatrix similarity_matrix(const Eigen::MatrixXd& h, const Eigen::MatrixXd& u) {
  SimilarityMatrix m;
  m.a = cosine_matrix(h, u);
  m.row_labels.resize(static_cast<std::size_t>(m.a.rows()));
  m.col_labels.resize(static_cast<std::size_t>(m.a.cols()));
  m.col_origins.assign(static_cast<std::size_t>(m.a.cols()), TokenOrigin::kTemplate);
  m.row_exempt.assign(static_cast<std::size_t>(m.a.rows()), false);
  m.col_excluded.assign(static_cast<std::size_t>(m.a.cols()), false);
  m.row_divisor.assign(static_cast<std::size_t>(m.a.rows()), 1.0);
  return m;
}

SimilarityMatrix mask_and_postprocess(SimilarityMatrix m, const std::vector<std::string>& x_tokens,
                                      const RestatedUtterance& restated,
                                      const DatabaseSchema& schema, const ContentFilter& filter) {
  if (x_tokens.size() != static_cast<std::size_t>(m.a.rows()) ||
      restated.tokens.size() != static_cast<std::size_t>(m.a.cols())) {
    throw Error(ErrorCode::kValidation, "similarity matrix shape does not match the utterances");
  }
  m.row_labels.resize(x_tokens.size());
  m.col_labels.resize(restated.tokens.size());
  m.col_origins.assign(restated.tokens.size(), TokenOrigin::kTemplate);
  m.row_exempt.assign(x_tokens.size(), false);
  m.col_excluded.assign(restated.tokens.size(), false);
  m.row_divisor.assign(x_tokens.size(), 1.0);
  for (std::size_t n = 0; n < x_tokens.size(); ++n) {
    m.row_labels[n] = x_tokens[n];
    m.row_exempt[n] = !filter.keep_question_word(x_tokens[n]);
    if (m.row_exempt[n]) continue;
    std::string word = normalize_word(x_tokens[n]);
    auto c = std::max(occurrence_count(schema, word), occurrence_count(schema, lemmatize(word)));
    if (c > 1) {
      m.row_divisor[n] = static_cast<double>(c);
      m.a.row(static_cast<Eigen::Index>(n)) /= static_cast<double>(c);
    }
  }
  for (std::size_t j = 0; j < restated.tokens.size(); ++j) {
    m.col_labels[j] = restated.tokens[j].surface;
    m.col_origins[j] = restated.tokens[j].origin;
    m.col_excluded[j] = !filter.keep_restated(restated.tokens[j]);
  }
  return m;
}

namespace {

// Min-cost perfect assignment on a square matrix (potentials method).
// Returns the column assigned to each row.
std::vector<int> solve_square(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j]) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

// Best total weight of a full-cardinality matching over the given rows/cols.
double best_weight(const Eigen::MatrixXd& a, const std::vector<int>& rows,
                   const std::vector<int>& cols) {
  if (rows.empty() || cols.empty()) return 0.0;
  const auto n = static_cast<Eigen::Index>(std::max(rows.size(), cols.size()));
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) cost(i, j) = -a(rows[i], cols[j]);
  }
  auto assign = solve_square(cost);
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto j = static_cast<std::size_t>(assign[i]);
    if (j < cols.size()) total += a(rows[i], cols[j]);
  }
  return total;
}

}  // namespace

std::vector<int> hungarian_match(const Eigen::MatrixXd& a, const std::vector<bool>& row_ok,
                                 const std::vector<bool>& col_ok) {
  std::vector<int> match(static_cast<std::size_t>(a.rows()), -1);
  std::vector<int> rows, cols;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (row_ok[static_cast<std::size_t>(i)]) rows.push_back(static_cast<int>(i));
  }
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    if (col_ok[static_cast<std::size_t>(j)]) cols.push_back(static_cast<int>(j));
  }
  if (rows.empty() || cols.empty()) return match;

  const double target = best_weight(a, rows, cols);
  const double tol = 1e-9 * std::max(1.0, std::abs(target));
  double fixed = 0.0;
  // Fix rows in order to the smallest column that keeps the optimum reachable.
  while (!rows.empty()) {
    int r = rows.front();
    std::vector<int> rest_rows(rows.begin() + 1, rows.end());
    bool placed = false;
    for (std::size_t k = 0; k < cols.size() && !placed; ++k) {
      std::vector<int> rest_cols = cols;
      rest_cols.erase(rest_cols.begin() + static_cast<long>(k));
      // Remaining rows must still fill min(rows, cols) slots.
      double w = fixed + a(r, cols[k]) + best_weight(a, rest_rows, rest_cols);
      if (w >= target - tol) {
        match[static_cast<std::size_t>(r)] = cols[k];
        fixed += a(r, cols[k]);
        cols = std::move(rest_cols);
        placed = true;
      }
    }
    if (!placed) {
      // Unmatched is only possible when rows outnumber columns.
      if (rest_rows.size() < cols.size()) {
        throw Error(ErrorCode::kNumeric, "assignment search lost the optimum");
      }
    }
    rows = std::move(rest_rows);
  }
  return match;
}

std::vector<int> hungarian_match(const Eigen::MatrixXd& a) {
  return hungarian_match(a, std::vector<bool>(static_cast<std::size_t>(a.rows()), true),
                         std::vector<bool>(static_cast<std::size_t>(a.cols()), true));
}

double matching_weight(const Eigen::MatrixXd& a, const std::vector<int>& match) {
  double total = 0.0;
  for (std::size_t i = 0; i < match.size(); ++i) {
    if (match[i] >= 0) total += a(static_cast<Eigen::Index>(i), match[i]);
  }
  return total;
}

AlignmentResult align(SimilarityMatrix masked, double p) {
  AlignmentResult r;
  std::vector<bool> row_ok(masked.row_exempt.size()), col_ok(masked.col_excluded.size());
  for (std::size_t i = 0; i < row_ok.size(); ++i) row_ok[i] = !masked.row_exempt[i];
  for (std::size_t j = 0; j < col_ok.size(); ++j) col_ok[j] = !masked.col_excluded[j];
  r.matching = hungarian_match(masked.a, row_ok, col_ok);
  r.scores.assign(r.matching.size(), 0.0);
  for (std::size_t i = 0; i < r.matching.size(); ++i) {
    if (r.matching[i] >= 0) r.scores[i] = masked.a(static_cast<Eigen::Index>(i), r.matching[i]);
    if (!masked.row_exempt[i] && r.scores[i] < p) r.uncertain.push_back(i);
  }
  r.threshold = p;
  r.matrix = std::move(masked);
  return r;
}

AlignmentResult locate_uncertain(const std::vector<Token>& x, const RestatedUtterance& restated,
                                 const PairEncoder& encoder, const DatabaseSchema& schema,
                                 const ContentFilter& filter, double p) {
  std::vector<std::string> x_tokens, x_words;
  for (const auto& t : x) {
    x_tokens.push_back(t.text);
    x_words.push_back(normalize_word(t.text));
  }
  std::vector<std::string> restated_words;
  for (const auto& t : restated.tokens) restated_words.push_back(normalize_word(t.surface));
  if (x_tokens.empty() || restated_words.empty()) {
    SimilarityMatrix m = similarity_matrix(Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(x_tokens.size())),
                                           Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(restated_words.size())));
    return align(mask_and_postprocess(std::move(m), x_tokens, restated, schema, filter), p);
  }
  auto [h, u] = encoder.encode_pair(x_words, restated_words);
  if (h.cols() != static_cast<Eigen::Index>(x_words.size()) ||
      u.cols() != static_cast<Eigen::Index>(restated_words.size()) || h.rows() != u.rows()) {
    throw Error(ErrorCode::kConfiguration, "encoder returned matrices of the wrong shape");
  }
  return align(mask_and_postprocess(similarity_matrix(h, u), x_tokens, restated, schema, filter), p);
}

void write_tsv(std::ostream& out, const SimilarityMatrix& m) {
  out << "x\\x'";
  for (const auto& c : m.col_labels) out << '\t' << c;
  out << '\n';
  out << std::fixed << std::setprecision(4);
  for (Eigen::Index i = 0; i < m.a.rows(); ++i) {
    out << m.row_labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.a.cols(); ++j) out << '\t' << m.a(i, j);
    out << '\n';
  }
}

}  // namespace piia
