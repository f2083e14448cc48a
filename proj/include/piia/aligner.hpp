#pragma once

#include <Eigen/Dense>

#include <ostream>
#include <string>
#include <vector>

#include "piia/encoder.hpp"
#include "piia/restater.hpp"
#include "piia/schema.hpp"
#include "piia/text.hpp"

namespace piia {

struct SimilarityMatrix {
  Eigen::MatrixXd a;                    // N x M
  std::vector<std::string> row_labels;  // tokens of x
  std::vector<std::string> col_labels;  // tokens of x'
  std::vector<TokenOrigin> col_origins;
  std::vector<bool> row_exempt;    // never reported uncertain, not matched
  std::vector<bool> col_excluded;  // not matched
  std::vector<double> row_divisor;  // C applied to the row (1 when untouched)
};

SimilarityMatrix similarity_matrix(const Eigen::MatrixXd& h, const Eigen::MatrixXd& u);

// Marks stop/template rows exempt, excludes template-origin and stop-word
// columns, and divides each row whose token occurs in C > 1 schema names
// by C.
SimilarityMatrix mask_and_postprocess(SimilarityMatrix m, const std::vector<std::string>& x_tokens,
                                      const RestatedUtterance& restated,
                                      const DatabaseSchema& schema, const ContentFilter& filter);

// Maximum-weight assignment of size min(eligible rows, eligible cols).
// Among optimal assignments the lexicographically smallest row -> column
// vector wins (an unmatched row sorts after every column).  Result is
// indexed by row, -1 for unmatched.
std::vector<int> hungarian_match(const Eigen::MatrixXd& a, const std::vector<bool>& row_ok,
                                 const std::vector<bool>& col_ok);
std::vector<int> hungarian_match(const Eigen::MatrixXd& a);

// Sum of matched entries, accumulated in row order.
double matching_weight(const Eigen::MatrixXd& a, const std::vector<int>& match);

struct AlignmentResult {
  SimilarityMatrix matrix;
  std::vector<int> matching;
  std::vector<double> scores;  // matched entry, 0 when unmatched
  std::vector<std::size_t> uncertain;
  double threshold = 0.0;
};

// Matching and threshold selection over an already masked matrix.
AlignmentResult align(SimilarityMatrix masked, double p);

AlignmentResult locate_uncertain(const std::vector<Token>& x, const RestatedUtterance& restated,
                                 const PairEncoder& encoder, const DatabaseSchema& schema,
                                 const ContentFilter& filter, double p);

// Tab-separated grid with row / column labels.
void write_tsv(std::ostream& out, const SimilarityMatrix& m);

}  // namespace piia
