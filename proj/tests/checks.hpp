#pragma once

// Independent oracles shared by the unit tests and the acceptance binary.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "piia/encoder.hpp"

namespace checks {

// Best total weight over all injective maps of the smaller side.
inline double brute_force_max(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows()), m = static_cast<int>(a.cols());
  if (n == 0 || m == 0) return 0.0;
  double best = -std::numeric_limits<double>::infinity();
  if (n <= m) {
    std::vector<int> cols(m);
    std::iota(cols.begin(), cols.end(), 0);
    do {
      double s = 0;
      for (int i = 0; i < n; ++i) s += a(i, cols[i]);
      best = std::max(best, s);
    } while (std::next_permutation(cols.begin(), cols.end()));
  } else {
    std::vector<int> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    do {
      double s = 0;
      for (int j = 0; j < m; ++j) s += a(rows[j], j);
      best = std::max(best, s);
    } while (std::next_permutation(rows.begin(), rows.end()));
  }
  return best;
}

// s = mean over rows of the row maximum, straight from the definition.
inline double reference_similarity(const Eigen::MatrixXd& h, const Eigen::MatrixXd& u) {
  double total = 0;
  for (Eigen::Index n = 0; n < h.cols(); ++n) {
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index m = 0; m < u.cols(); ++m) {
      double nh = h.col(n).norm(), nu = u.col(m).norm();
      double c = (nh == 0 || nu == 0) ? 0.0 : h.col(n).dot(u.col(m)) / (nh * nu);
      best = std::max(best, c);
    }
    total += best;
  }
  return total / static_cast<double>(h.cols());
}

inline double reference_loss(const Eigen::MatrixXd& x, const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg,
                             const piia::Projection& p, double margin, double lambda) {
  auto h = p.apply(x), up = p.apply(pos), un = p.apply(neg);
  auto ap = piia::cosine_matrix(h, up), an = piia::cosine_matrix(h, un);
  return piia::loss(ap, an, margin, lambda);
}

struct GradientCheck {
  bool differentiable = true;
  double max_rel_error = 0.0;
};

// Central differences against loss_gradient over every parameter.  Points
// near a hinge kink, a row-max tie or a zero cosine are reported as not
// differentiable.
inline GradientCheck gradient_check(const Eigen::MatrixXd& x, const Eigen::MatrixXd& pos,
                                    const Eigen::MatrixXd& neg, piia::Projection p, double margin,
                                    double lambda, double step = 1e-5) {
  GradientCheck out;
  auto h = p.apply(x), up = p.apply(pos), un = p.apply(neg);
  auto ap = piia::cosine_matrix(h, up), an = piia::cosine_matrix(h, un);
  const double kink = 1e-3;
  double gap = margin - piia::sentence_similarity(ap) + piia::sentence_similarity(an);
  if (std::abs(gap) < kink) out.differentiable = false;
  for (const auto* a : {&ap, &an}) {
    if (lambda > 0 && a->cwiseAbs().minCoeff() < kink) out.differentiable = false;
    for (Eigen::Index r = 0; r < a->rows(); ++r) {
      Eigen::VectorXd row = a->row(r);
      std::sort(row.data(), row.data() + row.size(), std::greater<>());
      if (row.size() > 1 && row(0) - row(1) < kink) out.differentiable = false;
    }
  }
  if (!out.differentiable) return out;

  auto g = piia::loss_gradient(x, pos, neg, p, margin, lambda);
  std::size_t idx = 0;
  for (int l = 0; l < p.depth(); ++l) {
    const auto& w = g.weight[static_cast<std::size_t>(l)];
    const auto& b = g.bias[static_cast<std::size_t>(l)];
    std::vector<double> analytic(w.data(), w.data() + w.size());
    analytic.insert(analytic.end(), b.data(), b.data() + b.size());
    for (double an_value : analytic) {
      double& theta = p.parameter(idx++);
      const double saved = theta;
      theta = saved + step;
      double lp = reference_loss(x, pos, neg, p, margin, lambda);
      theta = saved - step;
      double lm = reference_loss(x, pos, neg, p, margin, lambda);
      theta = saved;
      double numeric = (lp - lm) / (2 * step);
      double denom = std::max({std::abs(numeric), std::abs(an_value), 1e-2});
      out.max_rel_error = std::max(out.max_rel_error, std::abs(numeric - an_value) / denom);
    }
  }
  return out;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols, double sigma = 1.0) {
  std::normal_distribution<double> n(0.0, sigma);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

}  // namespace checks
