#include "msnfa/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>

#include "msnfa/errors.hpp"

namespace msnfa {

namespace {

double choose2(double n) { return 0.5 * n * (n - 1.0); }

// Maps arbitrary integer labels to dense indices in ascending label order.
std::vector<int> dense_codes(const std::vector<int>& labels, int* n_codes) {
  std::map<int, int> code;
  for (const int v : labels) code.emplace(v, 0);
  int next = 0;
  for (auto& kv : code) kv.second = next++;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = code.at(labels[i]);
  *n_codes = next;
  return out;
}

// Minimum-cost perfect matching on a square cost matrix via the potentials
// method; O(k^3).
std::int64_t hungarian_min(const std::vector<std::vector<std::int64_t>>& cost) {
  const int k = static_cast<int>(cost.size());
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(k + 1, 0), v(k + 1, 0);
  std::vector<int> match(k + 1, 0), way(k + 1, 0);
  for (int i = 1; i <= k; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<std::int64_t> minv(k + 1, kInf);
    std::vector<char> used(k + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = 0;
      std::int64_t delta = kInf;
      for (int j = 1; j <= k; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= k; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::int64_t total = 0;
  for (int j = 1; j <= k; ++j) total += cost[match[j] - 1][j - 1];
  return total;
}

// Maximum of sum_j counts(row_of[j], j) over injective column-to-row maps.
// Brute force up to 8 labels, assignment solver beyond.
std::int64_t best_label_matching(const Eigen::MatrixXi& counts) {
  const int k = static_cast<int>(std::max(counts.rows(), counts.cols()));
  Eigen::MatrixXi padded = Eigen::MatrixXi::Zero(k, k);
  padded.topLeftCorner(counts.rows(), counts.cols()) = counts;
  if (k <= 8) {
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::int64_t best = std::numeric_limits<std::int64_t>::min();
    do {
      std::int64_t s = 0;
      for (int j = 0; j < k; ++j) s += padded(perm[j], j);
      best = std::max(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
  }
  std::vector<std::vector<std::int64_t>> cost(k, std::vector<std::int64_t>(k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) cost[i][j] = -static_cast<std::int64_t>(padded(i, j));
  return -hungarian_min(cost);
}

}  // namespace

CriteriaRow criteria(double loglik, int m, int n, const Eigen::MatrixXd& z) {
  if (n < 2) throw BadDimension("criteria: need n >= 2");
  if (z.rows() < 1 || z.cols() != n)
    throw BadDimension("criteria: posterior matrix must be g x n");
  if (m < 1) throw BadDimension("criteria: need m >= 1");
  double ent = 0.0;
  for (int j = 0; j < z.cols(); ++j) {
    const double col_sum = z.col(j).sum();
    if (std::abs(col_sum - 1.0) > 1e-8 || z.col(j).minCoeff() < -1e-12)
      throw InvariantViolation("criteria: posterior column " + std::to_string(j) +
                               " is not on the simplex");
    for (int i = 0; i < z.rows(); ++i) {
      const double zij = z(i, j);
      if (zij > 0.0) ent -= zij * std::log(zij);
    }
  }
  ent = std::max(ent, 0.0);
  CriteriaRow row;
  row.g = static_cast<int>(z.rows());
  row.loglik = loglik;
  row.m = m;
  row.ent = ent;
  const double log_n = std::log(static_cast<double>(n));
  row.bic = loglik - 0.5 * m * log_n;
  row.icl = row.bic - ent;
  row.awe = row.icl - m * (1.5 + log_n);
  return row;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty()) throw BadDimension("adjusted_rand_index: empty label vectors");
  if (a.size() != b.size())
    throw BadDimension("adjusted_rand_index: label vectors differ in length");
  const Eigen::MatrixXi table = classification_table(a, b);
  const double n = static_cast<double>(a.size());
  double sum_cells = 0.0;
  for (int i = 0; i < table.rows(); ++i)
    for (int j = 0; j < table.cols(); ++j) sum_cells += choose2(table(i, j));
  double sum_rows = 0.0;
  for (int i = 0; i < table.rows(); ++i) sum_rows += choose2(table.row(i).sum());
  double sum_cols = 0.0;
  for (int j = 0; j < table.cols(); ++j) sum_cols += choose2(table.col(j).sum());
  const double expected = sum_rows * sum_cols / choose2(n);
  const double maximum = 0.5 * (sum_rows + sum_cols);
  const double denom = maximum - expected;
  // Both partitions trivial in the same way: all pairs agree, index is 1.
  if (std::abs(denom) < 1e-12) return 1.0;
  return (sum_cells - expected) / denom;
}

double correct_classification_rate(const std::vector<int>& truth,
                                   const std::vector<int>& pred) {
  if (truth.empty()) throw BadDimension("correct_classification_rate: empty label vectors");
  if (truth.size() != pred.size())
    throw BadDimension("correct_classification_rate: label vectors differ in length");
  const Eigen::MatrixXi table = classification_table(truth, pred);
  const std::int64_t matched = best_label_matching(table);
  return static_cast<double>(matched) / static_cast<double>(truth.size());
}

Eigen::MatrixXi classification_table(const std::vector<int>& truth,
                                     const std::vector<int>& pred) {
  if (truth.size() != pred.size())
    throw BadDimension("classification_table: label vectors differ in length");
  int k_true = 0;
  int k_pred = 0;
  const std::vector<int> rows = dense_codes(truth, &k_true);
  const std::vector<int> cols = dense_codes(pred, &k_pred);
  Eigen::MatrixXi table = Eigen::MatrixXi::Zero(k_true, k_pred);
  for (std::size_t i = 0; i < rows.size(); ++i) ++table(rows[i], cols[i]);
  return table;
}

}  // namespace msnfa
