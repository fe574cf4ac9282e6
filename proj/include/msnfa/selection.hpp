#pragma once

#include <Eigen/Core>
#include <vector>

namespace msnfa {

// One row of a model-selection table. g is taken from the posterior matrix;
// q is not derivable from the inputs and is left for the caller to fill.
struct CriteriaRow {
  int g = 0;
  int q = 0;
  double loglik = 0.0;
  int m = 0;
  double bic = 0.0;
  double icl = 0.0;
  double awe = 0.0;
  double ent = 0.0;
};

// BIC = loglik - (m/2) log n, ICL = BIC - ENT, AWE = ICL - m(3/2 + log n),
// ENT = -sum_ij z_ij log z_ij with 0 log 0 = 0. Natural logs; larger is
// better for all three. z is g x n with columns on the probability simplex.
CriteriaRow criteria(double loglik, int m, int n, const Eigen::MatrixXd& z);

// Hubert-Arabie adjusted Rand index between two label vectors. 1 iff the
// partitions coincide up to relabeling; 0 in expectation under random labels.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

// Fraction of points whose predicted cluster matches the truth under the best
// injective relabeling of the clusters.
double correct_classification_rate(const std::vector<int>& truth,
                                   const std::vector<int>& pred);

// Contingency counts: rows = true classes, columns = predicted clusters, both
// in ascending label order.
Eigen::MatrixXi classification_table(const std::vector<int>& truth,
                                     const std::vector<int>& pred);

}  // namespace msnfa
