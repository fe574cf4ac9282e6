#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "msnfa/model.hpp"

namespace msnfa {

// Bijection between a model and the unconstrained parameter vector used for
// differentiation: (pi_1 .. pi_{g-1}), then per component mu, vec(B)
// (column-major, all p*q entries), d, and, for family Msnfa, lambda.  pi_g is
// implied by the unit sum.  No triangular reduction is applied to B.
struct FlatParams {
  static int size(int p, int q, int g, Family family);
  static Eigen::VectorXd flatten(const MsnfaModel& model);
  static MsnfaModel unflatten(const Eigen::VectorXd& theta, int p, int q, int g, Family family);
  static std::vector<std::string> names(int p, int q, int g, Family family);
};

// Gradient of the observed-data log-likelihood with respect to the flattened
// parameters, assembled from one E-step's conditional expectations.
Eigen::VectorXd score(const MsnfaModel& model, const Eigen::MatrixXd& data);

// Observed information: central differences of the analytic score, column j
// using step max(eta, eta |theta_j|), symmetrized as -(G + G')/2.
Eigen::MatrixXd observed_info(const MsnfaModel& model, const Eigen::MatrixXd& data,
                              double eta = 1e-4, int jobs = 1);

// Square roots of the diagonal of info^{-1} via Cholesky solves; entries that
// would need a nonpositive pivot or variance come back empty rather than NaN.
std::vector<std::optional<double>> standard_errors(const Eigen::MatrixXd& info);

}  // namespace msnfa
