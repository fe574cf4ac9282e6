#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "msnfa/model.hpp"

namespace msnfa {

// Conditional expectations from one E-step.  Layout: z(i,j), w1(i,j), w2(i,j)
// are g x n; eta[i][j] and kappa[i][j] are q-vectors; Psi[i][j] is q x q.
// Per observation j and component i, with W the latent half-normal scale and
// U-tilde the scaled factor vector:
//   z     posterior component probability
//   w1    E(W | y, comp i)          w2  E(W^2 | y, comp i)
//   eta   E(U~ | y, comp i)         kappa E(W U~ | y, comp i)
//   Psi   E(U~ U~' | y, comp i)
struct EStepStats {
  Eigen::MatrixXd z;
  Eigen::MatrixXd w1;
  Eigen::MatrixXd w2;
  std::vector<std::vector<Eigen::VectorXd>> eta;
  std::vector<std::vector<Eigen::VectorXd>> kappa;
  std::vector<std::vector<Eigen::MatrixXd>> Psi;
  double loglik = 0.0;  // observed-data log-likelihood of the evaluated model
};

struct FitConfig {
  double tol = 1e-6;
  int max_iter = 5000;
  int n_starts = 10;
  std::uint64_t seed = 0;
  Family family = Family::Msnfa;
};

struct FitResult {
  MsnfaModel model;
  std::vector<double> loglik_trace;  // one entry per E-step, nondecreasing
  Eigen::MatrixXd z_final;           // g x n, from the E-step at the returned model
  std::vector<int> map_labels;       // argmax_i z_final(i, j)
  bool converged = false;
  int iterations = 0;  // CM sweeps applied
  std::vector<std::string> warnings;
};

EStepStats e_step(const MsnfaModel& model, const Eigen::MatrixXd& data);

// One full CM sweep (weights, means, scaled loadings, noise variances, and,
// for family Msnfa, skewness) driven by `stats`.  Noise variances are floored
// at 1e-6 times each column's sample variance.
MsnfaModel cm_steps(const EStepStats& stats, const Eigen::MatrixXd& data,
                    const MsnfaModel& prev);

// ECM iteration from a given initial model.  Each iteration runs the E-step at
// the current parameters (which also yields the log-likelihood), stops when
// the increase falls below config.tol, and otherwise applies the CM sweep; the
// returned model, trace tail, z_final, and map_labels are therefore all
// evaluated at the same parameter value.  Internally the loadings iterate in
// the scaled parameterization; B is materialized only for the returned model.
FitResult fit(const Eigen::MatrixXd& data, int g, int q, const FitConfig& config,
              const MsnfaModel& init);

// Mixture factor scores: u_j = sum_i w_ij Delta_i^{-1/2} eta_ij with
// w_ij = weight_i by default, or the posterior z_ij when posterior_weights.
Eigen::MatrixXd factor_scores(const MsnfaModel& model, const Eigen::MatrixXd& data,
                              bool posterior_weights = false);

}  // namespace msnfa
