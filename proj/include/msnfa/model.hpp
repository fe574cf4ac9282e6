#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "msnfa/rmsn.hpp"

namespace msnfa {

enum class Family { Msnfa, Mfa };

// Symmetric square root of Delta = I_q + (1 - c^2) lambda lambda', in closed
// form: I + ((sqrt(1 + (1-c^2) t) - 1)/t) lambda lambda' with t = lambda'lambda.
Eigen::MatrixXd delta_sqrt(const Eigen::VectorXd& lambda);
Eigen::MatrixXd delta_inv_sqrt(const Eigen::VectorXd& lambda);

// One skew-normal factor-analysis component:
//   Y = mu + B U + e,  U ~ rSN_q(-c Delta^{-1/2} lambda, Delta^{-1}, Delta^{-1/2} lambda),
//   e ~ N_p(0, D),  D = diag(d),
// so that E(U) = 0 and cov(U) = I_q.  The scaled loading B_tilde = B Delta^{-1/2}
// gives the marginal Y ~ rSN_p(mu - c alpha, Sigma, alpha) with
// alpha = B_tilde lambda and Sigma = B_tilde B_tilde' + D; cov(Y) = B B' + D.
// Derived matrices are computed once at construction; instances are immutable.
struct SnfaComponent {
  Eigen::VectorXd mu;      // p
  Eigen::MatrixXd B;       // p x q
  Eigen::VectorXd d;       // p, all > 0
  Eigen::VectorXd lambda;  // q

  // Derived.
  Eigen::MatrixXd B_tilde;  // B Delta^{-1/2}
  Eigen::VectorXd alpha;    // B_tilde lambda
  Eigen::MatrixXd Sigma;    // B_tilde B_tilde' + diag(d)

  SnfaComponent(Eigen::VectorXd mu_in, Eigen::MatrixXd B_in, Eigen::VectorXd d_in,
                Eigen::VectorXd lambda_in);

  int p() const { return static_cast<int>(mu.size()); }
  int q() const { return static_cast<int>(lambda.size()); }
};

// Finite mixture of SNFA components with a family tag; family Mfa requires
// every component's lambda to be exactly zero.
struct MsnfaModel {
  Eigen::VectorXd weights;  // g, strictly positive, sums to 1 within 1e-12
  std::vector<SnfaComponent> components;
  Family family = Family::Msnfa;

  MsnfaModel(Eigen::VectorXd weights_in, std::vector<SnfaComponent> components_in,
             Family family_in);

  int g() const { return static_cast<int>(components.size()); }
  int p() const { return components.front().p(); }
  int q() const { return components.front().q(); }
};

// Marginal law of one component: rSN_p(mu - c alpha, Sigma, alpha).
RmsnParams component_marginal(const SnfaComponent& comp);

// log sum_i w_i psi_i(x), accumulated with a max-shifted log-sum-exp.
double mixture_log_pdf(const MsnfaModel& model, const Eigen::VectorXd& x);

// Sum of mixture_log_pdf over the rows of data.
double log_likelihood(const MsnfaModel& model, const Eigen::MatrixXd& data);

// Free-parameter count with the q(q-1)/2 rotational reduction on each loading
// matrix: g [p(q+2) + q - q(q-1)/2] + (g-1), minus g q for family Mfa.
long param_count(int p, int q, int g, Family family);

// n rows drawn from the mixture plus their component labels.  Labels come from
// the base stream of `seed`; component i draws from substream i+1, so each
// component's variates are reproducible regardless of how labels interleave.
std::pair<Eigen::MatrixXd, std::vector<int>> mixture_sample(const MsnfaModel& model, int n,
                                                            std::uint64_t seed);

}  // namespace msnfa
