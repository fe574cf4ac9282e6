#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

namespace msnfa {

// Restricted multivariate skew-normal distribution: the law of
//   X = mu + lambda |U0| + U1,  U0 ~ N(0,1),  U1 ~ N_p(0, Sigma),
// with U0, U1 independent.  Density
//   f(x) = 2 phi_p(x; mu, Omega) Phi(xi(x)/sigma),
//   Omega = Sigma + lambda lambda',  xi = lambda' Omega^{-1} (x - mu),
//   sigma^2 = 1 - lambda' Omega^{-1} lambda.
// Parameters are validated at construction and immutable afterwards.
struct RmsnParams {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;   // p x p, symmetric positive definite
  Eigen::VectorXd lambda;  // p

  RmsnParams(Eigen::VectorXd mu_in, Eigen::MatrixXd sigma_in, Eigen::VectorXd lambda_in);

  int dim() const { return static_cast<int>(mu.size()); }
};

double rmsn_log_pdf(const RmsnParams& params, const Eigen::VectorXd& x);

// n draws (rows) by the stochastic representation above.
Eigen::MatrixXd rmsn_sample(const RmsnParams& params, int n, std::uint64_t seed);

// E(X) = mu + c lambda, cov(X) = Sigma + (1 - c^2) lambda lambda'.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> rmsn_mean_cov(const RmsnParams& params);

// log M(t) = log 2 + t'mu + t'Omega t / 2 + log Phi(lambda' t).
double rmsn_log_mgf(const RmsnParams& params, const Eigen::VectorXd& t);

// Closure under full-row-rank affine selection: L X ~ rSN(L mu, L Sigma L', L lambda).
RmsnParams rmsn_affine(const RmsnParams& params, const Eigen::MatrixXd& L);

}  // namespace msnfa
