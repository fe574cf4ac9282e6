#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>

#include "msnfa/errors.hpp"
#include "msnfa/special_math.hpp"

// Shared per-component density machinery.  A component's marginal is
// rSN_p(loc, Sigma, alpha); evaluating it needs chol(Omega) with
// Omega = Sigma + alpha alpha', which is factored once and reused for every
// observation.  Solves go through the factorization; no explicit inverses.
namespace msnfa::detail {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kDispersionEps = 1e-14;

struct MarginalDensity {
  Eigen::VectorXd loc;              // mu - c alpha
  Eigen::LLT<Eigen::MatrixXd> llt;  // chol(Omega)
  double logdet = 0.0;
  Eigen::VectorXd omega_inv_alpha;
  double s2 = 1.0;  // 1 - alpha' Omega^{-1} alpha
  double s = 1.0;
  int p = 0;

  // log psi(x) and the skewness projection a(x) = alpha' Omega^{-1} (x - loc)
  // from a single triangular solve.
  void evaluate(const Eigen::VectorXd& x, double* log_pdf, double* a) const {
    const Eigen::VectorXd r = x - loc;
    const Eigen::VectorXd half = llt.matrixL().solve(r);
    const double av = omega_inv_alpha.dot(r);
    *log_pdf = std::log(2.0) - 0.5 * (p * kLog2Pi + logdet + half.squaredNorm()) +
               norm_log_cdf(av / s);
    *a = av;
  }
};

inline MarginalDensity make_marginal(const Eigen::VectorXd& mu, const Eigen::VectorXd& alpha,
                                     const Eigen::MatrixXd& sigma) {
  MarginalDensity m;
  m.p = static_cast<int>(mu.size());
  Eigen::MatrixXd omega = sigma + alpha * alpha.transpose();
  m.llt.compute(omega);
  if (m.llt.info() != Eigen::Success)
    throw DegenerateDispersion("component dispersion is not positive definite");
  m.logdet = 2.0 * Eigen::MatrixXd(m.llt.matrixL()).diagonal().array().log().sum();
  m.omega_inv_alpha = m.llt.solve(alpha);
  m.s2 = 1.0 - alpha.dot(m.omega_inv_alpha);
  if (m.s2 <= kDispersionEps)
    throw DegenerateDispersion("component conditional variance collapsed");
  m.s = std::sqrt(m.s2);
  m.loc = mu - kC * alpha;
  return m;
}

// Max-shifted log-sum-exp over a fixed-size buffer.
inline double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace msnfa::detail
