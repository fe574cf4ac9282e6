#include "msnfa/rmsn.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "msnfa/errors.hpp"
#include "msnfa/rng.hpp"
#include "msnfa/special_math.hpp"

namespace msnfa {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kDispersionFloor = 1e-14;

// Cholesky of Omega = Sigma + lambda lambda'; shared by pdf and mgf.
Eigen::LLT<MatrixXd> omega_llt(const RmsnParams& p) {
  MatrixXd omega = p.sigma + p.lambda * p.lambda.transpose();
  Eigen::LLT<MatrixXd> llt(omega);
  if (llt.info() != Eigen::Success)
    throw DegenerateDispersion("rmsn: Sigma + lambda lambda' is not positive definite");
  return llt;
}

double log_det_from_llt(const Eigen::LLT<MatrixXd>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

RmsnParams::RmsnParams(VectorXd mu_in, MatrixXd sigma_in, VectorXd lambda_in)
    : mu(std::move(mu_in)), sigma(std::move(sigma_in)), lambda(std::move(lambda_in)) {
  const auto p = mu.size();
  if (p == 0) throw BadDimension("rmsn: dimension must be positive");
  if (sigma.rows() != p || sigma.cols() != p)
    throw BadDimension("rmsn: Sigma must be p x p");
  if (lambda.size() != p) throw BadDimension("rmsn: lambda must have length p");
  if (!sigma.isApprox(sigma.transpose(), 1e-12))
    throw BadDimension("rmsn: Sigma must be symmetric");
  Eigen::LLT<MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw DegenerateDispersion("rmsn: Sigma is not positive definite");
}

double rmsn_log_pdf(const RmsnParams& params, const VectorXd& x) {
  if (x.size() != params.mu.size()) throw BadDimension("rmsn_log_pdf: x has wrong length");
  const auto llt = omega_llt(params);
  const VectorXd r = x - params.mu;
  const VectorXd omega_inv_r = llt.solve(r);
  const VectorXd omega_inv_lambda = llt.solve(params.lambda);
  const double s2 = 1.0 - params.lambda.dot(omega_inv_lambda);
  if (s2 <= kDispersionFloor)
    throw DegenerateDispersion("rmsn_log_pdf: conditional variance collapsed");
  const double log_phi =
      -0.5 * (params.dim() * kLog2Pi + log_det_from_llt(llt) + r.dot(omega_inv_r));
  const double xi = params.lambda.dot(omega_inv_r);
  return std::log(2.0) + log_phi + norm_log_cdf(xi / std::sqrt(s2));
}

MatrixXd rmsn_sample(const RmsnParams& params, int n, std::uint64_t seed) {
  if (n < 0) throw BadDimension("rmsn_sample: n must be >= 0");
  const int p = params.dim();
  Eigen::LLT<MatrixXd> llt(params.sigma);
  if (llt.info() != Eigen::Success)
    throw DegenerateDispersion("rmsn_sample: Sigma is not positive definite");
  const MatrixXd l = llt.matrixL();
  Rng rng(seed);
  MatrixXd out(n, p);
  VectorXd z(p);
  for (int j = 0; j < n; ++j) {
    const double u0 = std::abs(rng.normal());
    for (int k = 0; k < p; ++k) z[k] = rng.normal();
    out.row(j) = (params.mu + params.lambda * u0 + l * z).transpose();
  }
  return out;
}

std::pair<VectorXd, MatrixXd> rmsn_mean_cov(const RmsnParams& params) {
  VectorXd mean = params.mu + kC * params.lambda;
  MatrixXd cov = params.sigma + kOneMinusC2 * params.lambda * params.lambda.transpose();
  return {std::move(mean), std::move(cov)};
}

double rmsn_log_mgf(const RmsnParams& params, const VectorXd& t) {
  if (t.size() != params.mu.size()) throw BadDimension("rmsn_log_mgf: t has wrong length");
  const MatrixXd omega = params.sigma + params.lambda * params.lambda.transpose();
  return std::log(2.0) + t.dot(params.mu) + 0.5 * t.dot(omega * t) +
         norm_log_cdf(params.lambda.dot(t));
}

RmsnParams rmsn_affine(const RmsnParams& params, const MatrixXd& l) {
  if (l.cols() != params.mu.size()) throw BadDimension("rmsn_affine: L has wrong column count");
  if (l.rows() == 0 || l.rows() > l.cols())
    throw BadDimension("rmsn_affine: L must have full row rank with rows <= cols");
  return RmsnParams(l * params.mu, l * params.sigma * l.transpose(), l * params.lambda);
}

}  // namespace msnfa
