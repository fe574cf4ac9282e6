#pragma once

#include <vector>

namespace msnfa {

// E|N(0,1)| = sqrt(2/pi); appears throughout as the half-normal mean.
inline constexpr double kC = 0.79788456080286535588;
inline constexpr double kOneMinusC2 = 1.0 - kC * kC;  // 1 - 2/pi

double norm_pdf(double x);
double norm_log_pdf(double x);

// Phi(x), absolute error at machine level over the whole real line.
double norm_cdf(double x);

// log Phi(x), relative error <= 1e-12 down to x = -38.  Direct evaluation for
// x >= -8; below that, log phi(x) + log of the Mills ratio evaluated by the
// Laplace continued fraction.
double norm_log_cdf(double x);

// phi(x)/Phi(x).  Direct ratio for x >= -8, continued fraction below; always
// finite, positive, and >= max(0, -x).
double mills_ratio_inv(double x);

// N(mu, sigma^2) truncated to (0, inf).
struct TruncatedNormalSpec {
  double mu;
  double sigma;  // > 0
};

// Moments E(W^k), k = 0..k_max, of the truncated normal, by the two-term
// recursion E(W^k) = (k-1) sigma^2 E(W^{k-2}) + mu E(W^{k-1}) seeded with
// E(W^0) = 1 and E(W) = mu + sigma * mills_ratio_inv(mu/sigma).
std::vector<double> tn_moments(const TruncatedNormalSpec& spec, int k_max);

}  // namespace msnfa
