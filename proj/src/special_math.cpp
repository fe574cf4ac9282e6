#include "msnfa/special_math.hpp"

#include <cmath>

#include "msnfa/errors.hpp"

namespace msnfa {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log sqrt(2 pi)
constexpr double kInvSqrt2 = 0.70710678118654752440;

// Mills ratio Phi(-z)/phi(z) for z > 0 via the Laplace continued fraction
// 1/(z + 1/(z + 2/(z + 3/(...)))), evaluated bottom-up.  Converges to double
// precision in well under 64 levels for z >= 8.
double mills_ratio(double z) {
  double f = 0.0;
  for (int k = 64; k >= 1; --k) f = k / (z + f);
  return 1.0 / (z + f);
}

}  // namespace

double norm_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double norm_log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double norm_log_cdf(double x) {
  if (x >= -8.0) return std::log(norm_cdf(x));
  return norm_log_pdf(x) + std::log(mills_ratio(-x));
}

double mills_ratio_inv(double x) {
  if (x >= -8.0) return norm_pdf(x) / norm_cdf(x);
  return 1.0 / mills_ratio(-x);
}

std::vector<double> tn_moments(const TruncatedNormalSpec& spec, int k_max) {
  if (!(spec.sigma > 0.0)) throw BadDimension("tn_moments: sigma must be > 0");
  if (k_max < 0) throw BadDimension("tn_moments: k_max must be >= 0");
  std::vector<double> m(static_cast<std::size_t>(k_max) + 1);
  m[0] = 1.0;
  if (k_max >= 1) m[1] = spec.mu + spec.sigma * mills_ratio_inv(spec.mu / spec.sigma);
  const double s2 = spec.sigma * spec.sigma;
  for (int k = 2; k <= k_max; ++k) m[k] = (k - 1) * s2 * m[k - 2] + spec.mu * m[k - 1];
  return m;
}

}  // namespace msnfa
