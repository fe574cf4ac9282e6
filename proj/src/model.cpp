#include "msnfa/model.hpp"

#include <cmath>

#include "internal.hpp"
#include "msnfa/errors.hpp"
#include "msnfa/rng.hpp"
#include "msnfa/special_math.hpp"

namespace msnfa {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// I + coef * lambda lambda' where coef solves the rank-one square-root
// equation; shared by both Delta roots.
MatrixXd rank_one_root(const VectorXd& lambda, bool inverse) {
  const auto q = lambda.size();
  if (q == 0) throw BadDimension("delta_sqrt: lambda must be nonempty");
  MatrixXd out = MatrixXd::Identity(q, q);
  const double t = lambda.squaredNorm();
  if (t == 0.0) return out;
  const double s = std::sqrt(1.0 + kOneMinusC2 * t);
  const double coef = ((inverse ? 1.0 / s : s) - 1.0) / t;
  out.noalias() += coef * lambda * lambda.transpose();
  return out;
}

}  // namespace

MatrixXd delta_sqrt(const VectorXd& lambda) { return rank_one_root(lambda, false); }

MatrixXd delta_inv_sqrt(const VectorXd& lambda) { return rank_one_root(lambda, true); }

SnfaComponent::SnfaComponent(VectorXd mu_in, MatrixXd B_in, VectorXd d_in, VectorXd lambda_in)
    : mu(std::move(mu_in)), B(std::move(B_in)), d(std::move(d_in)), lambda(std::move(lambda_in)) {
  const auto p_ = mu.size();
  const auto q_ = lambda.size();
  if (p_ == 0) throw BadDimension("component: p must be positive");
  if (q_ == 0 || q_ > p_) throw BadDimension("component: q must satisfy 1 <= q <= p");
  if (B.rows() != p_ || B.cols() != q_) throw BadDimension("component: B must be p x q");
  if (d.size() != p_) throw BadDimension("component: d must have length p");
  if ((d.array() <= 0.0).any())
    throw InvariantViolation("component: noise variances must be strictly positive");
  if (!mu.allFinite() || !B.allFinite() || !d.allFinite() || !lambda.allFinite())
    throw InvariantViolation("component: parameters must be finite");
  B_tilde.noalias() = B * delta_inv_sqrt(lambda);
  alpha.noalias() = B_tilde * lambda;
  Sigma.noalias() = B_tilde * B_tilde.transpose();
  Sigma += MatrixXd(d.asDiagonal());
}

MsnfaModel::MsnfaModel(VectorXd weights_in, std::vector<SnfaComponent> components_in,
                       Family family_in)
    : weights(std::move(weights_in)), components(std::move(components_in)), family(family_in) {
  if (components.empty()) throw BadDimension("model: needs at least one component");
  if (weights.size() != static_cast<Eigen::Index>(components.size()))
    throw BadDimension("model: weights and components disagree on g");
  if ((weights.array() <= 0.0).any())
    throw InvariantViolation("model: weights must be strictly positive");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw InvariantViolation("model: weights must sum to 1");
  const int p_ = components.front().p();
  const int q_ = components.front().q();
  for (const auto& comp : components) {
    if (comp.p() != p_ || comp.q() != q_)
      throw BadDimension("model: components must share p and q");
    if (family == Family::Mfa && (comp.lambda.array() != 0.0).any())
      throw InvariantViolation("model: family mfa requires lambda == 0 in every component");
  }
}

RmsnParams component_marginal(const SnfaComponent& comp) {
  return RmsnParams(comp.mu - kC * comp.alpha, comp.Sigma, comp.alpha);
}

double mixture_log_pdf(const MsnfaModel& model, const VectorXd& x) {
  if (x.size() != model.p()) throw BadDimension("mixture_log_pdf: x has wrong length");
  const int g = model.g();
  VectorXd terms(g);
  for (int i = 0; i < g; ++i) {
    const auto& comp = model.components[i];
    auto dens = detail::make_marginal(comp.mu, comp.alpha, comp.Sigma);
    double lp, a;
    dens.evaluate(x, &lp, &a);
    terms[i] = std::log(model.weights[i]) + lp;
  }
  return detail::log_sum_exp(terms);
}

double log_likelihood(const MsnfaModel& model, const MatrixXd& data) {
  if (data.cols() != model.p()) throw BadDimension("log_likelihood: data has wrong width");
  const int g = model.g();
  const int n = static_cast<int>(data.rows());
  std::vector<detail::MarginalDensity> dens;
  dens.reserve(g);
  for (const auto& comp : model.components)
    dens.push_back(detail::make_marginal(comp.mu, comp.alpha, comp.Sigma));
  double total = 0.0;
  VectorXd terms(g);
  for (int j = 0; j < n; ++j) {
    const VectorXd x = data.row(j).transpose();
    for (int i = 0; i < g; ++i) {
      double lp, a;
      dens[i].evaluate(x, &lp, &a);
      terms[i] = std::log(model.weights[i]) + lp;
    }
    total += detail::log_sum_exp(terms);
  }
  return total;
}

long param_count(int p, int q, int g, Family family) {
  if (p <= 0 || q <= 0 || q > p || g <= 0) throw BadDimension("param_count: invalid p, q, g");
  const long per_comp = static_cast<long>(p) * (q + 2) + q - static_cast<long>(q) * (q - 1) / 2;
  long m = static_cast<long>(g) * per_comp + (g - 1);
  if (family == Family::Mfa) m -= static_cast<long>(g) * q;
  return m;
}

std::pair<MatrixXd, std::vector<int>> mixture_sample(const MsnfaModel& model, int n,
                                                     std::uint64_t seed) {
  if (n < 0) throw BadDimension("mixture_sample: n must be >= 0");
  const int g = model.g();
  const int p = model.p();
  Rng label_rng(seed);
  std::vector<Rng> comp_rng;
  std::vector<MatrixXd> chols;
  comp_rng.reserve(g);
  chols.reserve(g);
  for (int i = 0; i < g; ++i) {
    comp_rng.push_back(Rng::stream(seed, static_cast<std::uint64_t>(i) + 1));
    Eigen::LLT<MatrixXd> llt(model.components[i].Sigma);
    if (llt.info() != Eigen::Success)
      throw DegenerateDispersion("mixture_sample: component Sigma is not positive definite");
    chols.emplace_back(llt.matrixL());
  }
  MatrixXd out(n, p);
  std::vector<int> labels(n);
  VectorXd z(p);
  for (int j = 0; j < n; ++j) {
    const double u = label_rng.uniform();
    int i = 0;
    double acc = model.weights[0];
    while (i + 1 < g && u >= acc) acc += model.weights[++i];
    labels[j] = i;
    const auto& comp = model.components[i];
    Rng& rng = comp_rng[i];
    const double u0 = std::abs(rng.normal());
    for (int k = 0; k < p; ++k) z[k] = rng.normal();
    out.row(j) =
        (comp.mu - kC * comp.alpha + comp.alpha * u0 + chols[i] * z).transpose();
  }
  return {std::move(out), std::move(labels)};
}

}  // namespace msnfa
