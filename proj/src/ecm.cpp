#include "msnfa/ecm.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

#include "internal.hpp"
#include "msnfa/errors.hpp"
#include "msnfa/special_math.hpp"

namespace msnfa {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Iteration state in the scaled parameterization: Bt = B Delta^{-1/2}, so the
// component marginal is rSN(mu - c alpha, Bt Bt' + D, alpha) with
// alpha = Bt lambda and no Delta anywhere in the CM updates.
struct TildeComp {
  VectorXd mu;
  MatrixXd Bt;
  VectorXd d;
  VectorXd lambda;
};

struct TildeState {
  VectorXd pi;
  std::vector<TildeComp> comps;
};

TildeState from_model(const MsnfaModel& model) {
  TildeState st;
  st.pi = model.weights;
  st.comps.reserve(model.components.size());
  for (const auto& comp : model.components)
    st.comps.push_back({comp.mu, comp.B_tilde, comp.d, comp.lambda});
  return st;
}

MsnfaModel to_model(const TildeState& st, Family family) {
  std::vector<SnfaComponent> comps;
  comps.reserve(st.comps.size());
  for (const auto& tc : st.comps)
    comps.emplace_back(tc.mu, tc.Bt * delta_sqrt(tc.lambda), tc.d, tc.lambda);
  return MsnfaModel(st.pi, std::move(comps), family);
}

// Per-component per-iteration cache.
struct CompCache {
  detail::MarginalDensity dens;
  VectorXd dinv;
  MatrixXd C;  // (I + Bt' D^{-1} Bt)^{-1}
};

CompCache make_cache(const TildeComp& tc) {
  CompCache cache;
  const auto q = tc.Bt.cols();
  VectorXd alpha = tc.Bt * tc.lambda;
  MatrixXd sigma = tc.Bt * tc.Bt.transpose();
  sigma += MatrixXd(tc.d.asDiagonal());
  cache.dens = detail::make_marginal(tc.mu, alpha, sigma);
  cache.dinv = tc.d.cwiseInverse();
  MatrixXd m = MatrixXd::Identity(q, q);
  m.noalias() += tc.Bt.transpose() * cache.dinv.asDiagonal() * tc.Bt;
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericalBreakdown("e_step: factor precision matrix is not positive definite");
  cache.C = llt.solve(MatrixXd::Identity(q, q));
  return cache;
}

EStepStats e_step_impl(const TildeState& st, const MatrixXd& data) {
  const int g = static_cast<int>(st.comps.size());
  const int n = static_cast<int>(data.rows());
  const int q = static_cast<int>(st.comps.front().Bt.cols());

  std::vector<CompCache> cache;
  cache.reserve(g);
  for (const auto& tc : st.comps) cache.push_back(make_cache(tc));

  EStepStats stats;
  stats.z.resize(g, n);
  stats.w1.resize(g, n);
  stats.w2.resize(g, n);
  stats.eta.assign(g, std::vector<VectorXd>(n));
  stats.kappa.assign(g, std::vector<VectorXd>(n));
  stats.Psi.assign(g, std::vector<MatrixXd>(n));

  VectorXd terms(g);
  MatrixXd work(q, q);
  for (int j = 0; j < n; ++j) {
    const VectorXd y = data.row(j).transpose();
    for (int i = 0; i < g; ++i) {
      const auto& tc = st.comps[i];
      const auto& cc = cache[i];
      double lp, a;
      cc.dens.evaluate(y, &lp, &a);
      terms[i] = std::log(st.pi[i]) + lp;
      const double s = cc.dens.s;
      const double big_a = a / s;
      const double mri = mills_ratio_inv(big_a);
      const double w1 = s * (big_a + mri);
      const double w2 = cc.dens.s2 * (1.0 + big_a * (big_a + mri));
      stats.w1(i, j) = w1;
      stats.w2(i, j) = w2;
      const VectorXd v = tc.Bt.transpose() * cc.dinv.cwiseProduct(y - tc.mu);
      VectorXd eta = cc.C * (v + tc.lambda * (w1 - kC));
      VectorXd kappa = cc.C * (v * w1 + tc.lambda * (w2 - kC * w1));
      work = MatrixXd::Identity(q, q);
      work.noalias() += eta * v.transpose();
      work.noalias() += (kappa - kC * eta) * tc.lambda.transpose();
      stats.Psi[i][j] = work * cc.C;
      stats.eta[i][j] = std::move(eta);
      stats.kappa[i][j] = std::move(kappa);
    }
    const double lse = detail::log_sum_exp(terms);
    if (!std::isfinite(lse))
      throw NumericalBreakdown("e_step: observation density is not finite");
    stats.loglik += lse;
    stats.z.col(j) = (terms.array() - lse).exp();
  }
  return stats;
}

VectorXd variance_floor(const MatrixXd& data) {
  const int n = static_cast<int>(data.rows());
  VectorXd floor_v = VectorXd::Ones(data.cols());
  if (n > 1) {
    const Eigen::RowVectorXd mean = data.colwise().mean();
    VectorXd var =
        ((data.rowwise() - mean).array().square().colwise().sum() / (n - 1)).transpose();
    for (int k = 0; k < var.size(); ++k) floor_v[k] = var[k] > 0.0 ? var[k] : 1.0;
  }
  return 1e-6 * floor_v;
}

TildeState cm_steps_impl(const EStepStats& stats, const MatrixXd& data, const TildeState& prev,
                         const VectorXd& d_floor) {
  const int g = static_cast<int>(prev.comps.size());
  const int n = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());
  const int q = static_cast<int>(prev.comps.front().Bt.cols());

  TildeState next;
  next.pi.resize(g);
  next.comps.resize(g);
  const VectorXd nhat = stats.z.rowwise().sum();

  for (int i = 0; i < g; ++i) {
    if (nhat[i] < q + 1) {
      std::ostringstream msg;
      msg << "component " << i << " starved: effective size " << nhat[i] << " < " << (q + 1);
      throw EmptyComponent(msg.str());
    }
    next.pi[i] = nhat[i] / n;

    const auto& prev_bt = prev.comps[i].Bt;
    VectorXd mu_new = VectorXd::Zero(p);
    for (int j = 0; j < n; ++j) {
      const double zij = stats.z(i, j);
      if (zij == 0.0) continue;
      mu_new.noalias() += zij * (data.row(j).transpose() - prev_bt * stats.eta[i][j]);
    }
    mu_new /= nhat[i];

    MatrixXd r = MatrixXd::Zero(p, q);       // sum z (y - mu) eta'
    MatrixXd s_psi = MatrixXd::Zero(q, q);   // sum z Psi
    MatrixXd s_eta2 = MatrixXd::Zero(q, q);  // sum z eta eta'
    for (int j = 0; j < n; ++j) {
      const double zij = stats.z(i, j);
      if (zij == 0.0) continue;
      const VectorXd yc = data.row(j).transpose() - mu_new;
      r.noalias() += zij * yc * stats.eta[i][j].transpose();
      s_psi.noalias() += zij * stats.Psi[i][j];
      s_eta2.noalias() += zij * stats.eta[i][j] * stats.eta[i][j].transpose();
    }
    Eigen::LLT<MatrixXd> psi_llt(s_psi);
    if (psi_llt.info() != Eigen::Success)
      throw SingularMoment("cm_steps: second-moment matrix is not positive definite");
    MatrixXd bt_new = psi_llt.solve(r.transpose()).transpose();

    // Diagonal of sum z [(y - mu - Bt eta)(..)' + Bt (Psi - eta eta') Bt'].
    VectorXd ss = VectorXd::Zero(p);
    for (int j = 0; j < n; ++j) {
      const double zij = stats.z(i, j);
      if (zij == 0.0) continue;
      const VectorXd resid = data.row(j).transpose() - mu_new - bt_new * stats.eta[i][j];
      ss.noalias() += zij * resid.cwiseAbs2();
    }
    const MatrixXd cov_sum = s_psi - s_eta2;
    ss += ((bt_new * cov_sum).cwiseProduct(bt_new)).rowwise().sum();
    VectorXd d_new = (ss / nhat[i]).cwiseMax(d_floor);

    // Skewness is updated afterwards (or kept, for family Mfa).
    VectorXd lambda_new = prev.comps[i].lambda;
    next.comps[i] = {std::move(mu_new), std::move(bt_new), std::move(d_new),
                     std::move(lambda_new)};
  }
  return next;
}

// Skewness update, separated so family Mfa can skip it.
void cm_step_lambda(const EStepStats& stats, TildeState& state) {
  const int g = static_cast<int>(state.comps.size());
  const int n = static_cast<int>(stats.z.cols());
  const int q = static_cast<int>(state.comps.front().Bt.cols());
  for (int i = 0; i < g; ++i) {
    VectorXd s_zeta = VectorXd::Zero(q);
    double s_h = 0.0;
    for (int j = 0; j < n; ++j) {
      const double zij = stats.z(i, j);
      if (zij == 0.0) continue;
      s_zeta.noalias() += zij * (stats.kappa[i][j] - kC * stats.eta[i][j]);
      s_h += zij * (stats.w2(i, j) - 2.0 * kC * stats.w1(i, j) + kC * kC);
    }
    if (!(s_h > 0.0))
      throw NumericalBreakdown("cm_steps: nonpositive scale-moment sum in skewness update");
    state.comps[i].lambda = s_zeta / s_h;
  }
}

TildeState cm_sweep(const EStepStats& stats, const MatrixXd& data, const TildeState& prev,
                    const VectorXd& d_floor, Family family) {
  TildeState next = cm_steps_impl(stats, data, prev, d_floor);
  if (family == Family::Msnfa) cm_step_lambda(stats, next);
  return next;
}

void check_dims(const MsnfaModel& model, const MatrixXd& data) {
  if (data.cols() != model.p()) throw BadDimension("data width does not match model p");
  if (data.rows() == 0) throw BadDimension("data has no rows");
}

}  // namespace

EStepStats e_step(const MsnfaModel& model, const MatrixXd& data) {
  check_dims(model, data);
  return e_step_impl(from_model(model), data);
}

MsnfaModel cm_steps(const EStepStats& stats, const MatrixXd& data, const MsnfaModel& prev) {
  check_dims(prev, data);
  if (stats.z.cols() != data.rows() || stats.z.rows() != prev.g())
    throw BadDimension("cm_steps: stats shape does not match data/model");
  TildeState next = cm_sweep(stats, data, from_model(prev), variance_floor(data), prev.family);
  return to_model(next, prev.family);
}

FitResult fit(const MatrixXd& data, int g, int q, const FitConfig& config,
              const MsnfaModel& init) {
  check_dims(init, data);
  if (init.g() != g || init.q() != q) throw BadDimension("fit: init model does not match g, q");
  if (init.family != config.family) throw BadDimension("fit: init family does not match config");
  if (!(config.tol > 0.0) || config.max_iter < 1)
    throw BadDimension("fit: tol must be > 0 and max_iter >= 1");

  std::vector<std::string> warnings;
  const int p = static_cast<int>(data.cols());
  if ((p - q) * (p - q) < p + q) {
    std::ostringstream msg;
    msg << "q = " << q << " factors for p = " << p
        << " variables exceeds the identifiability bound (p - q)^2 >= p + q";
    warnings.push_back(msg.str());
  }

  const VectorXd d_floor = variance_floor(data);
  TildeState state = from_model(init);
  std::vector<double> trace;
  trace.reserve(64);
  EStepStats stats;
  bool converged = false;
  int sweeps = 0;
  for (;;) {
    stats = e_step_impl(state, data);
    if (!std::isfinite(stats.loglik))
      throw NumericalBreakdown("fit: log-likelihood is not finite");
    trace.push_back(stats.loglik);
    if (sweeps > 0 && trace[trace.size() - 1] - trace[trace.size() - 2] < config.tol) {
      converged = true;
      break;
    }
    if (sweeps == config.max_iter) break;
    state = cm_sweep(stats, data, state, d_floor, config.family);
    ++sweeps;
  }

  const int n = static_cast<int>(data.rows());
  std::vector<int> labels(n);
  for (int j = 0; j < n; ++j) {
    int best = 0;
    for (int i = 1; i < g; ++i)
      if (stats.z(i, j) > stats.z(best, j)) best = i;
    labels[j] = best;
  }
  return FitResult{to_model(state, config.family), std::move(trace), std::move(stats.z),
                   std::move(labels),              converged,        sweeps,
                   std::move(warnings)};
}

MatrixXd factor_scores(const MsnfaModel& model, const MatrixXd& data, bool posterior_weights) {
  check_dims(model, data);
  const EStepStats stats = e_step(model, data);
  const int g = model.g();
  const int n = static_cast<int>(data.rows());
  const int q = model.q();
  std::vector<MatrixXd> dis;
  dis.reserve(g);
  for (const auto& comp : model.components) dis.push_back(delta_inv_sqrt(comp.lambda));
  MatrixXd scores = MatrixXd::Zero(n, q);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < g; ++i) {
      const double w = posterior_weights ? stats.z(i, j) : model.weights[i];
      scores.row(j).noalias() += w * (dis[i] * stats.eta[i][j]).transpose();
    }
  return scores;
}

}  // namespace msnfa
