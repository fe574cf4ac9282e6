#include "msnfa/inference.hpp"

#include <Eigen/Cholesky>
#include <atomic>
#include <cmath>
#include <thread>

#include "msnfa/ecm.hpp"
#include "msnfa/errors.hpp"
#include "msnfa/special_math.hpp"

namespace msnfa {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int FlatParams::size(int p, int q, int g, Family family) {
  int per_comp = 2 * p + p * q + (family == Family::Msnfa ? q : 0);
  return (g - 1) + g * per_comp;
}

VectorXd FlatParams::flatten(const MsnfaModel& model) {
  const int p = model.p(), q = model.q(), g = model.g();
  VectorXd theta(size(p, q, g, model.family));
  int at = 0;
  for (int i = 0; i + 1 < g; ++i) theta[at++] = model.weights[i];
  for (const auto& comp : model.components) {
    theta.segment(at, p) = comp.mu;
    at += p;
    theta.segment(at, p * q) = Eigen::Map<const VectorXd>(comp.B.data(), p * q);
    at += p * q;
    theta.segment(at, p) = comp.d;
    at += p;
    if (model.family == Family::Msnfa) {
      theta.segment(at, q) = comp.lambda;
      at += q;
    }
  }
  return theta;
}

MsnfaModel FlatParams::unflatten(const VectorXd& theta, int p, int q, int g, Family family) {
  if (theta.size() != size(p, q, g, family))
    throw BadDimension("unflatten: theta has wrong length");
  int at = 0;
  VectorXd weights(g);
  double head = 0.0;
  for (int i = 0; i + 1 < g; ++i) {
    weights[i] = theta[at++];
    head += weights[i];
  }
  weights[g - 1] = 1.0 - head;
  std::vector<SnfaComponent> comps;
  comps.reserve(g);
  for (int i = 0; i < g; ++i) {
    VectorXd mu = theta.segment(at, p);
    at += p;
    MatrixXd b = Eigen::Map<const MatrixXd>(theta.segment(at, p * q).data(), p, q);
    at += p * q;
    VectorXd d = theta.segment(at, p);
    at += p;
    VectorXd lambda = VectorXd::Zero(q);
    if (family == Family::Msnfa) {
      lambda = theta.segment(at, q);
      at += q;
    }
    comps.emplace_back(std::move(mu), std::move(b), std::move(d), std::move(lambda));
  }
  return MsnfaModel(std::move(weights), std::move(comps), family);
}

std::vector<std::string> FlatParams::names(int p, int q, int g, Family family) {
  std::vector<std::string> out;
  out.reserve(size(p, q, g, family));
  for (int i = 0; i + 1 < g; ++i) out.push_back("pi[" + std::to_string(i) + "]");
  for (int i = 0; i < g; ++i) {
    const std::string c = "comp[" + std::to_string(i) + "].";
    for (int k = 0; k < p; ++k) out.push_back(c + "mu[" + std::to_string(k) + "]");
    for (int col = 0; col < q; ++col)
      for (int row = 0; row < p; ++row)
        out.push_back(c + "B[" + std::to_string(row) + "," + std::to_string(col) + "]");
    for (int k = 0; k < p; ++k) out.push_back(c + "d[" + std::to_string(k) + "]");
    if (family == Family::Msnfa)
      for (int k = 0; k < q; ++k) out.push_back(c + "lambda[" + std::to_string(k) + "]");
  }
  return out;
}

VectorXd score(const MsnfaModel& model, const MatrixXd& data) {
  const int p = model.p(), q = model.q(), g = model.g();
  const int n = static_cast<int>(data.rows());
  const EStepStats stats = e_step(model, data);
  const VectorXd nhat = stats.z.rowwise().sum();

  VectorXd out(FlatParams::size(p, q, g, model.family));
  int at = 0;
  for (int i = 0; i + 1 < g; ++i)
    out[at++] = nhat[i] / model.weights[i] - nhat[g - 1] / model.weights[g - 1];

  for (int i = 0; i < g; ++i) {
    const auto& comp = model.components[i];
    const VectorXd dinv = comp.d.cwiseInverse();
    const MatrixXd dis = delta_inv_sqrt(comp.lambda);

    VectorXd s_y = VectorXd::Zero(p);
    VectorXd s_eta = VectorXd::Zero(q);
    MatrixXd s_yeta = MatrixXd::Zero(p, q);
    MatrixXd s_psi = MatrixXd::Zero(q, q);
    MatrixXd s_eta2 = MatrixXd::Zero(q, q);
    VectorXd s_zeta = VectorXd::Zero(q);
    double s_h = 0.0;
    VectorXd s_ups = VectorXd::Zero(p);
    for (int j = 0; j < n; ++j) {
      const double zij = stats.z(i, j);
      if (zij == 0.0) continue;
      const VectorXd y = data.row(j).transpose();
      const VectorXd& eta = stats.eta[i][j];
      s_y.noalias() += zij * y;
      s_eta.noalias() += zij * eta;
      s_yeta.noalias() += zij * (y - comp.mu) * eta.transpose();
      s_psi.noalias() += zij * stats.Psi[i][j];
      s_eta2.noalias() += zij * eta * eta.transpose();
      s_zeta.noalias() += zij * (stats.kappa[i][j] - kC * eta);
      s_h += zij * (stats.w2(i, j) - 2.0 * kC * stats.w1(i, j) + kC * kC);
      const VectorXd resid = y - comp.mu - comp.B_tilde * eta;
      s_ups.noalias() += zij * resid.cwiseAbs2();
    }
    s_ups += ((comp.B_tilde * (s_psi - s_eta2)).cwiseProduct(comp.B_tilde)).rowwise().sum();

    // d l / d mu.
    out.segment(at, p) = dinv.cwiseProduct(s_y - nhat[i] * comp.mu - comp.B_tilde * s_eta);
    at += p;

    // d l / d B: the gradient with respect to the scaled loading, chained
    // through B_tilde = B Delta^{-1/2}.
    MatrixXd grad_bt = dinv.asDiagonal() * (s_yeta - comp.B_tilde * s_psi);
    MatrixXd grad_b = grad_bt * dis;
    out.segment(at, p * q) = Eigen::Map<const VectorXd>(grad_b.data(), p * q);
    at += p * q;

    // d l / d d.
    out.segment(at, p) =
        -0.5 * (nhat[i] * dinv - dinv.cwiseAbs2().cwiseProduct(s_ups));
    at += p;

    // d l / d lambda.  Holding B fixed, lambda also moves B_tilde; the chain
    // contributes the Delta^{-1/2} factors and the log|Delta| term below.
    if (model.family == Family::Msnfa) {
      const double t = comp.lambda.squaredNorm();
      const double s2 = 1.0 + kOneMinusC2 * t;
      const double s = std::sqrt(s2);
      VectorXd grad = nhat[i] * (kOneMinusC2 / s2) * comp.lambda;
      grad.noalias() -= (kOneMinusC2 / s) * (dis * (s_psi * comp.lambda));
      grad.noalias() -= s_h * comp.lambda;
      grad.noalias() += (kOneMinusC2 / s2) * comp.lambda.dot(s_zeta) * comp.lambda;
      grad.noalias() += s * (dis * s_zeta);
      out.segment(at, q) = grad;
      at += q;
    }
  }
  return out;
}

MatrixXd observed_info(const MsnfaModel& model, const MatrixXd& data, double eta, int jobs) {
  if (!(eta > 0.0)) throw BadDimension("observed_info: eta must be > 0");
  const int p = model.p(), q = model.q(), g = model.g();
  const Family family = model.family;
  const VectorXd theta = FlatParams::flatten(model);
  const int m = static_cast<int>(theta.size());
  MatrixXd grad_cols(m, m);

  auto column = [&](int j) {
    const double h = eta * std::max(1.0, std::abs(theta[j]));
    VectorXd tp = theta, tm = theta;
    tp[j] += h;
    tm[j] -= h;
    const VectorXd sp = score(FlatParams::unflatten(tp, p, q, g, family), data);
    const VectorXd sm = score(FlatParams::unflatten(tm, p, q, g, family), data);
    grad_cols.col(j) = (sp - sm) / (2.0 * h);
  };

  if (jobs <= 1) {
    for (int j = 0; j < m; ++j) column(j);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    const int workers = std::min(jobs, m);
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int j = next.fetch_add(1); j < m; j = next.fetch_add(1)) column(j);
      });
    for (auto& th : pool) th.join();
  }
  return -0.5 * (grad_cols + grad_cols.transpose());
}

std::vector<std::optional<double>> standard_errors(const MatrixXd& info) {
  if (info.rows() != info.cols()) throw BadDimension("standard_errors: info must be square");
  const int m = static_cast<int>(info.rows());
  std::vector<std::optional<double>> out(m);
  Eigen::LLT<MatrixXd> llt(info);
  if (llt.info() == Eigen::Success) {
    const MatrixXd inv = llt.solve(MatrixXd::Identity(m, m));
    for (int k = 0; k < m; ++k)
      if (inv(k, k) > 0.0) out[k] = std::sqrt(inv(k, k));
    return out;
  }
  // Indefinite information: recover what the pivoted LDL' factorization can.
  Eigen::LDLT<MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() == 0.0).any()) return out;
  const MatrixXd inv = ldlt.solve(MatrixXd::Identity(m, m));
  for (int k = 0; k < m; ++k)
    if (inv(k, k) > 0.0) out[k] = std::sqrt(inv(k, k));
  return out;
}

}  // namespace msnfa
