#include "msnfa/init.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "msnfa/errors.hpp"
#include "msnfa/rng.hpp"
#include "msnfa/special_math.hpp"

namespace msnfa {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr int kLloydMaxIter = 100;
constexpr int kFaEmMaxIter = 100;

// Max skewness of a unit-variance one-factor law: k_skew * lam^3 /
// (1 + (1-c^2) lam^2)^{3/2} -> k_skew / (1-c^2)^{3/2} as lam -> inf.
const double kSkewCoef = kC * (2.0 * kC * kC - 1.0);
const double kSkewMax = kSkewCoef / std::pow(kOneMinusC2, 1.5);

std::vector<int> assign_to_centers(const MatrixXd& data, const MatrixXd& centers) {
  const int n = static_cast<int>(data.rows());
  const int g = static_cast<int>(centers.rows());
  std::vector<int> labels(n);
  for (int j = 0; j < n; ++j) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int i = 0; i < g; ++i) {
      const double dist = (data.row(j) - centers.row(i)).squaredNorm();
      if (dist < best) {
        best = dist;
        arg = i;
      }
    }
    labels[j] = arg;
  }
  return labels;
}

MatrixXd seed_centers(const MatrixXd& data, int g, Rng& rng) {
  const int n = static_cast<int>(data.rows());
  MatrixXd centers(g, data.cols());
  centers.row(0) = data.row(rng.index(n));
  VectorXd d2 = (data.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int i = 1; i < g; ++i) {
    const double total = d2.sum();
    int pick;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (int j = 0; j < n; ++j) {
        acc += d2[j];
        if (u < acc) {
          pick = j;
          break;
        }
      }
    } else {
      pick = rng.index(n);
    }
    centers.row(i) = data.row(pick);
    d2 = d2.cwiseMin((data.rowwise() - centers.row(i)).rowwise().squaredNorm());
  }
  return centers;
}

double lloyd(const MatrixXd& data, MatrixXd& centers, std::vector<int>& labels) {
  const int n = static_cast<int>(data.rows());
  const int g = static_cast<int>(centers.rows());
  labels = assign_to_centers(data, centers);
  for (int it = 0; it < kLloydMaxIter; ++it) {
    // Reseed any emptied cluster to the point farthest from its own center.
    for (;;) {
      std::vector<int> count(g, 0);
      for (int lab : labels) ++count[lab];
      int empty = -1;
      for (int i = 0; i < g; ++i)
        if (count[i] == 0) empty = i;
      if (empty < 0) break;
      double far = -1.0;
      int arg = 0;
      for (int j = 0; j < n; ++j) {
        const double dist = (data.row(j) - centers.row(labels[j])).squaredNorm();
        if (dist > far) {
          far = dist;
          arg = j;
        }
      }
      centers.row(empty) = data.row(arg);
      labels[arg] = empty;
    }
    centers.setZero();
    std::vector<int> count(g, 0);
    for (int j = 0; j < n; ++j) {
      centers.row(labels[j]) += data.row(j);
      ++count[labels[j]];
    }
    for (int i = 0; i < g; ++i) centers.row(i) /= count[i];
    std::vector<int> next = assign_to_centers(data, centers);
    if (next == labels) break;
    labels = std::move(next);
  }
  double wcss = 0.0;
  for (int j = 0; j < n; ++j) wcss += (data.row(j) - centers.row(labels[j])).squaredNorm();
  return wcss;
}

// One cluster's factor-model start.
struct ClusterInit {
  VectorXd mu;
  MatrixXd B;
  VectorXd d;
};

void fix_column_signs(MatrixXd& b) {
  for (int col = 0; col < b.cols(); ++col) {
    const double scale = b.col(col).cwiseAbs().maxCoeff();
    for (int row = 0; row < b.rows(); ++row) {
      if (std::abs(b(row, col)) > 1e-12 * std::max(scale, 1.0)) {
        if (b(row, col) < 0.0) b.col(col) = -b.col(col);
        break;
      }
    }
  }
}

ClusterInit pca_start(const MatrixXd& cluster, int q, const VectorXd& d_floor) {
  const int m = static_cast<int>(cluster.rows());
  const int p = static_cast<int>(cluster.cols());
  ClusterInit out;
  out.mu = cluster.colwise().mean().transpose();
  const MatrixXd centered = cluster.rowwise() - out.mu.transpose();
  const MatrixXd s = centered.transpose() * centered / m;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(s);
  if (eig.info() != Eigen::Success)
    throw NumericalBreakdown("init: eigendecomposition of cluster covariance failed");
  // Eigenvalues ascending; take the top q and the mean of the rest as noise.
  const VectorXd ev = eig.eigenvalues();
  double noise = 0.0;
  for (int k = 0; k < p - q; ++k) noise += std::max(ev[k], 0.0);
  noise = (p > q) ? noise / (p - q) : 0.0;
  out.B.resize(p, q);
  for (int k = 0; k < q; ++k) {
    // A column at or below the noise floor keeps a small positive scale: a
    // loading column starting at exactly zero can never be activated by the
    // CM sweep.
    const double gap = std::max(ev[p - 1 - k] - noise, 0.01 * std::max(noise, 1e-12));
    out.B.col(k) = eig.eigenvectors().col(p - 1 - k) * std::sqrt(gap);
  }
  fix_column_signs(out.B);
  out.d = (s.diagonal() - (out.B * out.B.transpose()).diagonal()).cwiseMax(d_floor);
  return out;
}

// Plain factor-analysis EM refinement on one cluster, from the spectral start.
void fa_em_refine(const MatrixXd& cluster, ClusterInit& ci, const VectorXd& d_floor) {
  const int m = static_cast<int>(cluster.rows());
  const int q = static_cast<int>(ci.B.cols());
  const MatrixXd centered = cluster.rowwise() - ci.mu.transpose();
  const MatrixXd s = centered.transpose() * centered / m;
  for (int it = 0; it < kFaEmMaxIter; ++it) {
    const VectorXd dinv = ci.d.cwiseInverse();
    MatrixXd prec = MatrixXd::Identity(q, q);
    prec.noalias() += ci.B.transpose() * dinv.asDiagonal() * ci.B;
    Eigen::LLT<MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success)
      throw NumericalBreakdown("init: factor precision matrix not positive definite");
    const MatrixXd c = llt.solve(MatrixXd::Identity(q, q));
    const MatrixXd proj = dinv.asDiagonal() * ci.B * c;  // p x q
    const MatrixXd a = s * proj;                         // (1/m) sum (x-mu) Eu'
    MatrixXd second = c + proj.transpose() * a;          // (1/m) sum E(uu')
    Eigen::LLT<MatrixXd> sec_llt(second);
    if (sec_llt.info() != Eigen::Success)
      throw NumericalBreakdown("init: factor second-moment matrix not positive definite");
    const MatrixXd b_new = sec_llt.solve(a.transpose()).transpose();
    const VectorXd d_new =
        (s.diagonal() - (b_new.cwiseProduct(a)).rowwise().sum()).cwiseMax(d_floor);
    const double drift = (b_new - ci.B).norm() / std::max(1.0, ci.B.norm());
    ci.B = b_new;
    ci.d = d_new;
    if (drift < 1e-8) break;
  }
  fix_column_signs(ci.B);
}

// Invert gamma = kSkewCoef lam^3 / (1 + (1-c^2) lam^2)^{3/2} for lam.
double lambda_from_skewness(double gamma) {
  const double capped = std::clamp(gamma, -0.995 * kSkewMax, 0.995 * kSkewMax);
  if (capped == 0.0) return 0.0;
  const double y = std::pow(std::abs(capped) / kSkewCoef, 2.0 / 3.0);
  return std::copysign(std::sqrt(y / (1.0 - kOneMinusC2 * y)), capped);
}

}  // namespace

std::vector<int> kmeans(const MatrixXd& data, int g, int restarts, std::uint64_t seed) {
  const int n = static_cast<int>(data.rows());
  if (g < 1) throw BadDimension("kmeans: g must be >= 1");
  if (n < g) throw BadDimension("kmeans: fewer points than clusters");
  if (restarts < 1) throw BadDimension("kmeans: restarts must be >= 1");
  std::vector<int> best_labels;
  double best_wcss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(r));
    MatrixXd centers = seed_centers(data, g, rng);
    std::vector<int> labels;
    const double wcss = lloyd(data, centers, labels);
    if (wcss < best_wcss) {
      best_wcss = wcss;
      best_labels = std::move(labels);
    }
  }
  return best_labels;
}

MsnfaModel init_model(const MatrixXd& data, int g, int q, const InitStrategy& strategy,
                      Family family) {
  const int n = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());
  if (q < 1 || q > p) throw BadDimension("init_model: q must satisfy 1 <= q <= p");
  const std::vector<int> labels = kmeans(data, g, strategy.kmeans_restarts, strategy.seed);

  // Per-variable floor: 1e-6 of the sample variance (1 for degenerate columns).
  VectorXd d_floor = VectorXd::Ones(p);
  if (n > 1) {
    const Eigen::RowVectorXd mean = data.colwise().mean();
    const VectorXd var =
        ((data.rowwise() - mean).array().square().colwise().sum() / (n - 1)).transpose();
    for (int k = 0; k < p; ++k) d_floor[k] = var[k] > 0.0 ? var[k] : 1.0;
  }
  d_floor *= 1e-6;

  VectorXd weights(g);
  std::vector<SnfaComponent> comps;
  comps.reserve(g);
  for (int i = 0; i < g; ++i) {
    std::vector<int> rows;
    for (int j = 0; j < n; ++j)
      if (labels[j] == i) rows.push_back(j);
    const int m = static_cast<int>(rows.size());
    if (m < q + 2) {
      std::ostringstream msg;
      msg << "cluster " << i << " has " << m << " members; need at least " << (q + 2);
      throw TinyCluster(msg.str());
    }
    MatrixXd cluster(m, p);
    for (int j = 0; j < m; ++j) cluster.row(j) = data.row(rows[j]);

    ClusterInit ci = pca_start(cluster, q, d_floor);
    if (strategy.fa_method == FaMethod::MlEm) fa_em_refine(cluster, ci, d_floor);

    VectorXd lambda = VectorXd::Zero(q);
    if (family == Family::Msnfa && strategy.lambda_method == LambdaMethod::Moment) {
      // Provisional regression factor scores feed a per-factor skewness fit.
      const VectorXd dinv = ci.d.cwiseInverse();
      MatrixXd prec = MatrixXd::Identity(q, q);
      prec.noalias() += ci.B.transpose() * dinv.asDiagonal() * ci.B;
      Eigen::LLT<MatrixXd> llt(prec);
      if (llt.info() != Eigen::Success)
        throw NumericalBreakdown("init: factor precision matrix not positive definite");
      const MatrixXd proj = llt.solve(ci.B.transpose() * dinv.asDiagonal());  // q x p
      const MatrixXd scores =
          (cluster.rowwise() - ci.mu.transpose()) * proj.transpose();  // m x q
      for (int k = 0; k < q; ++k) {
        const double mean_k = scores.col(k).mean();
        const VectorXd cent = scores.col(k).array() - mean_k;
        const double m2 = cent.squaredNorm() / m;
        const double m3 = cent.array().cube().sum() / m;
        if (m2 > 0.0) lambda[k] = lambda_from_skewness(m3 / std::pow(m2, 1.5));
      }
    }
    weights[i] = static_cast<double>(m) / n;
    comps.emplace_back(ci.mu, ci.B, ci.d, lambda);
  }
  return MsnfaModel(std::move(weights), std::move(comps), family);
}

FitResult multi_start_fit(const MatrixXd& data, int g, int q, const FitConfig& config,
                          const InitStrategy& strategy, int jobs) {
  if (config.n_starts < 1) throw BadDimension("multi_start_fit: n_starts must be >= 1");
  const int n_starts = config.n_starts;
  std::vector<std::optional<FitResult>> results(n_starts);
  std::vector<std::string> failures(n_starts);

  auto run_start = [&](int idx) {
    InitStrategy local = strategy;
    local.seed = config.seed ^ ((static_cast<std::uint64_t>(idx) + 1) * UINT64_C(0x9E3779B97F4A7C15));
    try {
      const MsnfaModel init = init_model(data, g, q, local, config.family);
      results[idx] = fit(data, g, q, config, init);
    } catch (const Error& err) {
      std::ostringstream msg;
      msg << "start " << idx << " failed: " << err.what();
      failures[idx] = msg.str();
    }
  };

  if (jobs <= 1) {
    for (int idx = 0; idx < n_starts; ++idx) run_start(idx);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    const int workers = std::min(jobs, n_starts);
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int idx = next.fetch_add(1); idx < n_starts; idx = next.fetch_add(1))
          run_start(idx);
      });
    for (auto& th : pool) th.join();
  }

  int best = -1;
  for (int idx = 0; idx < n_starts; ++idx) {
    if (!results[idx]) continue;
    if (best < 0 ||
        results[idx]->loglik_trace.back() > results[best]->loglik_trace.back())
      best = idx;
  }
  if (best < 0) {
    std::ostringstream msg;
    msg << "all " << n_starts << " starts failed:";
    for (const auto& f : failures)
      if (!f.empty()) msg << "\n  " << f;
    throw AllStartsFailed(msg.str());
  }
  FitResult out = std::move(*results[best]);
  for (const auto& f : failures)
    if (!f.empty()) out.warnings.push_back(f);
  return out;
}

}  // namespace msnfa
