#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "msnfa/ecm.hpp"
#include "msnfa/model.hpp"

namespace msnfa {

enum class FaMethod { Pca, MlEm };
enum class LambdaMethod { Moment, Zero };

struct InitStrategy {
  int kmeans_restarts = 10;
  FaMethod fa_method = FaMethod::Pca;
  LambdaMethod lambda_method = LambdaMethod::Moment;
  std::uint64_t seed = 0;
};

// Lloyd's algorithm with distance-weighted seeding, `restarts` independent
// runs keeping the lowest within-cluster sum of squares; an emptied cluster is
// reseeded to the point farthest from its center.  Deterministic given seed.
std::vector<int> kmeans(const Eigen::MatrixXd& data, int g, int restarts, std::uint64_t seed);

// Hard-partition initializer: k-means clusters, then a per-cluster factor
// model (spectral split of the cluster covariance, optionally refined by up to
// 100 plain factor-analysis EM iterations), then skewness by inverting the
// factor-score skewness map (lambda_method Moment) or zero.  Family Mfa forces
// lambda = 0.
MsnfaModel init_model(const Eigen::MatrixXd& data, int g, int q, const InitStrategy& strategy,
                      Family family = Family::Msnfa);

// config.n_starts independent inits (start i reseeds the strategy with
// substream i of config.seed), each fit to convergence; returns the start with
// the highest final log-likelihood, ties to the lowest start index.  Failed
// starts are recorded in the result's warnings; if every start fails the
// error lists each failure.
FitResult multi_start_fit(const Eigen::MatrixXd& data, int g, int q, const FitConfig& config,
                          const InitStrategy& strategy, int jobs = 1);

}  // namespace msnfa
