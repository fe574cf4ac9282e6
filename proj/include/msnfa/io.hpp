#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msnfa/model.hpp"

namespace msnfa {

// Per-column location and scale used to standardize a data matrix.
struct StandardizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

// A numeric data matrix with named columns and optional integer class labels.
struct Dataset {
  Eigen::MatrixXd X;
  std::vector<std::string> column_names;
  std::optional<std::vector<int>> labels;
  bool standardized = false;
  std::optional<StandardizationStats> stats;
};

// Reads a comma-separated file with a header row. Every retained column must
// parse as finite numbers; the label column, when named, is coded by first
// appearance. Throws ParseError naming the offending cell, or MissingColumn.
Dataset load_csv(const std::string& path,
                 const std::optional<std::string>& label_column = std::nullopt,
                 const std::vector<std::string>& drop_columns = {});

// Reads one column from a comma-separated file and codes its values by first
// appearance; the other columns are ignored entirely.
std::vector<int> load_label_column(const std::string& path, const std::string& column);

// Centers and scales each column by its sample mean and sd (divisor n - 1),
// recording the stats. Throws ConstantColumn naming a zero-variance variable.
Dataset standardize(const Dataset& ds);

// Maps a model fitted on standardized data back to original units: the affine
// map y -> mean + sd * y carries mu, B, and d; the factor skewness is scale
// free and unchanged.
MsnfaModel to_original_units(const MsnfaModel& model, const StandardizationStats& stats);

// Fit provenance stored alongside a saved model.
struct FitMeta {
  double loglik = 0.0;
  int iterations = 0;
  std::uint64_t seed = 0;
  double tol = 0.0;
};

// Writes a versioned JSON document holding the model, optional
// standardization stats, and fit metadata; numbers survive a round trip
// bit for bit.
void save_model(const MsnfaModel& model, const FitMeta& meta,
                const std::optional<StandardizationStats>& stats,
                const std::string& path);

struct LoadedModel {
  MsnfaModel model;
  FitMeta meta;
  std::optional<StandardizationStats> stats;
};

// Parses and validates a saved model document. Throws SchemaError with the
// field path, or InvariantViolation when the stored parameters are invalid.
LoadedModel load_model(const std::string& path);

}  // namespace msnfa
