#include "msnfa/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "msnfa/ecm.hpp"
#include "msnfa/errors.hpp"
#include "msnfa/inference.hpp"
#include "msnfa/init.hpp"
#include "msnfa/io.hpp"
#include "msnfa/model.hpp"
#include "msnfa/selection.hpp"

namespace msnfa {

namespace {

constexpr std::uint64_t kSeedMix = 0x9E3779B97F4A7C15ULL;

struct IntRange {
  int lo = 0;
  int hi = 0;
};

// "A" or "A:B" with 1 <= A <= B.
std::optional<IntRange> parse_range(const std::string& text) {
  IntRange r;
  const auto colon = text.find(':');
  try {
    std::size_t used = 0;
    r.lo = std::stoi(text.substr(0, colon), &used);
    if (used != (colon == std::string::npos ? text.size() : colon)) return std::nullopt;
    if (colon == std::string::npos) {
      r.hi = r.lo;
    } else {
      const std::string rest = text.substr(colon + 1);
      r.hi = std::stoi(rest, &used);
      if (used != rest.size()) return std::nullopt;
    }
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (r.lo < 1 || r.hi < r.lo) return std::nullopt;
  return r;
}

std::string fixed(double v, int decimals) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << v;
  return os.str();
}

std::string full(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::string family_name(Family f) { return f == Family::Msnfa ? "msnfa" : "mfa"; }

void run_parallel(std::size_t n_tasks, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n_tasks <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) fn(i);
  };
  std::vector<std::thread> pool;
  const int k = std::min<int>(jobs, static_cast<int>(n_tasks));
  pool.reserve(static_cast<std::size_t>(k));
  for (int t = 0; t < k; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

// A model fitted on standardized data scores raw data through its stored
// stats; apply_stats=false trusts the data to already be in model units.
Eigen::MatrixXd data_for_model(const LoadedModel& lm, const Dataset& ds, bool apply_stats) {
  if (ds.X.cols() != lm.model.p())
    throw BadDimension("data has " + std::to_string(ds.X.cols()) +
                       " columns but the model expects " + std::to_string(lm.model.p()));
  if (!apply_stats || !lm.stats) return ds.X;
  Eigen::MatrixXd X = ds.X;
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    X.col(j) = (X.col(j).array() - lm.stats->mean[j]) / lm.stats->sd[j];
  return X;
}

struct FitArgs {
  std::string data;
  std::string g_range;
  std::string q_range;
  std::string family = "msnfa";
  bool standardize_flag = false;
  int starts = 10;
  double tol = 1e-6;
  int max_iter = 5000;
  std::uint64_t seed = 0;
  std::string out;
  std::string assign;
  std::string criteria_path;
  std::string select = "bic";
  std::string label_column;
  std::vector<std::string> drop;
  int jobs = 1;
  bool original_units = false;
};

struct GridCell {
  Family family = Family::Msnfa;
  int g = 0;
  int q = 0;
  std::uint64_t seed = 0;
};

struct CellOutcome {
  std::optional<FitResult> result;
  std::string error;
};

int cmd_fit(const FitArgs& a) {
  const auto g_range = parse_range(a.g_range);
  const auto q_range = parse_range(a.q_range);
  if (!g_range || !q_range) {
    std::cerr << "invalid --g/--q range (expected A or A:B with 1 <= A <= B)\n";
    return 1;
  }
  std::vector<Family> families;
  if (a.family == "msnfa") {
    families = {Family::Msnfa};
  } else if (a.family == "mfa") {
    families = {Family::Mfa};
  } else if (a.family == "both") {
    families = {Family::Mfa, Family::Msnfa};
  } else {
    std::cerr << "invalid --family (expected msnfa, mfa, or both)\n";
    return 1;
  }
  if (a.select != "bic" && a.select != "icl" && a.select != "awe") {
    std::cerr << "invalid --select (expected bic, icl, or awe)\n";
    return 1;
  }

  Dataset ds = load_csv(a.data,
                        a.label_column.empty() ? std::nullopt
                                               : std::optional<std::string>(a.label_column),
                        a.drop);
  if (a.standardize_flag) ds = standardize(ds);
  const int n = static_cast<int>(ds.X.rows());
  const int p = static_cast<int>(ds.X.cols());

  std::vector<GridCell> cells;
  for (const Family fam : families)
    for (int g = g_range->lo; g <= g_range->hi; ++g)
      for (int q = q_range->lo; q <= q_range->hi; ++q) {
        GridCell cell;
        cell.family = fam;
        cell.g = g;
        cell.q = q;
        cell.seed = a.seed ^ (static_cast<std::uint64_t>(cells.size() + 1) * kSeedMix);
        cells.push_back(cell);
      }

  std::vector<CellOutcome> outcomes(cells.size());
  std::mutex log_mutex;
  run_parallel(cells.size(), a.jobs, [&](std::size_t i) {
    const GridCell& cell = cells[i];
    FitConfig cfg;
    cfg.tol = a.tol;
    cfg.max_iter = a.max_iter;
    cfg.n_starts = a.starts;
    cfg.seed = cell.seed;
    cfg.family = cell.family;
    InitStrategy strategy;
    strategy.seed = cell.seed;
    try {
      FitResult res = multi_start_fit(ds.X, cell.g, cell.q, cfg, strategy, 1);
      std::lock_guard<std::mutex> lock(log_mutex);
      std::cerr << "[fit] " << family_name(cell.family) << " g=" << cell.g << " q=" << cell.q
                << " loglik=" << fixed(res.loglik_trace.back(), 4)
                << " iterations=" << res.iterations
                << (res.converged ? "" : " (not converged)") << "\n";
      for (const auto& w : res.warnings) std::cerr << "  warning: " << w << "\n";
      outcomes[i].result = std::move(res);
    } catch (const Error& e) {
      std::lock_guard<std::mutex> lock(log_mutex);
      std::cerr << "[fit] " << family_name(cell.family) << " g=" << cell.g << " q=" << cell.q
                << " failed: " << e.what() << "\n";
      outcomes[i].error = e.what();
    }
  });

  struct TableRow {
    std::size_t cell = 0;
    CriteriaRow crit;
    std::optional<double> ari;
    std::optional<double> ccr;
  };
  std::vector<TableRow> rows;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!outcomes[i].result) continue;
    const GridCell& cell = cells[i];
    const FitResult& res = *outcomes[i].result;
    TableRow row;
    row.cell = i;
    const long m = param_count(p, cell.q, cell.g, cell.family);
    row.crit = criteria(res.loglik_trace.back(), static_cast<int>(m), n, res.z_final);
    row.crit.q = cell.q;
    if (ds.labels) {
      row.ari = adjusted_rand_index(*ds.labels, res.map_labels);
      row.ccr = correct_classification_rate(*ds.labels, res.map_labels);
    }
    rows.push_back(std::move(row));
  }

  if (!a.criteria_path.empty()) {
    std::ofstream out(a.criteria_path);
    if (!out) throw ParseError(a.criteria_path + ": cannot open file for writing");
    out << "g\tq\tfamily\tloglik\tm\tBIC\tICL\tAWE\tENT\tARI\tCCR\n";
    for (const TableRow& row : rows) {
      const GridCell& cell = cells[row.cell];
      out << cell.g << '\t' << cell.q << '\t' << family_name(cell.family) << '\t'
          << fixed(row.crit.loglik, 4) << '\t' << row.crit.m << '\t'
          << fixed(row.crit.bic, 4) << '\t' << fixed(row.crit.icl, 4) << '\t'
          << fixed(row.crit.awe, 4) << '\t' << fixed(row.crit.ent, 4) << '\t'
          << (row.ari ? fixed(*row.ari, 3) : "NA") << '\t'
          << (row.ccr ? fixed(*row.ccr, 3) : "NA") << '\n';
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (outcomes[i].result) continue;
      out << "# failed family=" << family_name(cells[i].family) << " g=" << cells[i].g
          << " q=" << cells[i].q << ": " << outcomes[i].error << "\n";
    }
  }

  if (rows.empty()) {
    std::string msg = "every (g, q, family) fit failed";
    for (std::size_t i = 0; i < cells.size(); ++i)
      msg += "\n  " + family_name(cells[i].family) + " g=" + std::to_string(cells[i].g) +
             " q=" + std::to_string(cells[i].q) + ": " + outcomes[i].error;
    throw AllStartsFailed(msg);
  }

  auto criterion_value = [&](const TableRow& row) {
    if (a.select == "icl") return row.crit.icl;
    if (a.select == "awe") return row.crit.awe;
    return row.crit.bic;
  };
  std::size_t best = 0;
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (criterion_value(rows[k]) > criterion_value(rows[best])) best = k;
  const GridCell& best_cell = cells[rows[best].cell];
  const FitResult& best_fit = *outcomes[rows[best].cell].result;

  if (!a.out.empty()) {
    FitMeta meta;
    meta.loglik = best_fit.loglik_trace.back();
    meta.iterations = best_fit.iterations;
    meta.seed = best_cell.seed;
    meta.tol = a.tol;
    if (a.original_units && ds.stats) {
      save_model(to_original_units(best_fit.model, *ds.stats), meta, std::nullopt, a.out);
    } else {
      save_model(best_fit.model, meta, ds.stats, a.out);
    }
  }

  if (!a.assign.empty()) {
    std::ofstream out(a.assign);
    if (!out) throw ParseError(a.assign + ": cannot open file for writing");
    out << "map";
    for (int i = 0; i < best_cell.g; ++i) out << ",post_" << i;
    out << "\n";
    for (Eigen::Index j = 0; j < best_fit.z_final.cols(); ++j) {
      out << best_fit.map_labels[static_cast<std::size_t>(j)];
      for (Eigen::Index i = 0; i < best_fit.z_final.rows(); ++i)
        out << ',' << full(best_fit.z_final(i, j));
      out << "\n";
    }
  }

  std::cout << "selected family=" << family_name(best_cell.family) << " g=" << best_cell.g
            << " q=" << best_cell.q << " " << a.select << "="
            << fixed(criterion_value(rows[best]), 4) << "\n";
  return 0;
}

struct SimulateArgs {
  std::string model;
  int n = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  if (a.n < 1) {
    std::cerr << "invalid --n (expected a positive integer)\n";
    return 1;
  }
  const LoadedModel lm = load_model(a.model);
  const auto [X, labels] = mixture_sample(lm.model, a.n, a.seed);
  std::ofstream out(a.out);
  if (!out) throw ParseError(a.out + ": cannot open file for writing");
  for (int j = 0; j < lm.model.p(); ++j) out << "x" << (j + 1) << ",";
  out << "label\n";
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) out << full(X(i, j)) << ',';
    out << labels[static_cast<std::size_t>(i)] << "\n";
  }
  std::cout << "wrote " << a.n << " rows to " << a.out << "\n";
  return 0;
}

struct ScoreArgs {
  std::string model;
  std::string data;
  std::string out;
  bool posterior_weights = false;
  bool no_standardize = false;
  std::string label_column;
  std::vector<std::string> drop;
};

int cmd_score(const ScoreArgs& a) {
  const LoadedModel lm = load_model(a.model);
  const Dataset ds = load_csv(a.data,
                              a.label_column.empty()
                                  ? std::nullopt
                                  : std::optional<std::string>(a.label_column),
                              a.drop);
  const Eigen::MatrixXd X = data_for_model(lm, ds, !a.no_standardize);
  const Eigen::MatrixXd scores = factor_scores(lm.model, X, a.posterior_weights);
  std::ofstream out(a.out);
  if (!out) throw ParseError(a.out + ": cannot open file for writing");
  for (int k = 0; k < lm.model.q(); ++k) out << (k > 0 ? "," : "") << "f" << (k + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (Eigen::Index k = 0; k < scores.cols(); ++k)
      out << (k > 0 ? "," : "") << full(scores(i, k));
    out << "\n";
  }
  std::cout << "wrote " << scores.rows() << " score rows to " << a.out << "\n";
  return 0;
}

struct SeArgs {
  std::string model;
  std::string data;
  double eta = 1e-4;
  std::string out;
  int jobs = 1;
  bool no_standardize = false;
  std::string label_column;
  std::vector<std::string> drop;
};

int cmd_se(const SeArgs& a) {
  const LoadedModel lm = load_model(a.model);
  const Dataset ds = load_csv(a.data,
                              a.label_column.empty()
                                  ? std::nullopt
                                  : std::optional<std::string>(a.label_column),
                              a.drop);
  const Eigen::MatrixXd X = data_for_model(lm, ds, !a.no_standardize);
  const Eigen::MatrixXd info = observed_info(lm.model, X, a.eta, a.jobs);
  const std::vector<std::optional<double>> se = standard_errors(info);
  const Eigen::VectorXd theta = FlatParams::flatten(lm.model);
  const std::vector<std::string> names =
      FlatParams::names(lm.model.p(), lm.model.q(), lm.model.g(), lm.model.family);
  std::ofstream out(a.out);
  if (!out) throw ParseError(a.out + ": cannot open file for writing");
  out << "parameter\testimate\tse\n";
  for (std::size_t k = 0; k < names.size(); ++k) {
    out << names[k] << '\t' << full(theta[static_cast<Eigen::Index>(k)]) << '\t'
        << (se[k] ? full(*se[k]) : "NA") << "\n";
  }
  std::cout << "wrote " << names.size() << " standard errors to " << a.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string truth;
  std::string pred;
};

// "path:column", splitting on the last colon.
std::optional<std::pair<std::string, std::string>> parse_file_column(const std::string& text) {
  const auto pos = text.rfind(':');
  if (pos == std::string::npos || pos == 0 || pos + 1 == text.size()) return std::nullopt;
  return std::make_pair(text.substr(0, pos), text.substr(pos + 1));
}

int cmd_eval(const EvalArgs& a) {
  const auto truth_spec = parse_file_column(a.truth);
  const auto pred_spec = parse_file_column(a.pred);
  if (!truth_spec || !pred_spec) {
    std::cerr << "invalid --truth/--pred (expected FILE:COLUMN)\n";
    return 1;
  }
  const std::vector<int> truth = load_label_column(truth_spec->first, truth_spec->second);
  const std::vector<int> pred = load_label_column(pred_spec->first, pred_spec->second);
  if (truth.size() != pred.size())
    throw BadDimension("truth has " + std::to_string(truth.size()) + " rows, prediction has " +
                       std::to_string(pred.size()));
  std::cout << "ARI\t" << fixed(adjusted_rand_index(truth, pred), 3) << "\n";
  std::cout << "CCR\t" << fixed(correct_classification_rate(truth, pred), 3) << "\n";
  const Eigen::MatrixXi table = classification_table(truth, pred);
  std::cout << "classification table (rows = truth, columns = prediction):\n";
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.cols(); ++j)
      std::cout << (j > 0 ? "\t" : "") << table(i, j);
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Mixtures of skew-normal factor analyzers"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a grid of models and select the best");
  fit_cmd->add_option("--data", fit_args.data, "Input CSV with a header row")->required();
  fit_cmd->add_option("--g", fit_args.g_range, "Component range A or A:B")->required();
  fit_cmd->add_option("--q", fit_args.q_range, "Factor range A or A:B")->required();
  fit_cmd->add_option("--family", fit_args.family, "msnfa, mfa, or both");
  fit_cmd->add_flag("--standardize", fit_args.standardize_flag,
                    "Standardize columns before fitting");
  fit_cmd->add_option("--starts", fit_args.starts, "Independent starts per model");
  fit_cmd->add_option("--tol", fit_args.tol, "Log-likelihood stopping tolerance");
  fit_cmd->add_option("--max-iter", fit_args.max_iter, "Maximum CM sweeps");
  fit_cmd->add_option("--seed", fit_args.seed, "Random seed");
  fit_cmd->add_option("--out", fit_args.out, "Write the selected model (JSON)");
  fit_cmd->add_option("--assign", fit_args.assign,
                      "Write MAP labels and posteriors of the selected model (CSV)");
  fit_cmd->add_option("--criteria", fit_args.criteria_path,
                      "Write the model-selection table (TSV)");
  fit_cmd->add_option("--select", fit_args.select, "Selection criterion: bic, icl, or awe");
  fit_cmd->add_option("--label-column", fit_args.label_column,
                      "Class column for ARI/CCR reporting");
  fit_cmd->add_option("--drop", fit_args.drop, "Columns to drop");
  fit_cmd->add_option("--jobs", fit_args.jobs, "Concurrent fits");
  fit_cmd->add_flag("--original-units", fit_args.original_units,
                    "Save the model mapped back to original units");

  SimulateArgs sim_args;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Draw a sample from a saved model");
  sim_cmd->add_option("--model", sim_args.model, "Model file (JSON)")->required();
  sim_cmd->add_option("--n", sim_args.n, "Number of rows")->required();
  sim_cmd->add_option("--seed", sim_args.seed, "Random seed");
  sim_cmd->add_option("--out", sim_args.out, "Output CSV")->required();

  ScoreArgs score_args;
  CLI::App* score_cmd = app.add_subcommand("score", "Factor scores for a data file");
  score_cmd->add_option("--model", score_args.model, "Model file (JSON)")->required();
  score_cmd->add_option("--data", score_args.data, "Input CSV")->required();
  score_cmd->add_option("--out", score_args.out, "Output CSV")->required();
  score_cmd->add_flag("--posterior-weights", score_args.posterior_weights,
                      "Weight component scores by posteriors instead of mixing weights");
  score_cmd->add_flag("--no-standardize", score_args.no_standardize,
                      "Do not apply the model's stored standardization to the data");
  score_cmd->add_option("--label-column", score_args.label_column, "Class column to ignore");
  score_cmd->add_option("--drop", score_args.drop, "Columns to drop");

  SeArgs se_args;
  CLI::App* se_cmd = app.add_subcommand("se", "Standard errors at a saved model");
  se_cmd->add_option("--model", se_args.model, "Model file (JSON)")->required();
  se_cmd->add_option("--data", se_args.data, "Input CSV")->required();
  se_cmd->add_option("--eta", se_args.eta, "Central-difference step scale");
  se_cmd->add_option("--out", se_args.out, "Output TSV")->required();
  se_cmd->add_option("--jobs", se_args.jobs, "Concurrent difference columns");
  se_cmd->add_flag("--no-standardize", se_args.no_standardize,
                   "Do not apply the model's stored standardization to the data");
  se_cmd->add_option("--label-column", se_args.label_column, "Class column to ignore");
  se_cmd->add_option("--drop", se_args.drop, "Columns to drop");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Compare two label columns");
  eval_cmd->add_option("--truth", eval_args.truth, "FILE:COLUMN with true classes")->required();
  eval_cmd->add_option("--pred", eval_args.pred, "FILE:COLUMN with predicted clusters")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit_args);
    if (sim_cmd->parsed()) return cmd_simulate(sim_args);
    if (score_cmd->parsed()) return cmd_score(score_args);
    if (se_cmd->parsed()) return cmd_se(se_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    std::cerr << "no subcommand given\n";
    return 1;
  } catch (const AllStartsFailed& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const DegenerateDispersion& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const NumericalBreakdown& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const SingularMoment& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const NotPositiveDefinite& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const EmptyComponent& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const TinyCluster& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace msnfa
