#include "msnfa/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "msnfa/errors.hpp"

namespace msnfa {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (std::isspace(static_cast<unsigned char>(s[b])) != 0)) ++b;
  while (e > b && (std::isspace(static_cast<unsigned char>(s[e - 1])) != 0)) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_cell(const std::string& token, std::size_t line_no, const std::string& column) {
  const std::string t = trim(token);
  const std::string where =
      "line " + std::to_string(line_no) + ", column '" + column + "'";
  if (t.empty()) throw ParseError(where + ": empty cell");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    throw ParseError(where + ": cannot parse '" + t + "' as a number");
  if (!std::isfinite(v)) throw ParseError(where + ": non-finite value '" + t + "'");
  return v;
}

const json& require_field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError(path + "." + key + ": missing");
  return *it;
}

double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path + ": expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError(path + ": expected an integer");
  return j.get<int>();
}

std::uint64_t as_u64(const json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    throw SchemaError(path + ": expected an integer");
  return j.get<std::uint64_t>();
}

Eigen::VectorXd as_vector(const json& j, const std::string& path, Eigen::Index size) {
  if (!j.is_array()) throw SchemaError(path + ": expected an array");
  if (size >= 0 && static_cast<Eigen::Index>(j.size()) != size)
    throw SchemaError(path + ": expected " + std::to_string(size) + " entries, got " +
                      std::to_string(j.size()));
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k)
    v[static_cast<Eigen::Index>(k)] = as_double(j[k], path + "[" + std::to_string(k) + "]");
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::optional<std::string>& label_column,
                 const std::vector<std::string>& drop_columns) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": missing header row");
  std::vector<std::string> header = split_csv_line(line);
  for (auto& name : header) name = trim(name);

  auto find_column = [&](const std::string& name) {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    throw MissingColumn("column '" + name + "' not found in " + path);
  };

  std::unordered_set<std::size_t> skip;
  for (const auto& name : drop_columns) skip.insert(find_column(name));
  std::size_t label_idx = header.size();
  if (label_column) {
    label_idx = find_column(*label_column);
    skip.insert(label_idx);
  }

  std::vector<std::size_t> retained;
  for (std::size_t k = 0; k < header.size(); ++k)
    if (skip.count(k) == 0) retained.push_back(k);
  if (retained.empty()) throw ParseError(path + ": no numeric columns remain");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::unordered_map<std::string, int> label_codes;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(cells.size()));
    std::vector<double> row(retained.size());
    for (std::size_t k = 0; k < retained.size(); ++k)
      row[k] = parse_cell(cells[retained[k]], line_no, header[retained[k]]);
    rows.push_back(std::move(row));
    if (label_column) {
      const std::string tag = trim(cells[label_idx]);
      const auto ins = label_codes.emplace(tag, static_cast<int>(label_codes.size()));
      labels.push_back(ins.first->second);
    }
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");

  Dataset ds;
  ds.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(retained.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < retained.size(); ++k)
      ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  for (const std::size_t k : retained) ds.column_names.push_back(header[k]);
  if (label_column) ds.labels = std::move(labels);
  return ds;
}

std::vector<int> load_label_column(const std::string& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": missing header row");
  std::vector<std::string> header = split_csv_line(line);
  for (auto& name : header) name = trim(name);
  std::size_t idx = header.size();
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == column) {
      idx = k;
      break;
    }
  if (idx == header.size())
    throw MissingColumn("column '" + column + "' not found in " + path);
  std::vector<int> labels;
  std::unordered_map<std::string, int> codes;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(cells.size()));
    const std::string tag = trim(cells[idx]);
    const auto ins = codes.emplace(tag, static_cast<int>(codes.size()));
    labels.push_back(ins.first->second);
  }
  if (labels.empty()) throw ParseError(path + ": no data rows");
  return labels;
}

Dataset standardize(const Dataset& ds) {
  if (ds.standardized) throw InvariantViolation("dataset is already standardized");
  const Eigen::Index n = ds.X.rows();
  const Eigen::Index p = ds.X.cols();
  if (n < 2) throw BadDimension("standardize: need at least 2 rows");
  Dataset out = ds;
  StandardizationStats stats;
  stats.mean = ds.X.colwise().mean();
  stats.sd.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double var =
        (ds.X.col(j).array() - stats.mean[j]).square().sum() / static_cast<double>(n - 1);
    stats.sd[j] = std::sqrt(var);
    if (stats.sd[j] <= 1e-12 * std::max(1.0, std::abs(stats.mean[j]))) {
      const std::string name =
          j < static_cast<Eigen::Index>(ds.column_names.size())
              ? ds.column_names[static_cast<std::size_t>(j)]
              : std::to_string(j);
      throw ConstantColumn("column '" + name + "' has zero variance");
    }
    out.X.col(j) = (ds.X.col(j).array() - stats.mean[j]) / stats.sd[j];
  }
  out.standardized = true;
  out.stats = std::move(stats);
  return out;
}

MsnfaModel to_original_units(const MsnfaModel& model, const StandardizationStats& stats) {
  const Eigen::Index p = model.p();
  if (stats.mean.size() != p || stats.sd.size() != p)
    throw BadDimension("to_original_units: stats do not match model dimension");
  std::vector<SnfaComponent> comps;
  comps.reserve(model.components.size());
  for (const auto& c : model.components) {
    const Eigen::VectorXd mu = stats.mean.array() + stats.sd.array() * c.mu.array();
    const Eigen::MatrixXd B = stats.sd.asDiagonal() * c.B;
    const Eigen::VectorXd d = stats.sd.array().square() * c.d.array();
    comps.emplace_back(mu, B, d, c.lambda);
  }
  return MsnfaModel(model.weights, std::move(comps), model.family);
}

void save_model(const MsnfaModel& model, const FitMeta& meta,
                const std::optional<StandardizationStats>& stats, const std::string& path) {
  json j;
  j["format_version"] = 1;
  j["family"] = model.family == Family::Msnfa ? "msnfa" : "mfa";
  j["g"] = model.g();
  j["p"] = model.p();
  j["q"] = model.q();
  j["weights"] = vector_to_json(model.weights);
  json comps = json::array();
  for (const auto& c : model.components) {
    json jc;
    jc["mu"] = vector_to_json(c.mu);
    json flat = json::array();
    for (Eigen::Index r = 0; r < c.B.rows(); ++r)
      for (Eigen::Index col = 0; col < c.B.cols(); ++col) flat.push_back(c.B(r, col));
    jc["B"] = std::move(flat);
    jc["d"] = vector_to_json(c.d);
    jc["lambda"] = vector_to_json(c.lambda);
    comps.push_back(std::move(jc));
  }
  j["components"] = std::move(comps);
  if (stats) {
    j["standardization"] = {{"mean", vector_to_json(stats->mean)},
                            {"sd", vector_to_json(stats->sd)}};
  } else {
    j["standardization"] = nullptr;
  }
  j["fit"] = {{"loglik", meta.loglik},
              {"iterations", meta.iterations},
              {"seed", meta.seed},
              {"tol", meta.tol}};
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  out << j.dump(2) << '\n';
  if (!out) throw ParseError(path + ": write failed");
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }

  const int version = as_int(require_field(j, "format_version", "$"), "$.format_version");
  if (version != 1)
    throw SchemaError("$.format_version: unsupported version " + std::to_string(version));

  const json& fam = require_field(j, "family", "$");
  if (!fam.is_string()) throw SchemaError("$.family: expected a string");
  Family family;
  if (fam.get<std::string>() == "msnfa") {
    family = Family::Msnfa;
  } else if (fam.get<std::string>() == "mfa") {
    family = Family::Mfa;
  } else {
    throw SchemaError("$.family: expected 'msnfa' or 'mfa', got '" +
                      fam.get<std::string>() + "'");
  }

  const int g = as_int(require_field(j, "g", "$"), "$.g");
  const int p = as_int(require_field(j, "p", "$"), "$.p");
  const int q = as_int(require_field(j, "q", "$"), "$.q");
  if (g < 1 || p < 1 || q < 1) throw SchemaError("$.g/$.p/$.q: must be positive");

  const Eigen::VectorXd weights = as_vector(require_field(j, "weights", "$"), "$.weights", g);

  const json& jcomps = require_field(j, "components", "$");
  if (!jcomps.is_array()) throw SchemaError("$.components: expected an array");
  if (static_cast<int>(jcomps.size()) != g)
    throw SchemaError("$.components: expected " + std::to_string(g) + " entries, got " +
                      std::to_string(jcomps.size()));

  std::vector<SnfaComponent> comps;
  comps.reserve(static_cast<std::size_t>(g));
  for (int i = 0; i < g; ++i) {
    const std::string base = "$.components[" + std::to_string(i) + "]";
    const json& jc = jcomps[static_cast<std::size_t>(i)];
    const Eigen::VectorXd mu = as_vector(require_field(jc, "mu", base), base + ".mu", p);
    const Eigen::VectorXd flat =
        as_vector(require_field(jc, "B", base), base + ".B",
                  static_cast<Eigen::Index>(p) * static_cast<Eigen::Index>(q));
    Eigen::MatrixXd B(p, q);
    for (Eigen::Index r = 0; r < p; ++r)
      for (Eigen::Index col = 0; col < q; ++col) B(r, col) = flat[r * q + col];
    const Eigen::VectorXd d = as_vector(require_field(jc, "d", base), base + ".d", p);
    const Eigen::VectorXd lambda =
        as_vector(require_field(jc, "lambda", base), base + ".lambda", q);
    try {
      comps.emplace_back(mu, B, d, lambda);
    } catch (const Error& e) {
      throw InvariantViolation(base + ": " + e.what());
    }
  }

  std::optional<StandardizationStats> stats;
  const json& jstd = require_field(j, "standardization", "$");
  if (!jstd.is_null()) {
    StandardizationStats s;
    s.mean = as_vector(require_field(jstd, "mean", "$.standardization"),
                       "$.standardization.mean", p);
    s.sd = as_vector(require_field(jstd, "sd", "$.standardization"),
                     "$.standardization.sd", p);
    stats = std::move(s);
  }

  const json& jfit = require_field(j, "fit", "$");
  FitMeta meta;
  meta.loglik = as_double(require_field(jfit, "loglik", "$.fit"), "$.fit.loglik");
  meta.iterations = as_int(require_field(jfit, "iterations", "$.fit"), "$.fit.iterations");
  meta.seed = as_u64(require_field(jfit, "seed", "$.fit"), "$.fit.seed");
  meta.tol = as_double(require_field(jfit, "tol", "$.fit"), "$.fit.tol");

  try {
    MsnfaModel model(weights, std::move(comps), family);
    return LoadedModel{std::move(model), meta, std::move(stats)};
  } catch (const InvariantViolation&) {
    throw;
  } catch (const Error& e) {
    throw InvariantViolation(std::string("$.weights: ") + e.what());
  }
}

}  // namespace msnfa
