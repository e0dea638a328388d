/*
 * Copyright 2026 The gatekit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "gatekit/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gatekit/csv.hpp"
#include "gatekit/errors.hpp"

namespace gatekit {

namespace {

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  if (cell.empty()) {
    throw DataError("missing cell at row " + std::to_string(row) + ", column " + col);
  }
  const char* begin = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  while (end && *end == ' ') ++end;
  if (end == begin || (end && *end != '\0')) {
    throw DataError("non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                    ", column " + col);
  }
  if (!std::isfinite(v)) {
    throw DataError("non-finite value at row " + std::to_string(row) + ", column " + col);
  }
  return v;
}

}  // namespace

Dataset make_dataset(std::vector<double> y, std::vector<int> a,
                     std::vector<double> x, std::vector<double> z, ZKind z_kind) {
  Dataset d;
  d.n = static_cast<int>(y.size());
  if (d.n == 0 || x.size() % y.size() != 0) {
    throw DimensionError("covariate matrix size is not a multiple of the unit count");
  }
  d.p = static_cast<int>(x.size() / y.size());
  d.y = std::move(y);
  d.a = std::move(a);
  d.x = std::move(x);
  d.z = std::move(z);
  d.z_kind = z_kind;
  if (d.a.size() != d.y.size() || d.z.size() != d.y.size()) {
    throw DimensionError("y, a, z must have equal length");
  }
  for (int i = 0; i < d.n; ++i) {
    (d.a[i] == 0 ? d.controls : d.treated).push_back(i);
  }
  validate(d);
  return d;
}

void validate(const Dataset& d) {
  if (d.n < 2) throw DataError("need at least 2 units, got " + std::to_string(d.n));
  if (d.p < 1) throw DataError("need at least 1 covariate column");
  for (int i = 0; i < d.n; ++i) {
    if (d.a[i] != 0 && d.a[i] != 1) {
      throw TreatmentError("treatment value " + std::to_string(d.a[i]) + " at row " +
                           std::to_string(i) + " is not 0/1");
    }
  }
  int n_treated = 0;
  for (int v : d.a) n_treated += v;
  if (n_treated == 0) throw EmptyArmError("no treated units");
  if (n_treated == d.n) throw EmptyArmError("no control units");
  for (int i = 0; i < d.n; ++i) {
    if (!std::isfinite(d.y[i])) {
      throw DataError("non-finite outcome at row " + std::to_string(i));
    }
    if (!std::isfinite(d.z[i])) {
      throw DataError("non-finite z at row " + std::to_string(i));
    }
    for (int j = 0; j < d.p; ++j) {
      if (!std::isfinite(d.x_at(i, j))) {
        throw DataError("non-finite covariate at row " + std::to_string(i) +
                        ", column " + std::to_string(j));
      }
    }
  }
}

Dataset load_dataset(const std::string& path, const ColumnSchema& schema, ZKind z_kind) {
  if (schema.covariates.empty()) {
    throw SchemaError("schema must name at least one covariate column");
  }
  CsvTable table = read_csv(path);

  auto require = [&](const std::string& name) {
    int j = table.column(name);
    if (j < 0) throw SchemaError("missing column '" + name + "' in " + path);
    return j;
  };
  const int y_col = require(schema.outcome);
  const int a_col = require(schema.treatment);
  std::vector<int> x_cols;
  x_cols.reserve(schema.covariates.size());
  for (const auto& name : schema.covariates) x_cols.push_back(require(name));
  const int z_col = require(schema.z);

  const std::size_t n = table.rows.size();
  const std::size_t p = x_cols.size();
  std::vector<double> y(n), z(n), x(n * p);
  std::vector<int> a(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    if (row.size() != table.header.size()) {
      throw DataError("row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                      " cells, expected " + std::to_string(table.header.size()));
    }
    y[i] = parse_cell(row[y_col], i, schema.outcome);
    const double av = parse_cell(row[a_col], i, schema.treatment);
    if (av != 0.0 && av != 1.0) {
      throw TreatmentError("treatment value '" + row[a_col] + "' at row " +
                           std::to_string(i) + " is not 0/1");
    }
    a[i] = static_cast<int>(av);
    for (std::size_t k = 0; k < p; ++k) {
      x[i * p + k] = parse_cell(row[x_cols[k]], i, schema.covariates[k]);
    }
    z[i] = parse_cell(row[z_col], i, schema.z);
  }
  return make_dataset(std::move(y), std::move(a), std::move(x), std::move(z), z_kind);
}

void save_dataset(const Dataset& d, const std::string& path, const ColumnSchema& schema) {
  if (static_cast<int>(schema.covariates.size()) != d.p) {
    throw SchemaError("schema names " + std::to_string(schema.covariates.size()) +
                      " covariates, dataset has " + std::to_string(d.p));
  }
  bool z_aliased = false;
  for (const auto& name : schema.covariates) {
    if (name == schema.z) z_aliased = true;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << schema.outcome << ',' << schema.treatment;
  for (const auto& name : schema.covariates) out << ',' << name;
  if (!z_aliased) out << ',' << schema.z;
  out << '\n';
  for (int i = 0; i < d.n; ++i) {
    out << format_g17(d.y[i]) << ',' << d.a[i];
    for (int j = 0; j < d.p; ++j) out << ',' << format_g17(d.x_at(i, j));
    if (!z_aliased) out << ',' << format_g17(d.z[i]);
    out << '\n';
  }
}

EvaluationGrid make_grid(std::vector<double> points) {
  if (points.empty()) throw UsageError("evaluation grid is empty");
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (!(points[i] < points[i + 1])) {
      throw UsageError("grid points must be strictly increasing");
    }
  }
  for (double v : points) {
    if (!std::isfinite(v)) throw UsageError("grid points must be finite");
  }
  return EvaluationGrid{std::move(points)};
}

EvaluationGrid parse_grid(const std::string& text) {
  double start = 0, end = 0, step = 0;
  std::string part;
  std::stringstream ss(text);
  std::vector<double> vals;
  while (std::getline(ss, part, ':')) {
    char* endp = nullptr;
    vals.push_back(std::strtod(part.c_str(), &endp));
    if (endp == part.c_str() || *endp != '\0') {
      throw UsageError("bad grid component '" + part + "' in '" + text + "'");
    }
  }
  if (vals.size() != 3) throw UsageError("grid must be start:end:step, got '" + text + "'");
  start = vals[0];
  end = vals[1];
  step = vals[2];
  if (step <= 0) throw UsageError("grid step must be positive");
  if (end < start) throw UsageError("grid end must be >= start");
  std::vector<double> points;
  for (int k = 0;; ++k) {
    const double v = start + k * step;
    if (v > end + step / 2) break;
    points.push_back(v);
  }
  return make_grid(std::move(points));
}

const char* tag_name(EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::match: return "MATCH";
    case EstimatorTag::match_bc: return "MATCH_BC";
    case EstimatorTag::ipw: return "IPW";
    case EstimatorTag::or_reg: return "OR";
    case EstimatorTag::aipw: return "AIPW";
    case EstimatorTag::psr: return "PSR";
  }
  return "?";
}

EstimatorTag parse_estimator_tag(const std::string& name) {
  std::string s;
  for (char c : name) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "match") return EstimatorTag::match;
  if (s == "match_bc" || s == "match.bc") return EstimatorTag::match_bc;
  if (s == "ipw") return EstimatorTag::ipw;
  if (s == "or") return EstimatorTag::or_reg;
  if (s == "aipw") return EstimatorTag::aipw;
  if (s == "psr") return EstimatorTag::psr;
  throw UsageError("unknown estimator '" + name + "'");
}

void save_curve(const GateCurve& curve, const std::string& path,
                const std::vector<std::string>& header_lines) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (const auto& line : header_lines) out << "# " << line << '\n';
  const auto& diag = curve.diagnostics;
  out << "# diagnostics clipped_propensities=" << diag.clipped_propensities
      << " empty_windows=" << diag.empty_windows << " psr_excluded=" << diag.psr_excluded
      << " propensity_non_converged=" << (diag.propensity_non_converged ? 1 : 0) << '\n';
  out << "z,estimate,ci_lower,ci_upper,estimator,bandwidth\n";
  for (std::size_t k = 0; k < curve.grid.points.size(); ++k) {
    out << format_g17(curve.grid.points[k]) << ',' << format_optional(curve.estimates[k])
        << ',' << format_optional(curve.ci_lower[k]) << ','
        << format_optional(curve.ci_upper[k]) << ',' << tag_name(curve.estimator) << ','
        << format_optional(curve.bandwidth) << '\n';
  }
}

}  // namespace gatekit
