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
#ifndef GATEKIT_DATASET_HPP_
#define GATEKIT_DATASET_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gatekit {

enum class ZKind { continuous, discrete };

// Immutable after construction; safe to share read-only across workers.
struct Dataset {
  int n = 0;
  int p = 0;
  std::vector<double> y;   // outcome per unit
  std::vector<int> a;      // binary treatment per unit
  std::vector<double> x;   // covariates, row-major n x p
  std::vector<double> z;   // subgroup variable per unit
  ZKind z_kind = ZKind::continuous;
  std::vector<int> controls;  // indices with a == 0, ascending
  std::vector<int> treated;   // indices with a == 1, ascending

  std::span<const double> row(int i) const {
    return {x.data() + static_cast<std::size_t>(i) * p, static_cast<std::size_t>(p)};
  }
  double x_at(int i, int j) const { return x[static_cast<std::size_t>(i) * p + j]; }
};

// Validates invariants (binary treatment, non-empty arms, finite values,
// n >= 2, p >= 1) and fills the arm index sets.
Dataset make_dataset(std::vector<double> y, std::vector<int> a,
                     std::vector<double> x, std::vector<double> z,
                     ZKind z_kind = ZKind::continuous);

// Throws the first violated-invariant error, with location where applicable.
void validate(const Dataset& d);

// Column-role mapping for CSV ingestion. The z column may coincide with a
// covariate column.
struct ColumnSchema {
  std::string outcome;
  std::string treatment;
  std::vector<std::string> covariates;
  std::string z;
};

Dataset load_dataset(const std::string& path, const ColumnSchema& schema,
                     ZKind z_kind = ZKind::continuous);

// Inverse of load_dataset: writes a header row from the schema and one row
// per unit, reals at 17 significant digits so a reload is elementwise exact.
void save_dataset(const Dataset& d, const std::string& path,
                  const ColumnSchema& schema);

struct EvaluationGrid {
  std::vector<double> points;  // strictly increasing, non-empty
};

EvaluationGrid make_grid(std::vector<double> points);

// Parses "start:end:step"; endpoints included within step/2 tolerance.
EvaluationGrid parse_grid(const std::string& text);

enum class EstimatorTag { match, match_bc, ipw, or_reg, aipw, psr };

const char* tag_name(EstimatorTag tag);              // "MATCH", "MATCH_BC", ...
EstimatorTag parse_estimator_tag(const std::string& name);  // accepts either case

struct Diagnostics {
  int clipped_propensities = 0;
  int empty_windows = 0;       // grid points with zero kernel mass
  int psr_excluded = 0;        // observations dropped from the PSR third step
  bool propensity_non_converged = false;
};

struct GateCurve {
  EvaluationGrid grid;
  std::vector<std::optional<double>> estimates;
  std::vector<std::optional<double>> ci_lower;
  std::vector<std::optional<double>> ci_upper;
  EstimatorTag estimator = EstimatorTag::match;
  std::optional<double> bandwidth;  // final-stage bandwidth; unset for discrete Z
  Diagnostics diagnostics;
};

// Writes a curve as CSV (columns z, estimate, ci_lower, ci_upper, estimator,
// bandwidth). header_lines are emitted first, one "# " comment per entry.
void save_curve(const GateCurve& curve, const std::string& path,
                const std::vector<std::string>& header_lines);

}  // namespace gatekit

#endif  // GATEKIT_DATASET_HPP_
