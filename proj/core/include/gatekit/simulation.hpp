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
#ifndef GATEKIT_SIMULATION_HPP_
#define GATEKIT_SIMULATION_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gatekit/estimators.hpp"
#include "gatekit/inference.hpp"

namespace gatekit {

// Treatment assignment mechanisms: A and B are logistic in the squared
// covariates (coefficients (1/2, 1/4, -1/8) and (8, 1/2, -5/4)), C is
// logistic in the raw covariates with (5, 1/4, -1/8).
enum class Mechanism { A, B, C };

// Treatment effect shapes added to Y1: 2z^2, z(1+2z)^2(z-1)^2,
// cos(3z) log(z+2) exp(z), with z the first covariate.
enum class Study { I, II, III };

double mechanism_propensity(Mechanism mech, double x1, double x2, double x3);

// Salts for the per-replicate seed streams, fixed as part of the
// reproducibility contract: dataset generation, cross-fitting, and the
// subsampling loop each get an independent stream per replicate.
inline constexpr uint64_t kSeedStageData = 0x1;
inline constexpr uint64_t kSeedStageCrossFit = 0x2;
inline constexpr uint64_t kSeedStageCi = 0x3;

struct CaseSpec {
  std::string case_id;
  Mechanism mechanism = Mechanism::A;
  Study study = Study::I;
  DesignSpec fit_propensity_spec;
  DesignSpec fit_outcome_spec;
  bool drop_x2 = false;  // hide the categorical confounder from estimation

  // "C1".."C12"; C10-C12 reuse the mechanism-B generators with the
  // squared-term (correctly specified) propensity fit.
  static CaseSpec from_id(const std::string& id, bool drop_x2 = false);
};

struct GeneratedCase {
  Dataset data;
  std::vector<double> true_propensity;  // per unit
  Study study = Study::I;
};

// Covariates X1 ~ U(-1/2,1/2), X2 uniform on {0,1,2}, X3 ~ N(0,1);
// Y0 = g(X) + e0, Y1 = g(X) + effect(study, X1) + e1 with unit normal noise
// and g(X) = X2 + X1 X2 + (X3^3 + X3)/2; Z = X1. The draw order per unit is
// fixed so cases sharing a seed share covariate and noise draws.
GeneratedCase generate_case(const CaseSpec& spec, int n, uint64_t seed);

double true_gate(Study study, double z);

struct CellStats {
  double bias = 0.0;
  double sd = 0.0;
  double mse = 0.0;
  int missing = 0;                      // replicates without an estimate here
  std::optional<double> coverage;       // CI coverage at this grid point
};

struct EstimatorReport {
  EstimatorTag tag = EstimatorTag::match;
  std::vector<CellStats> cells;  // one per grid point
  double mse_avg = 0.0;
  std::optional<double> cp95;    // mean coverage over grid points
  int failed_replicates = 0;
};

struct SimulationReport {
  std::string case_id;
  int n = 0;
  int reps = 0;
  uint64_t seed = 0;
  EvaluationGrid grid;
  std::vector<EstimatorReport> estimators;
};

struct MonteCarloConfig {
  int n = 2000;
  int reps = 1000;
  uint64_t master_seed = 0;
  std::vector<EstimatorTag> estimators;
  EstimatorConfig base;  // shared knobs; tag and specs filled per estimator
  bool with_ci = false;
  SubsampleConfig ci;    // seed is derived per replicate from master_seed
  int n_threads = 1;
};

// Per-replicate pipeline: generate a dataset from (master_seed, replicate),
// run every estimator at the grid (sharing matching and nuisance stages),
// optionally attach subsampling CIs, then aggregate bias/SD/MSE/CP95 in
// replicate-index order (bitwise reproducible for any worker count).
SimulationReport run_monte_carlo(const CaseSpec& spec, const EvaluationGrid& grid,
                                 const MonteCarloConfig& mc);

void write_tidy_csv(std::span<const SimulationReport> reports, const std::string& path,
                    const std::vector<std::string>& header_lines);

// Wide layout: one row per (case, z) with Bias/SD column pairs per estimator.
void write_wide_csv(std::span<const SimulationReport> reports, const std::string& path,
                    const std::vector<std::string>& header_lines);

std::vector<SimulationReport> read_tidy_csv(const std::string& path);

struct MetricsTables {
  struct MseRow {
    std::string case_id;
    double z;
    std::vector<std::optional<double>> mse;  // aligned with `estimators`
  };
  struct RankRow {
    std::string case_id;
    int rank;         // 1 = smallest mse_avg
    EstimatorTag tag;
    double mse_avg;
  };
  std::vector<EstimatorTag> estimators;
  std::vector<MseRow> mse_rows;
  std::vector<RankRow> ranking;
};

MetricsTables compare_metrics(std::span<const SimulationReport> reports);

void write_mse_table(const MetricsTables& tables, const std::string& path,
                     const std::vector<std::string>& header_lines);
void write_ranking(const MetricsTables& tables, const std::string& path,
                   const std::vector<std::string>& header_lines);

}  // namespace gatekit

#endif  // GATEKIT_SIMULATION_HPP_
