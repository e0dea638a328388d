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
#ifndef GATEKIT_INFERENCE_HPP_
#define GATEKIT_INFERENCE_HPP_

#include <cstdint>
#include <vector>

#include "gatekit/estimators.hpp"

namespace gatekit {

struct SubsampleConfig {
  double r = 2.0 / 3.0;  // subsample-size exponent, sizes floor(N_a^r) per arm
  int b_reps = 200;
  double level = 0.95;
  uint64_t seed = 0;
  // Politis-Romano centering: CI = full estimate minus the (1-a/2, a/2)
  // quantiles of (replicate - full) scaled by sqrt(n_b h_b / (n h)) (the
  // plain sqrt(n_b/n) when no bandwidth is in play). When false, the CI is
  // the raw percentile band of the replicate estimates.
  bool rescale = true;
};

struct SubsampleCi {
  GateCurve curve;  // full-data estimates with ci_lower/ci_upper filled
  // replicate_estimates[b][k]: replicate b's estimate at grid point k.
  std::vector<std::vector<std::optional<double>>> replicate_estimates;
  std::vector<int> missing_counts;  // per grid point
  std::vector<bool> unreliable;     // > 50% missing replicates at that point
  int subsample_controls = 0;
  int subsample_treated = 0;
};

// Draws b_reps stratified subsamples without replacement (floor(N0^r)
// controls, floor(N1^r) treated), re-runs the full estimator pipeline on
// each (bandwidth selection and nuisance fits included), and forms the CI
// at each grid point from the replicate estimates.
SubsampleCi subsample_ci(const Dataset& d, const EstimatorConfig& cfg,
                         const EvaluationGrid& grid, const SubsampleConfig& sub,
                         int n_threads = 1, const NuisanceOverride& injected = {});

}  // namespace gatekit

#endif  // GATEKIT_INFERENCE_HPP_
