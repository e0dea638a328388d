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
#ifndef GATEKIT_MATCHING_HPP_
#define GATEKIT_MATCHING_HPP_

#include <span>
#include <vector>

#include "gatekit/dataset.hpp"

namespace gatekit {

enum class DistanceMetric { euclidean, manhattan, canberra };

const char* metric_name(DistanceMetric metric);
DistanceMetric parse_metric(const std::string& name);

struct MatchConfig {
  int m = 5;
  DistanceMetric metric = DistanceMetric::euclidean;
  // Z-score covariates (center, scale to unit sample sd) before distance
  // computation. Centering is a no-op for euclidean/manhattan but matters
  // for canberra, whose terms depend on coordinate magnitudes.
  bool standardize = true;
};

// Canberra terms with both coordinates zero contribute 0 (limit convention).
double compute_distance(std::span<const double> u, std::span<const double> v,
                        DistanceMetric metric);

// Indices of the m nearest opposite-arm units, sorted by nondecreasing
// distance, ties broken by ascending unit index. The unit itself is never a
// candidate (cross-arm by construction).
std::vector<int> find_matches(const Dataset& d, int unit, const MatchConfig& cfg);

struct ImputedOutcomes {
  std::vector<double> y0_hat;
  std::vector<double> y1_hat;
  std::vector<std::vector<int>> match_sets;  // J_M(i), ordered as find_matches
  std::vector<int> usage_counts;             // K_M(i)
};

// Matching with replacement: each unit keeps its observed outcome on its own
// arm and imputes the other as the mean outcome of its m matches.
ImputedOutcomes impute_potential_outcomes(const Dataset& d, const MatchConfig& cfg);

// The weighted total sum_i (2a_i - 1)(1 + K_M(i)/m) y_i, which equals
// sum_i (y1_hat_i - y0_hat_i) identically.
double weight_form_total(const ImputedOutcomes& io, const Dataset& d, int m);

}  // namespace gatekit

#endif  // GATEKIT_MATCHING_HPP_
