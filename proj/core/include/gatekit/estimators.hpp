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
#ifndef GATEKIT_ESTIMATORS_HPP_
#define GATEKIT_ESTIMATORS_HPP_

#include <cstdint>
#include <optional>

#include "gatekit/dataset.hpp"
#include "gatekit/kernels.hpp"
#include "gatekit/matching.hpp"
#include "gatekit/nuisance.hpp"

namespace gatekit {

struct EstimatorConfig {
  EstimatorTag tag = EstimatorTag::match;
  MatchConfig match;
  // Unset specs default to main effects over all covariate columns.
  std::optional<DesignSpec> propensity_spec;
  std::optional<DesignSpec> outcome_spec;
  BandwidthMethod bandwidth = BandwidthMethod::rule_of_thumb();
  KernelKind kernel = KernelKind::gaussian;
  int k_folds = 5;
  double clip_eps = 1e-12;
  uint64_t seed = 0;  // consumed by cross-fitting (MATCH_BC) only
};

// Caller-supplied nuisance values replacing the fitted ones; used for the
// algebraic reduction identities and for oracle tests (e.g. true-propensity
// injection).
struct NuisanceOverride {
  std::optional<std::vector<double>> pi_hat;
  std::optional<std::vector<double>> mu0_hat;
  std::optional<std::vector<double>> mu1_hat;
};

// Per-dataset cache so MATCH/MATCH_BC share one matching pass and the
// propensity/outcome fits are reused across estimators. Valid only while
// every estimator call against it uses the same dataset and the same
// non-tag config fields.
struct EstimatorWorkspace {
  std::optional<ImputedOutcomes> imputed;
  std::optional<PropensityFit> propensity;
  std::optional<OutcomeFit> outcomes_full;
  std::optional<CrossFitOutcomes> outcomes_xfit;
};

GateCurve estimate_gate(const Dataset& d, const EvaluationGrid& grid,
                        const EstimatorConfig& cfg,
                        const NuisanceOverride& injected = {},
                        EstimatorWorkspace* ws = nullptr);

GateCurve estimate_match(const Dataset& d, const EvaluationGrid& grid,
                         const EstimatorConfig& cfg,
                         EstimatorWorkspace* ws = nullptr);
GateCurve estimate_match_bc(const Dataset& d, const EvaluationGrid& grid,
                            const EstimatorConfig& cfg,
                            const NuisanceOverride& injected = {},
                            EstimatorWorkspace* ws = nullptr);
GateCurve estimate_ipw(const Dataset& d, const EvaluationGrid& grid,
                       const EstimatorConfig& cfg,
                       const NuisanceOverride& injected = {},
                       EstimatorWorkspace* ws = nullptr);
GateCurve estimate_or(const Dataset& d, const EvaluationGrid& grid,
                      const EstimatorConfig& cfg,
                      const NuisanceOverride& injected = {},
                      EstimatorWorkspace* ws = nullptr);
GateCurve estimate_aipw(const Dataset& d, const EvaluationGrid& grid,
                        const EstimatorConfig& cfg,
                        const NuisanceOverride& injected = {},
                        EstimatorWorkspace* ws = nullptr);
GateCurve estimate_psr(const Dataset& d, const EvaluationGrid& grid,
                       const EstimatorConfig& cfg,
                       const NuisanceOverride& injected = {},
                       EstimatorWorkspace* ws = nullptr);

}  // namespace gatekit

#endif  // GATEKIT_ESTIMATORS_HPP_
