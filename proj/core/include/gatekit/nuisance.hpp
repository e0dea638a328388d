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
#ifndef GATEKIT_NUISANCE_HPP_
#define GATEKIT_NUISANCE_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gatekit/dataset.hpp"

namespace gatekit {

// A model term over covariate columns: x_j, x_j^2, or x_j * x_k.
struct DesignTerm {
  enum class Kind { identity, square, product };
  Kind kind = Kind::identity;
  int j = 0;
  int k = 0;
};

struct DesignSpec {
  std::vector<DesignTerm> terms;
  bool intercept = true;

  static DesignSpec main_effects(int p);
  static DesignSpec squares(int p);
  // Grammar: comma-separated terms "x1", "x2^2", "x1*x3" (1-based columns).
  static DesignSpec parse(const std::string& text, int p);
  std::string to_string() const;
  void check(int p) const;
};

Eigen::MatrixXd build_design(const Dataset& d, const DesignSpec& spec);

struct LogisticFit {
  Eigen::VectorXd beta;
  bool converged = false;
  int iterations = 0;
};

// IRLS from a zero start. Declares convergence when the log-likelihood
// gradient norm drops to tol; under separation the last iterate is returned
// with converged = false rather than failing.
LogisticFit fit_logistic(const Eigen::MatrixXd& design, std::span<const int> a,
                         double tol = 1e-8, int max_iter = 100);

// Least squares via column-pivoted QR; RankError on rank deficiency.
Eigen::VectorXd fit_ols(const Eigen::MatrixXd& design, std::span<const double> y);

struct PropensityFit {
  std::vector<double> pi_hat;  // in [clip_eps, 1 - clip_eps]
  int clip_count = 0;
  bool converged = true;
};

PropensityFit estimate_propensity(const Dataset& d, const DesignSpec& spec,
                                  double clip_eps);

// Full-sample arm-wise outcome regressions, predicted at every unit.
struct OutcomeFit {
  std::vector<double> mu0_hat;
  std::vector<double> mu1_hat;
};

OutcomeFit fit_outcome_models(const Dataset& d, const DesignSpec& spec);

struct CrossFitOutcomes {
  std::vector<double> mu0_hat;
  std::vector<double> mu1_hat;
  std::vector<int> fold_assignment;
};

// Unit i's predictions come from arm-wise fits on all folds except i's own;
// the fold partition is a seeded uniform random split into k near-equal parts.
CrossFitOutcomes cross_fit_outcome_models(const Dataset& d, const DesignSpec& spec,
                                          int k_folds, uint64_t seed);

// Aggregate record of fitted nuisances.
struct NuisanceFit {
  std::vector<double> pi_hat;
  std::vector<double> mu0_hat;
  std::vector<double> mu1_hat;
  bool cross_fitted = false;
  std::vector<int> fold_assignment;
  int clip_count = 0;
};

}  // namespace gatekit

#endif  // GATEKIT_NUISANCE_HPP_
