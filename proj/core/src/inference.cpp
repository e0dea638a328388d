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
#include "gatekit/inference.hpp"

#include <algorithm>
#include <cmath>

#include "gatekit/errors.hpp"
#include "gatekit/parallel.hpp"
#include "gatekit/rng.hpp"
#include "gatekit/stats.hpp"

namespace gatekit {

namespace {

constexpr uint64_t kSaltSubsample = 0x5u;
constexpr uint64_t kSaltEstimator = 0x6u;

Dataset subset_dataset(const Dataset& d, const std::vector<int>& rows) {
  std::vector<double> y, x, z;
  std::vector<int> a;
  y.reserve(rows.size());
  a.reserve(rows.size());
  z.reserve(rows.size());
  x.reserve(rows.size() * d.p);
  for (int i : rows) {
    y.push_back(d.y[i]);
    a.push_back(d.a[i]);
    z.push_back(d.z[i]);
    const auto r = d.row(i);
    x.insert(x.end(), r.begin(), r.end());
  }
  return make_dataset(std::move(y), std::move(a), std::move(x), std::move(z), d.z_kind);
}

std::vector<double> subset_values(const std::vector<double>& v,
                                  const std::vector<int>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (int i : rows) out.push_back(v[i]);
  return out;
}

NuisanceOverride subset_override(const NuisanceOverride& injected,
                                 const std::vector<int>& rows) {
  NuisanceOverride out;
  if (injected.pi_hat) out.pi_hat = subset_values(*injected.pi_hat, rows);
  if (injected.mu0_hat) out.mu0_hat = subset_values(*injected.mu0_hat, rows);
  if (injected.mu1_hat) out.mu1_hat = subset_values(*injected.mu1_hat, rows);
  return out;
}

}  // namespace

SubsampleCi subsample_ci(const Dataset& d, const EstimatorConfig& cfg,
                         const EvaluationGrid& grid, const SubsampleConfig& sub,
                         int n_threads, const NuisanceOverride& injected) {
  if (!(sub.r > 0.0 && sub.r < 1.0)) throw UsageError("subsample exponent r must be in (0,1)");
  if (sub.b_reps < 2) throw UsageError("b_reps must be >= 2");
  if (!(sub.level > 0.0 && sub.level < 1.0)) throw UsageError("level must be in (0,1)");

  const int n0 = static_cast<int>(std::floor(
      std::pow(static_cast<double>(d.controls.size()), sub.r)));
  const int n1 = static_cast<int>(std::floor(
      std::pow(static_cast<double>(d.treated.size()), sub.r)));
  const bool uses_matching =
      cfg.tag == EstimatorTag::match || cfg.tag == EstimatorTag::match_bc;
  const int min_per_arm = uses_matching ? cfg.match.m + 1 : 2;
  if (n0 < min_per_arm || n1 < min_per_arm) {
    throw SubsampleError("subsample sizes (" + std::to_string(n0) + " controls, " +
                         std::to_string(n1) + " treated) are infeasible; need >= " +
                         std::to_string(min_per_arm) + " per arm");
  }

  SubsampleCi out;
  out.subsample_controls = n0;
  out.subsample_treated = n1;
  out.curve = estimate_gate(d, grid, cfg, injected);
  const std::size_t g = grid.points.size();
  out.replicate_estimates.assign(sub.b_reps, {});
  out.missing_counts.assign(g, 0);
  out.unreliable.assign(g, false);

  std::vector<std::optional<double>> replicate_bandwidth(sub.b_reps);
  parallel_for(sub.b_reps, n_threads, [&](int b) {
    Rng rng(derive_seed(sub.seed, static_cast<uint64_t>(b), kSaltSubsample));
    std::vector<int> rows;
    rows.reserve(n0 + n1);
    const std::vector<int> perm0 = rng.permutation(static_cast<int>(d.controls.size()));
    for (int k = 0; k < n0; ++k) rows.push_back(d.controls[perm0[k]]);
    const std::vector<int> perm1 = rng.permutation(static_cast<int>(d.treated.size()));
    for (int k = 0; k < n1; ++k) rows.push_back(d.treated[perm1[k]]);
    std::sort(rows.begin(), rows.end());

    EstimatorConfig cfg_b = cfg;
    cfg_b.seed = derive_seed(sub.seed, static_cast<uint64_t>(b), kSaltEstimator);
    std::vector<std::optional<double>> est(g);
    try {
      const Dataset db = subset_dataset(d, rows);
      const GateCurve curve = estimate_gate(db, grid, cfg_b, subset_override(injected, rows));
      est = curve.estimates;
      replicate_bandwidth[b] = curve.bandwidth;
    } catch (const Error&) {
      // failed replicate: all grid points stay missing
    }
    out.replicate_estimates[b] = std::move(est);
  });

  const double alpha = 1.0 - sub.level;
  const double n_total = d.n;
  const double nb_total = n0 + n1;
  for (std::size_t k = 0; k < g; ++k) {
    std::vector<double> vals;
    std::vector<double> deltas;
    vals.reserve(sub.b_reps);
    deltas.reserve(sub.b_reps);
    const std::optional<double> full = out.curve.estimates[k];
    for (int b = 0; b < sub.b_reps; ++b) {
      const auto& e = out.replicate_estimates[b][k];
      if (!e) continue;
      vals.push_back(*e);
      if (full) {
        double scale = std::sqrt(nb_total / n_total);
        if (out.curve.bandwidth && replicate_bandwidth[b]) {
          scale = std::sqrt(nb_total * *replicate_bandwidth[b] /
                            (n_total * *out.curve.bandwidth));
        }
        deltas.push_back((*e - *full) * scale);
      }
    }
    out.missing_counts[k] = sub.b_reps - static_cast<int>(vals.size());
    if (out.missing_counts[k] * 2 > sub.b_reps) out.unreliable[k] = true;
    if (vals.empty()) {
      out.unreliable[k] = true;
      continue;
    }
    if (sub.rescale) {
      if (!full) {
        out.unreliable[k] = true;
        continue;
      }
      out.curve.ci_lower[k] = *full - quantile_type7(deltas, 1.0 - alpha / 2.0);
      out.curve.ci_upper[k] = *full - quantile_type7(deltas, alpha / 2.0);
    } else {
      out.curve.ci_lower[k] = quantile_type7(vals, alpha / 2.0);
      out.curve.ci_upper[k] = quantile_type7(vals, 1.0 - alpha / 2.0);
    }
  }
  return out;
}

}  // namespace gatekit
