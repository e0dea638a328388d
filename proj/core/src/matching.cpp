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
#include "gatekit/matching.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "gatekit/errors.hpp"

namespace gatekit {

const char* metric_name(DistanceMetric metric) {
  switch (metric) {
    case DistanceMetric::euclidean: return "euclidean";
    case DistanceMetric::manhattan: return "manhattan";
    case DistanceMetric::canberra: return "canberra";
  }
  return "?";
}

DistanceMetric parse_metric(const std::string& name) {
  if (name == "euclidean") return DistanceMetric::euclidean;
  if (name == "manhattan") return DistanceMetric::manhattan;
  if (name == "canberra") return DistanceMetric::canberra;
  throw UsageError("unknown distance metric '" + name + "'");
}

double compute_distance(std::span<const double> u, std::span<const double> v,
                        DistanceMetric metric) {
  if (u.size() != v.size() || u.empty()) {
    throw DimensionError("distance arguments must have equal nonzero length");
  }
  double acc = 0.0;
  switch (metric) {
    case DistanceMetric::euclidean:
      for (std::size_t k = 0; k < u.size(); ++k) {
        const double diff = u[k] - v[k];
        acc += diff * diff;
      }
      return std::sqrt(acc);
    case DistanceMetric::manhattan:
      for (std::size_t k = 0; k < u.size(); ++k) acc += std::abs(u[k] - v[k]);
      return acc;
    case DistanceMetric::canberra:
      for (std::size_t k = 0; k < u.size(); ++k) {
        const double den = std::abs(u[k]) + std::abs(v[k]);
        if (den > 0.0) acc += std::abs(u[k] - v[k]) / den;
      }
      return acc;
  }
  return acc;
}

namespace {

// Covariates after the config's transform, plus the arm index sets.
struct MatchWorkspace {
  std::vector<double> xt;  // row-major n x p
  int p = 0;

  std::span<const double> row(int i) const {
    return {xt.data() + static_cast<std::size_t>(i) * p, static_cast<std::size_t>(p)};
  }
};

MatchWorkspace build_workspace(const Dataset& d, const MatchConfig& cfg) {
  MatchWorkspace ws;
  ws.p = d.p;
  ws.xt = d.x;
  if (!cfg.standardize) return ws;
  for (int j = 0; j < d.p; ++j) {
    double m = 0.0;
    for (int i = 0; i < d.n; ++i) m += d.x_at(i, j);
    m /= d.n;
    double ss = 0.0;
    for (int i = 0; i < d.n; ++i) {
      const double c = d.x_at(i, j) - m;
      ss += c * c;
    }
    const double sd = std::sqrt(ss / (d.n - 1));
    const double scale = sd > 0.0 ? 1.0 / sd : 1.0;  // constant column: center only
    for (int i = 0; i < d.n; ++i) {
      ws.xt[static_cast<std::size_t>(i) * d.p + j] = (d.x_at(i, j) - m) * scale;
    }
  }
  return ws;
}

std::vector<int> matches_for(const Dataset& d, const MatchWorkspace& ws, int unit,
                             const MatchConfig& cfg) {
  const auto& pool = d.a[unit] == 1 ? d.controls : d.treated;
  if (cfg.m < 1) throw UsageError("match count m must be >= 1");
  if (static_cast<int>(pool.size()) < cfg.m) {
    throw InsufficientMatchesError(
        "unit " + std::to_string(unit) + " needs " + std::to_string(cfg.m) +
        " opposite-arm matches, only " + std::to_string(pool.size()) + " available");
  }
  std::vector<std::pair<double, int>> cand;
  cand.reserve(pool.size());
  const auto u = ws.row(unit);
  for (int j : pool) {
    cand.emplace_back(compute_distance(u, ws.row(j), cfg.metric), j);
  }
  // (distance, index) pairs order ties deterministically by unit index.
  std::nth_element(cand.begin(), cand.begin() + (cfg.m - 1), cand.end());
  std::sort(cand.begin(), cand.begin() + cfg.m);
  std::vector<int> out(cfg.m);
  for (int k = 0; k < cfg.m; ++k) out[k] = cand[k].second;
  return out;
}

}  // namespace

std::vector<int> find_matches(const Dataset& d, int unit, const MatchConfig& cfg) {
  const MatchWorkspace ws = build_workspace(d, cfg);
  return matches_for(d, ws, unit, cfg);
}

ImputedOutcomes impute_potential_outcomes(const Dataset& d, const MatchConfig& cfg) {
  const MatchWorkspace ws = build_workspace(d, cfg);
  ImputedOutcomes io;
  io.y0_hat = d.y;
  io.y1_hat = d.y;
  io.match_sets.resize(d.n);
  io.usage_counts.assign(d.n, 0);
  for (int i = 0; i < d.n; ++i) {
    io.match_sets[i] = matches_for(d, ws, i, cfg);
    double s = 0.0;
    for (int j : io.match_sets[i]) s += d.y[j];
    const double avg = s / cfg.m;
    (d.a[i] == 1 ? io.y0_hat[i] : io.y1_hat[i]) = avg;
  }
  for (int i = 0; i < d.n; ++i) {
    for (int j : io.match_sets[i]) ++io.usage_counts[j];
  }
  return io;
}

double weight_form_total(const ImputedOutcomes& io, const Dataset& d, int m) {
  if (static_cast<int>(io.usage_counts.size()) != d.n) {
    throw DimensionError("imputed outcomes do not match the dataset");
  }
  double total = 0.0;
  for (int i = 0; i < d.n; ++i) {
    const double sign = d.a[i] == 1 ? 1.0 : -1.0;
    total += sign * (1.0 + static_cast<double>(io.usage_counts[i]) / m) * d.y[i];
  }
  return total;
}

}  // namespace gatekit
