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
#include "gatekit/estimators.hpp"

#include <cmath>

#include "gatekit/errors.hpp"
#include "gatekit/stats.hpp"

namespace gatekit {

namespace {

void check_injected(const std::optional<std::vector<double>>& v, int n,
                    const char* what) {
  if (v && static_cast<int>(v->size()) != n) {
    throw DimensionError(std::string("injected ") + what +
                         " length does not match the dataset");
  }
}

DesignSpec resolved_spec(const std::optional<DesignSpec>& spec, int p) {
  return spec ? *spec : DesignSpec::main_effects(p);
}

const ImputedOutcomes& shared_imputed(const Dataset& d, const EstimatorConfig& cfg,
                                      EstimatorWorkspace* ws,
                                      std::optional<ImputedOutcomes>& local) {
  if (ws) {
    if (!ws->imputed) ws->imputed = impute_potential_outcomes(d, cfg.match);
    return *ws->imputed;
  }
  local = impute_potential_outcomes(d, cfg.match);
  return *local;
}

const PropensityFit& shared_propensity(const Dataset& d, const EstimatorConfig& cfg,
                                       EstimatorWorkspace* ws,
                                       std::optional<PropensityFit>& local) {
  const DesignSpec spec = resolved_spec(cfg.propensity_spec, d.p);
  if (ws) {
    if (!ws->propensity) ws->propensity = estimate_propensity(d, spec, cfg.clip_eps);
    return *ws->propensity;
  }
  local = estimate_propensity(d, spec, cfg.clip_eps);
  return *local;
}

const OutcomeFit& shared_outcomes(const Dataset& d, const EstimatorConfig& cfg,
                                  EstimatorWorkspace* ws,
                                  std::optional<OutcomeFit>& local) {
  const DesignSpec spec = resolved_spec(cfg.outcome_spec, d.p);
  if (ws) {
    if (!ws->outcomes_full) ws->outcomes_full = fit_outcome_models(d, spec);
    return *ws->outcomes_full;
  }
  local = fit_outcome_models(d, spec);
  return *local;
}

const CrossFitOutcomes& shared_xfit(const Dataset& d, const EstimatorConfig& cfg,
                                    EstimatorWorkspace* ws,
                                    std::optional<CrossFitOutcomes>& local) {
  const DesignSpec spec = resolved_spec(cfg.outcome_spec, d.p);
  if (ws) {
    if (!ws->outcomes_xfit) {
      ws->outcomes_xfit = cross_fit_outcome_models(d, spec, cfg.k_folds, cfg.seed);
    }
    return *ws->outcomes_xfit;
  }
  local = cross_fit_outcome_models(d, spec, cfg.k_folds, cfg.seed);
  return *local;
}

// Final stage shared by every estimator: regress vs on Z at the grid.
// h_select_vs picks which response drives bandwidth selection (MATCH_BC
// shares the bandwidth chosen on the plain MATCH pseudo-response).
GateCurve final_stage(const Dataset& d, const EvaluationGrid& grid,
                      const EstimatorConfig& cfg, EstimatorTag tag,
                      std::span<const double> vs, std::span<const double> h_select_vs,
                      Diagnostics diag) {
  GateCurve curve;
  curve.grid = grid;
  curve.estimator = tag;
  curve.diagnostics = diag;
  const std::size_t g = grid.points.size();
  curve.estimates.resize(g);
  curve.ci_lower.resize(g);
  curve.ci_upper.resize(g);
  if (d.z_kind == ZKind::discrete) {
    for (std::size_t k = 0; k < g; ++k) {
      try {
        curve.estimates[k] = discrete_conditional_mean(d.z, vs, grid.points[k]);
      } catch (const EmptyCellError&) {
        curve.estimates[k] = std::nullopt;
        ++curve.diagnostics.empty_windows;
      }
    }
    return curve;
  }
  const Bandwidth h = select_bandwidth(d.z, h_select_vs, cfg.bandwidth);
  curve.bandwidth = h.h;
  for (std::size_t k = 0; k < g; ++k) {
    curve.estimates[k] =
        local_constant_1d(d.z, vs, grid.points[k], h, cfg.kernel, &curve.diagnostics);
  }
  return curve;
}

std::vector<double> match_pseudo_response(const Dataset& d, const ImputedOutcomes& io) {
  std::vector<double> v(d.n);
  for (int i = 0; i < d.n; ++i) v[i] = io.y1_hat[i] - io.y0_hat[i];
  return v;
}

}  // namespace

GateCurve estimate_match(const Dataset& d, const EvaluationGrid& grid,
                         const EstimatorConfig& cfg, EstimatorWorkspace* ws) {
  std::optional<ImputedOutcomes> local;
  const ImputedOutcomes& io = shared_imputed(d, cfg, ws, local);
  const std::vector<double> v = match_pseudo_response(d, io);
  return final_stage(d, grid, cfg, EstimatorTag::match, v, v, {});
}

GateCurve estimate_match_bc(const Dataset& d, const EvaluationGrid& grid,
                            const EstimatorConfig& cfg, const NuisanceOverride& injected,
                            EstimatorWorkspace* ws) {
  check_injected(injected.mu0_hat, d.n, "mu0_hat");
  check_injected(injected.mu1_hat, d.n, "mu1_hat");
  std::optional<ImputedOutcomes> local;
  const ImputedOutcomes& io = shared_imputed(d, cfg, ws, local);
  const std::vector<double> v = match_pseudo_response(d, io);

  const std::vector<double>* mu0 = nullptr;
  const std::vector<double>* mu1 = nullptr;
  std::optional<CrossFitOutcomes> xfit_local;
  if (injected.mu0_hat && injected.mu1_hat) {
    mu0 = &*injected.mu0_hat;
    mu1 = &*injected.mu1_hat;
  } else if (injected.mu0_hat || injected.mu1_hat) {
    throw UsageError("inject both mu0_hat and mu1_hat or neither");
  } else {
    const CrossFitOutcomes& xf = shared_xfit(d, cfg, ws, xfit_local);
    mu0 = &xf.mu0_hat;
    mu1 = &xf.mu1_hat;
  }

  // Corrected contrast: the imputed side gains mu_a(X_i) - mean mu_a over
  // the matches, the observed side stays at the unit's own outcome.
  std::vector<double> vt(d.n);
  for (int i = 0; i < d.n; ++i) {
    const std::vector<double>& mu = d.a[i] == 1 ? *mu0 : *mu1;
    double mean_mu = 0.0;
    for (int j : io.match_sets[i]) mean_mu += mu[j];
    mean_mu /= static_cast<double>(io.match_sets[i].size());
    const double correction = mu[i] - mean_mu;
    vt[i] = d.a[i] == 1 ? v[i] - correction : v[i] + correction;
  }
  return final_stage(d, grid, cfg, EstimatorTag::match_bc, vt, v, {});
}

GateCurve estimate_ipw(const Dataset& d, const EvaluationGrid& grid,
                       const EstimatorConfig& cfg, const NuisanceOverride& injected,
                       EstimatorWorkspace* ws) {
  check_injected(injected.pi_hat, d.n, "pi_hat");
  Diagnostics diag;
  const std::vector<double>* pi = nullptr;
  std::optional<PropensityFit> local;
  if (injected.pi_hat) {
    pi = &*injected.pi_hat;
  } else {
    const PropensityFit& fit = shared_propensity(d, cfg, ws, local);
    diag.clipped_propensities = fit.clip_count;
    diag.propensity_non_converged = !fit.converged;
    pi = &fit.pi_hat;
  }
  std::vector<double> pseudo(d.n);
  for (int i = 0; i < d.n; ++i) {
    pseudo[i] = d.a[i] == 1 ? d.y[i] / (*pi)[i] : -(d.y[i] / (1.0 - (*pi)[i]));
  }
  return final_stage(d, grid, cfg, EstimatorTag::ipw, pseudo, pseudo, diag);
}

GateCurve estimate_or(const Dataset& d, const EvaluationGrid& grid,
                      const EstimatorConfig& cfg, const NuisanceOverride& injected,
                      EstimatorWorkspace* ws) {
  check_injected(injected.mu0_hat, d.n, "mu0_hat");
  check_injected(injected.mu1_hat, d.n, "mu1_hat");
  const std::vector<double>* mu0 = nullptr;
  const std::vector<double>* mu1 = nullptr;
  std::optional<OutcomeFit> local;
  if (injected.mu0_hat && injected.mu1_hat) {
    mu0 = &*injected.mu0_hat;
    mu1 = &*injected.mu1_hat;
  } else if (injected.mu0_hat || injected.mu1_hat) {
    throw UsageError("inject both mu0_hat and mu1_hat or neither");
  } else {
    const OutcomeFit& fit = shared_outcomes(d, cfg, ws, local);
    mu0 = &fit.mu0_hat;
    mu1 = &fit.mu1_hat;
  }
  std::vector<double> v(d.n);
  for (int i = 0; i < d.n; ++i) v[i] = (*mu1)[i] - (*mu0)[i];
  return final_stage(d, grid, cfg, EstimatorTag::or_reg, v, v, {});
}

GateCurve estimate_aipw(const Dataset& d, const EvaluationGrid& grid,
                        const EstimatorConfig& cfg, const NuisanceOverride& injected,
                        EstimatorWorkspace* ws) {
  check_injected(injected.pi_hat, d.n, "pi_hat");
  check_injected(injected.mu0_hat, d.n, "mu0_hat");
  check_injected(injected.mu1_hat, d.n, "mu1_hat");
  Diagnostics diag;
  const std::vector<double>* pi = nullptr;
  std::optional<PropensityFit> pi_local;
  if (injected.pi_hat) {
    pi = &*injected.pi_hat;
  } else {
    const PropensityFit& fit = shared_propensity(d, cfg, ws, pi_local);
    diag.clipped_propensities = fit.clip_count;
    diag.propensity_non_converged = !fit.converged;
    pi = &fit.pi_hat;
  }
  const std::vector<double>* mu0 = nullptr;
  const std::vector<double>* mu1 = nullptr;
  std::optional<OutcomeFit> mu_local;
  if (injected.mu0_hat && injected.mu1_hat) {
    mu0 = &*injected.mu0_hat;
    mu1 = &*injected.mu1_hat;
  } else if (injected.mu0_hat || injected.mu1_hat) {
    throw UsageError("inject both mu0_hat and mu1_hat or neither");
  } else {
    const OutcomeFit& fit = shared_outcomes(d, cfg, ws, mu_local);
    mu0 = &fit.mu0_hat;
    mu1 = &fit.mu1_hat;
  }
  // Same branch shapes as the IPW pseudo-response so that zero-injected
  // outcome models reduce to IPW bit for bit.
  std::vector<double> pseudo(d.n);
  for (int i = 0; i < d.n; ++i) {
    const double aug = (*mu1)[i] - (*mu0)[i];
    pseudo[i] = d.a[i] == 1 ? (d.y[i] - (*mu1)[i]) / (*pi)[i] + aug
                            : -((d.y[i] - (*mu0)[i]) / (1.0 - (*pi)[i])) + aug;
  }
  return final_stage(d, grid, cfg, EstimatorTag::aipw, pseudo, pseudo, diag);
}

GateCurve estimate_psr(const Dataset& d, const EvaluationGrid& grid,
                       const EstimatorConfig& cfg, const NuisanceOverride& injected,
                       EstimatorWorkspace* ws) {
  check_injected(injected.pi_hat, d.n, "pi_hat");
  Diagnostics diag;
  const std::vector<double>* pi = nullptr;
  std::optional<PropensityFit> pi_local;
  if (injected.pi_hat) {
    pi = &*injected.pi_hat;
  } else {
    const PropensityFit& fit = shared_propensity(d, cfg, ws, pi_local);
    diag.clipped_propensities = fit.clip_count;
    diag.propensity_non_converged = !fit.converged;
    pi = &fit.pi_hat;
  }

  // Arm-wise regressor/response views for the two-regressor stage.
  struct ArmData {
    std::vector<double> z, pi, y;
    Bandwidth hz{1.0}, hpi{1.0};
  };
  ArmData arms[2];
  for (int arm = 0; arm < 2; ++arm) {
    const auto& rows = arm == 0 ? d.controls : d.treated;
    auto& ad = arms[arm];
    ad.z.reserve(rows.size());
    for (int i : rows) {
      ad.z.push_back(d.z[i]);
      ad.pi.push_back((*pi)[i]);
      ad.y.push_back(d.y[i]);
    }
    ad.hz = select_bandwidth(ad.z, ad.y, cfg.bandwidth);
    // A constant propensity regressor cancels out of the product kernel, so
    // any positive bandwidth is equivalent; rule-of-thumb is undefined there.
    if (cfg.bandwidth.kind == BandwidthMethod::Kind::rule_of_thumb &&
        sample_sd(ad.pi) == 0.0) {
      ad.hpi = make_bandwidth(1.0);
    } else {
      ad.hpi = select_bandwidth(ad.pi, ad.y, cfg.bandwidth);
    }
  }

  std::vector<double> zs_c, vs_c;
  zs_c.reserve(d.n);
  vs_c.reserve(d.n);
  for (int i = 0; i < d.n; ++i) {
    const auto t1 = local_constant_2d(arms[1].z, arms[1].pi, arms[1].y, d.z[i],
                                      (*pi)[i], arms[1].hz, arms[1].hpi, cfg.kernel);
    const auto t0 = local_constant_2d(arms[0].z, arms[0].pi, arms[0].y, d.z[i],
                                      (*pi)[i], arms[0].hz, arms[0].hpi, cfg.kernel);
    if (!t1 || !t0) {
      ++diag.psr_excluded;
      continue;
    }
    zs_c.push_back(d.z[i]);
    vs_c.push_back(*t1 - *t0);
  }
  if (zs_c.empty()) {
    throw BandwidthError("every observation was excluded in the PSR second step");
  }

  GateCurve curve;
  curve.grid = grid;
  curve.estimator = EstimatorTag::psr;
  curve.diagnostics = diag;
  const std::size_t g = grid.points.size();
  curve.estimates.resize(g);
  curve.ci_lower.resize(g);
  curve.ci_upper.resize(g);
  if (d.z_kind == ZKind::discrete) {
    for (std::size_t k = 0; k < g; ++k) {
      try {
        curve.estimates[k] = discrete_conditional_mean(zs_c, vs_c, grid.points[k]);
      } catch (const EmptyCellError&) {
        curve.estimates[k] = std::nullopt;
        ++curve.diagnostics.empty_windows;
      }
    }
    return curve;
  }
  const Bandwidth h = select_bandwidth(zs_c, vs_c, cfg.bandwidth);
  curve.bandwidth = h.h;
  for (std::size_t k = 0; k < g; ++k) {
    curve.estimates[k] =
        local_constant_1d(zs_c, vs_c, grid.points[k], h, cfg.kernel, &curve.diagnostics);
  }
  return curve;
}

GateCurve estimate_gate(const Dataset& d, const EvaluationGrid& grid,
                        const EstimatorConfig& cfg, const NuisanceOverride& injected,
                        EstimatorWorkspace* ws) {
  switch (cfg.tag) {
    case EstimatorTag::match: return estimate_match(d, grid, cfg, ws);
    case EstimatorTag::match_bc: return estimate_match_bc(d, grid, cfg, injected, ws);
    case EstimatorTag::ipw: return estimate_ipw(d, grid, cfg, injected, ws);
    case EstimatorTag::or_reg: return estimate_or(d, grid, cfg, injected, ws);
    case EstimatorTag::aipw: return estimate_aipw(d, grid, cfg, injected, ws);
    case EstimatorTag::psr: return estimate_psr(d, grid, cfg, injected, ws);
  }
  throw UsageError("unknown estimator tag");
}

}  // namespace gatekit
