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
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gatekit/csv.hpp"
#include "gatekit/errors.hpp"
#include "gatekit/estimators.hpp"
#include "gatekit/inference.hpp"
#include "gatekit/simulation.hpp"

namespace {

using namespace gatekit;

int exit_code_for(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::data: return 1;
    case ErrorClass::usage: return 2;
    case ErrorClass::numeric: return 3;
  }
  return 3;
}

[[noreturn]] void fail(const Error& e) {
  const int code = exit_code_for(e.error_class());
  std::fprintf(stderr, "error kind=%s exit=%d: %s\n", e.kind().c_str(), code, e.what());
  std::exit(code);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct DataOpts {
  std::string data;
  std::string y_col = "y";
  std::string a_col = "a";
  std::string x_cols;  // comma list; empty = all columns except y/a
  std::string z_col;
  bool z_discrete = false;
};

struct EstimatorOpts {
  std::string estimator = "match";
  int m = 5;
  std::string metric = "euclidean";
  bool standardize = true;
  std::string kernel = "gaussian";
  std::string bandwidth = "rot";  // "rot" or a fixed positive value
  std::string propensity_spec;    // empty = main effects
  std::string outcome_spec;
  int k_folds = 5;
  double clip_eps = 1e-12;
};

void add_data_options(CLI::App* cmd, DataOpts& opts) {
  cmd->add_option("--data", opts.data, "Input CSV with a header row")->required();
  cmd->add_option("--y-col", opts.y_col, "Outcome column name");
  cmd->add_option("--a-col", opts.a_col, "Treatment column name (coded 0/1)");
  cmd->add_option("--x-cols", opts.x_cols,
                  "Comma-separated covariate columns (default: all except outcome "
                  "and treatment)");
  cmd->add_option("--z-col", opts.z_col, "Subgroup variable column")->required();
  cmd->add_flag("--z-discrete", opts.z_discrete,
                "Treat z as discrete (indicator means instead of kernel weights)");
}

void add_estimator_options(CLI::App* cmd, EstimatorOpts& opts, bool with_choice) {
  if (with_choice) {
    cmd->add_option("--estimator", opts.estimator,
                    "One of match, match_bc, ipw, or, aipw, psr")
        ->required();
  }
  cmd->add_option("--m", opts.m, "Matches per unit");
  cmd->add_option("--metric", opts.metric, "euclidean, manhattan, or canberra");
  cmd->add_flag("--standardize,!--no-standardize", opts.standardize,
                "Z-score covariates before distance computation (default on)");
  cmd->add_option("--kernel", opts.kernel, "gaussian or epanechnikov");
  cmd->add_option("--bandwidth", opts.bandwidth,
                  "'rot' (rule of thumb) or a fixed positive value");
  cmd->add_option("--propensity-spec", opts.propensity_spec,
                  "Propensity model terms, e.g. 'x1,x2,x3' or 'x1^2,x2^2,x3^2'");
  cmd->add_option("--outcome-spec", opts.outcome_spec, "Outcome model terms");
  cmd->add_option("--k-folds", opts.k_folds, "Cross-fitting folds for match_bc");
  cmd->add_option("--clip-eps", opts.clip_eps, "Propensity clipping threshold");
}

Dataset load_from_opts(const DataOpts& opts, ColumnSchema* schema_out) {
  ColumnSchema schema;
  schema.outcome = opts.y_col;
  schema.treatment = opts.a_col;
  schema.z = opts.z_col;
  if (opts.x_cols.empty()) {
    const CsvTable table = read_csv(opts.data);
    for (const auto& name : table.header) {
      if (name != opts.y_col && name != opts.a_col) schema.covariates.push_back(name);
    }
  } else {
    schema.covariates = split_list(opts.x_cols);
  }
  if (schema_out) *schema_out = schema;
  return load_dataset(opts.data, schema,
                      opts.z_discrete ? ZKind::discrete : ZKind::continuous);
}

EstimatorConfig build_estimator_config(const EstimatorOpts& opts, int p) {
  EstimatorConfig cfg;
  cfg.tag = parse_estimator_tag(opts.estimator);
  cfg.match.m = opts.m;
  cfg.match.metric = parse_metric(opts.metric);
  cfg.match.standardize = opts.standardize;
  if (opts.kernel == "gaussian") {
    cfg.kernel = KernelKind::gaussian;
  } else if (opts.kernel == "epanechnikov") {
    cfg.kernel = KernelKind::epanechnikov;
  } else {
    throw UsageError("unknown kernel '" + opts.kernel + "'");
  }
  if (opts.bandwidth == "rot") {
    cfg.bandwidth = BandwidthMethod::rule_of_thumb();
  } else {
    char* end = nullptr;
    const double h = std::strtod(opts.bandwidth.c_str(), &end);
    if (end == opts.bandwidth.c_str() || *end != '\0' || !(h > 0)) {
      throw UsageError("--bandwidth must be 'rot' or a positive number");
    }
    cfg.bandwidth = BandwidthMethod::fixed(h);
  }
  if (!opts.propensity_spec.empty()) {
    cfg.propensity_spec = DesignSpec::parse(opts.propensity_spec, p);
  }
  if (!opts.outcome_spec.empty()) {
    cfg.outcome_spec = DesignSpec::parse(opts.outcome_spec, p);
  }
  cfg.k_folds = opts.k_folds;
  cfg.clip_eps = opts.clip_eps;
  return cfg;
}

void append_common_header(std::vector<std::string>& lines, const DataOpts& d,
                          const ColumnSchema& schema, const EstimatorOpts& e,
                          const std::string& grid) {
  lines.push_back("data=" + d.data);
  lines.push_back("y_col=" + schema.outcome);
  lines.push_back("a_col=" + schema.treatment);
  std::string xs;
  for (const auto& name : schema.covariates) {
    if (!xs.empty()) xs += ",";
    xs += name;
  }
  lines.push_back("x_cols=" + xs);
  lines.push_back("z_col=" + schema.z);
  lines.push_back(std::string("z_kind=") + (d.z_discrete ? "discrete" : "continuous"));
  lines.push_back("grid=" + grid);
  lines.push_back("estimator=" + e.estimator);
  lines.push_back("m=" + std::to_string(e.m));
  lines.push_back("metric=" + e.metric);
  lines.push_back(std::string("standardize=") + (e.standardize ? "1" : "0"));
  lines.push_back("kernel=" + e.kernel);
  lines.push_back("bandwidth=" + e.bandwidth);
  lines.push_back("propensity_spec=" + e.propensity_spec);
  lines.push_back("outcome_spec=" + e.outcome_spec);
  lines.push_back("k_folds=" + std::to_string(e.k_folds));
  lines.push_back("clip_eps=" + format_g17(e.clip_eps));
}

int cmd_estimate(const DataOpts& dopts, const EstimatorOpts& eopts,
                 const std::string& grid_text, std::optional<uint64_t> seed,
                 const std::string& out_path) {
  const EvaluationGrid grid = parse_grid(grid_text);
  ColumnSchema schema;
  const Dataset d = load_from_opts(dopts, &schema);
  EstimatorConfig cfg = build_estimator_config(eopts, d.p);
  if (cfg.tag == EstimatorTag::match_bc && !seed) {
    throw UsageError("--seed is required for match_bc (cross-fitting)");
  }
  if (seed) cfg.seed = *seed;

  const GateCurve curve = estimate_gate(d, grid, cfg);
  std::vector<std::string> header{"gatekit estimate"};
  append_common_header(header, dopts, schema, eopts, grid_text);
  header.push_back("seed=" + (seed ? std::to_string(*seed) : std::string()));
  save_curve(curve, out_path, header);
  return 0;
}

int cmd_ci(const DataOpts& dopts, const EstimatorOpts& eopts,
           const std::string& grid_text, uint64_t seed, double r, int reps,
           double level, bool rescale, int threads, const std::string& out_path) {
  const EvaluationGrid grid = parse_grid(grid_text);
  ColumnSchema schema;
  const Dataset d = load_from_opts(dopts, &schema);
  EstimatorConfig cfg = build_estimator_config(eopts, d.p);
  cfg.seed = seed;

  SubsampleConfig sub;
  sub.r = r;
  sub.b_reps = reps;
  sub.level = level;
  sub.seed = seed;
  sub.rescale = rescale;
  const SubsampleCi ci = subsample_ci(d, cfg, grid, sub, threads);

  std::vector<std::string> header{"gatekit ci"};
  append_common_header(header, dopts, schema, eopts, grid_text);
  header.push_back("r=" + format_g17(r));
  header.push_back("reps=" + std::to_string(reps));
  header.push_back("level=" + format_g17(level));
  header.push_back(std::string("rescale=") + (rescale ? "1" : "0"));
  header.push_back("seed=" + std::to_string(seed));
  header.push_back("subsample_controls=" + std::to_string(ci.subsample_controls));
  header.push_back("subsample_treated=" + std::to_string(ci.subsample_treated));
  std::string missing;
  std::string unreliable;
  for (std::size_t k = 0; k < grid.points.size(); ++k) {
    if (!missing.empty()) missing += ",";
    missing += std::to_string(ci.missing_counts[k]);
    if (ci.unreliable[k]) {
      if (!unreliable.empty()) unreliable += ",";
      unreliable += format_g17(grid.points[k]);
    }
  }
  header.push_back("missing_replicates=" + missing);
  header.push_back("unreliable_points=" + unreliable);
  save_curve(ci.curve, out_path, header);
  return 0;
}

int cmd_simulate(const std::string& case_arg, bool drop_x2, int n, int reps,
                 uint64_t seed, const std::string& estimators_arg,
                 const std::string& grid_text, const EstimatorOpts& eopts,
                 bool with_ci, double ci_r, int ci_reps, double ci_level,
                 bool rescale, int threads, const std::string& out_tidy,
                 const std::string& out_wide) {
  const EvaluationGrid grid = parse_grid(grid_text);

  std::vector<std::string> case_ids;
  if (case_arg == "all") {
    for (int c = 1; c <= 12; ++c) case_ids.push_back("C" + std::to_string(c));
  } else {
    case_ids = split_list(case_arg);
  }

  std::vector<EstimatorTag> tags;
  if (estimators_arg == "all") {
    tags = {EstimatorTag::match, EstimatorTag::match_bc, EstimatorTag::ipw,
            EstimatorTag::or_reg, EstimatorTag::aipw, EstimatorTag::psr};
  } else {
    for (const auto& name : split_list(estimators_arg)) {
      tags.push_back(parse_estimator_tag(name));
    }
  }

  MonteCarloConfig mc;
  mc.n = n;
  mc.reps = reps;
  mc.master_seed = seed;
  mc.estimators = tags;
  // the per-case fit specs come from CaseSpec; the rest of the knobs apply
  EstimatorOpts shared = eopts;
  shared.estimator = "match";
  mc.base = build_estimator_config(shared, drop_x2 ? 2 : 3);
  mc.base.propensity_spec.reset();
  mc.base.outcome_spec.reset();
  mc.with_ci = with_ci;
  mc.ci.r = ci_r;
  mc.ci.b_reps = ci_reps;
  mc.ci.level = ci_level;
  mc.ci.rescale = rescale;
  mc.n_threads = threads;

  std::vector<SimulationReport> reports;
  for (const auto& id : case_ids) {
    const CaseSpec spec = CaseSpec::from_id(id, drop_x2);
    reports.push_back(run_monte_carlo(spec, grid, mc));
  }

  std::vector<std::string> header{"gatekit simulate"};
  header.push_back("case=" + case_arg);
  header.push_back(std::string("drop_x2=") + (drop_x2 ? "1" : "0"));
  header.push_back("n=" + std::to_string(n));
  header.push_back("reps=" + std::to_string(reps));
  header.push_back("estimators=" + estimators_arg);
  header.push_back("grid=" + grid_text);
  header.push_back("m=" + std::to_string(eopts.m));
  header.push_back("metric=" + eopts.metric);
  header.push_back(std::string("standardize=") + (eopts.standardize ? "1" : "0"));
  header.push_back("kernel=" + eopts.kernel);
  header.push_back("bandwidth=" + eopts.bandwidth);
  header.push_back("k_folds=" + std::to_string(eopts.k_folds));
  header.push_back("clip_eps=" + format_g17(eopts.clip_eps));
  header.push_back(std::string("with_ci=") + (with_ci ? "1" : "0"));
  if (with_ci) {
    header.push_back("ci_r=" + format_g17(ci_r));
    header.push_back("ci_reps=" + std::to_string(ci_reps));
    header.push_back("ci_level=" + format_g17(ci_level));
    header.push_back(std::string("ci_rescale=") + (rescale ? "1" : "0"));
  }
  header.push_back("seed=" + std::to_string(seed));
  write_tidy_csv(reports, out_tidy, header);
  write_wide_csv(reports, out_wide, header);
  return 0;
}

int cmd_report(const std::string& tidy_path, const std::string& out_mse,
               const std::string& out_ranking) {
  const std::vector<SimulationReport> reports = read_tidy_csv(tidy_path);
  const MetricsTables tables = compare_metrics(reports);
  std::vector<std::string> header{"gatekit report", "tidy=" + tidy_path};
  write_mse_table(tables, out_mse, header);
  write_ranking(tables, out_ranking, header);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GATE estimation from observational data: matching-based and "
               "competitor estimators, subsampling confidence intervals, and a "
               "Monte Carlo harness."};
  app.require_subcommand(1);
  // key=value config file; keys are <subcommand>.<flag> or live under a
  // [subcommand] section. Command-line flags take precedence.
  app.set_config("--config", "", "key=value config file (flags take precedence)");
  app.fallthrough();

  DataOpts dopts;
  EstimatorOpts eopts;
  std::string grid_text;
  std::optional<uint64_t> seed_opt;
  std::string out_path = "gate_curve.csv";
  int threads = 0;

  auto* est = app.add_subcommand("estimate", "Estimate a GATE curve on a CSV dataset");
  est->configurable(true);
  add_data_options(est, dopts);
  add_estimator_options(est, eopts, true);
  est->add_option("--grid", grid_text, "Evaluation grid start:end:step")->required();
  est->add_option("--seed", seed_opt,
                  "RNG seed (required for match_bc, which cross-fits)");
  est->add_option("--out", out_path, "Output curve CSV path");
  est->add_option("--threads", threads, "Worker cap (unused in estimate)");

  DataOpts ci_dopts;
  EstimatorOpts ci_eopts;
  std::string ci_grid;
  uint64_t ci_seed = 0;
  double ci_r = 2.0 / 3.0;
  int ci_reps = 200;
  double ci_level = 0.95;
  bool ci_rescale = true;
  std::string ci_out = "gate_ci.csv";
  int ci_threads = 0;

  auto* ci = app.add_subcommand("ci", "Estimate a curve with subsampling CIs");
  ci->configurable(true);
  add_data_options(ci, ci_dopts);
  add_estimator_options(ci, ci_eopts, true);
  ci->add_option("--grid", ci_grid, "Evaluation grid start:end:step")->required();
  ci->add_option("--r", ci_r, "Subsample-size exponent in (0,1)");
  ci->add_option("--reps", ci_reps, "Number of subsample replicates");
  ci->add_option("--level", ci_level, "Coverage level");
  ci->add_flag("--rescale,!--no-rescale", ci_rescale,
               "Politis-Romano rate rescaling (default on); off = raw percentile "
               "band of subsample estimates");
  ci->add_option("--seed", ci_seed, "RNG seed")->required();
  ci->add_option("--out", ci_out, "Output curve CSV path");
  ci->add_option("--threads", ci_threads, "Worker cap (0 = hardware)");

  std::string sim_case;
  bool sim_drop_x2 = false;
  int sim_n = 2000;
  int sim_reps = 1000;
  uint64_t sim_seed = 0;
  std::string sim_estimators = "all";
  std::string sim_grid = "-0.4:0.4:0.2";
  EstimatorOpts sim_eopts;
  bool sim_with_ci = false;
  double sim_ci_r = 2.0 / 3.0;
  int sim_ci_reps = 200;
  double sim_ci_level = 0.95;
  bool sim_rescale = true;
  int sim_threads = 0;
  std::string sim_out_tidy = "gate_tidy.csv";
  std::string sim_out_wide = "gate_wide.csv";

  auto* sim = app.add_subcommand("simulate", "Run the Monte Carlo study cases");
  sim->configurable(true);
  sim->add_option("--case", sim_case, "C1..C12, a comma list, or 'all'")->required();
  sim->add_flag("--drop-x2", sim_drop_x2, "Hide the categorical confounder from estimation");
  sim->add_option("--n", sim_n, "Sample size per replicate");
  sim->add_option("--reps", sim_reps, "Monte Carlo replicates");
  sim->add_option("--seed", sim_seed, "Master seed")->required();
  sim->add_option("--estimators", sim_estimators, "Comma list or 'all'");
  sim->add_option("--grid", sim_grid, "Evaluation grid start:end:step");
  add_estimator_options(sim, sim_eopts, false);
  sim->add_flag("--with-ci", sim_with_ci, "Also run subsampling CIs and report CP95");
  sim->add_option("--ci-r", sim_ci_r, "Subsample exponent for --with-ci");
  sim->add_option("--ci-reps", sim_ci_reps, "Subsample replicates for --with-ci");
  sim->add_option("--ci-level", sim_ci_level, "Coverage level for --with-ci");
  sim->add_flag("--rescale,!--no-rescale", sim_rescale, "CI rate rescaling (default on)");
  sim->add_option("--threads", sim_threads, "Worker cap (0 = hardware)");
  sim->add_option("--out-tidy", sim_out_tidy, "Tidy report CSV path");
  sim->add_option("--out-wide", sim_out_wide, "Wide (table-layout) report CSV path");

  std::string rep_tidy;
  std::string rep_mse = "gate_mse.csv";
  std::string rep_ranking = "gate_ranking.csv";
  auto* rep = app.add_subcommand("report", "Build MSE and ranking tables from a tidy report");
  rep->add_option("--tidy", rep_tidy, "Tidy report CSV from simulate")->required();
  rep->add_option("--out-mse", rep_mse, "MSE table CSV path");
  rep->add_option("--out-ranking", rep_ranking, "Ranking CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error kind=UsageError exit=2: %s\n", e.what());
    return 2;
  }

  try {
    if (est->parsed()) {
      return cmd_estimate(dopts, eopts, grid_text, seed_opt, out_path);
    }
    if (ci->parsed()) {
      return cmd_ci(ci_dopts, ci_eopts, ci_grid, ci_seed, ci_r, ci_reps, ci_level,
                    ci_rescale, ci_threads, ci_out);
    }
    if (sim->parsed()) {
      return cmd_simulate(sim_case, sim_drop_x2, sim_n, sim_reps, sim_seed,
                          sim_estimators, sim_grid, sim_eopts, sim_with_ci, sim_ci_r,
                          sim_ci_reps, sim_ci_level, sim_rescale, sim_threads,
                          sim_out_tidy, sim_out_wide);
    }
    if (rep->parsed()) {
      return cmd_report(rep_tidy, rep_mse, rep_ranking);
    }
  } catch (const Error& e) {
    fail(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error kind=InternalError exit=3: %s\n", e.what());
    return 3;
  }
  return 0;
}
