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
#include "gatekit/simulation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>

#include "gatekit/csv.hpp"
#include "gatekit/errors.hpp"
#include "gatekit/parallel.hpp"
#include "gatekit/rng.hpp"
#include "gatekit/stats.hpp"

namespace gatekit {

namespace {

double sigmoid(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

}  // namespace

double mechanism_propensity(Mechanism mech, double x1, double x2, double x3) {
  switch (mech) {
    case Mechanism::A:
      return sigmoid(0.5 * x1 * x1 + 0.25 * x2 * x2 - 0.125 * x3 * x3);
    case Mechanism::B:
      return sigmoid(8.0 * x1 * x1 + 0.5 * x2 * x2 - 1.25 * x3 * x3);
    case Mechanism::C:
      return sigmoid(5.0 * x1 + 0.25 * x2 - 0.125 * x3);
  }
  return 0.5;
}

double true_gate(Study study, double z) {
  switch (study) {
    case Study::I: return 2.0 * z * z;
    case Study::II: return z * (1.0 + 2.0 * z) * (1.0 + 2.0 * z) * (z - 1.0) * (z - 1.0);
    case Study::III: return std::cos(3.0 * z) * std::log(z + 2.0) * std::exp(z);
  }
  return 0.0;
}

CaseSpec CaseSpec::from_id(const std::string& id, bool drop_x2) {
  if (id.size() < 2 || (id[0] != 'C' && id[0] != 'c')) {
    throw UsageError("unknown case id '" + id + "' (expected C1..C12)");
  }
  int num = 0;
  for (std::size_t i = 1; i < id.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(id[i]))) {
      throw UsageError("unknown case id '" + id + "'");
    }
    num = num * 10 + (id[i] - '0');
  }
  if (num < 1 || num > 12) throw UsageError("case id out of range: '" + id + "'");

  CaseSpec spec;
  spec.case_id = "C" + std::to_string(num);
  spec.drop_x2 = drop_x2;
  const int block = (num - 1) / 3;  // 0: A, 1: B, 2: C, 3: B with squared fit
  spec.mechanism = block == 0 ? Mechanism::A : block == 2 ? Mechanism::C : Mechanism::B;
  spec.study = static_cast<Study>((num - 1) % 3);
  const int p = drop_x2 ? 2 : 3;
  spec.fit_propensity_spec =
      block == 3 ? DesignSpec::squares(p) : DesignSpec::main_effects(p);
  spec.fit_outcome_spec = DesignSpec::main_effects(p);
  return spec;
}

GeneratedCase generate_case(const CaseSpec& spec, int n, uint64_t seed) {
  if (n < 2) throw UsageError("n must be >= 2");
  Rng rng(seed);
  const int p = spec.drop_x2 ? 2 : 3;
  std::vector<double> y(n), z(n), x(static_cast<std::size_t>(n) * p);
  std::vector<int> a(n);
  std::vector<double> pi_true(n);
  for (int i = 0; i < n; ++i) {
    // Fixed draw order: cases with the same seed share covariates and noise.
    const double x1 = rng.uniform(-0.5, 0.5);
    const double x2 = std::min(std::floor(rng.uniform01() * 3.0), 2.0);
    const double x3 = rng.normal();
    const double u_treat = rng.uniform01();
    const double e0 = rng.normal();
    const double e1 = rng.normal();

    const double pi = mechanism_propensity(spec.mechanism, x1, x2, x3);
    const int ai = u_treat < pi ? 1 : 0;
    const double g = x2 + x1 * x2 + 0.5 * (x3 * x3 * x3 + x3);
    const double y0 = g + e0;
    const double y1 = g + true_gate(spec.study, x1) + e1;

    pi_true[i] = pi;
    a[i] = ai;
    y[i] = ai == 1 ? y1 : y0;
    z[i] = x1;
    x[static_cast<std::size_t>(i) * p + 0] = x1;
    if (spec.drop_x2) {
      x[static_cast<std::size_t>(i) * p + 1] = x3;
    } else {
      x[static_cast<std::size_t>(i) * p + 1] = x2;
      x[static_cast<std::size_t>(i) * p + 2] = x3;
    }
  }
  GeneratedCase out;
  out.data = make_dataset(std::move(y), std::move(a), std::move(x), std::move(z),
                          ZKind::continuous);
  out.true_propensity = std::move(pi_true);
  out.study = spec.study;
  return out;
}

namespace {

struct ReplicateResult {
  // [estimator][grid point]
  std::vector<std::vector<std::optional<double>>> estimates;
  std::vector<std::vector<std::optional<bool>>> covered;
  std::vector<bool> failed;
};

}  // namespace

SimulationReport run_monte_carlo(const CaseSpec& spec, const EvaluationGrid& grid,
                                 const MonteCarloConfig& mc) {
  if (mc.reps < 2) throw UsageError("reps must be >= 2");
  if (mc.estimators.empty()) throw UsageError("no estimators selected");
  const std::size_t g = grid.points.size();
  const std::size_t ne = mc.estimators.size();

  std::vector<double> tau(g);
  for (std::size_t k = 0; k < g; ++k) tau[k] = true_gate(spec.study, grid.points[k]);

  std::vector<ReplicateResult> results(mc.reps);
  parallel_for(mc.reps, mc.n_threads, [&](int r) {
    ReplicateResult& rr = results[r];
    rr.estimates.assign(ne, std::vector<std::optional<double>>(g));
    rr.covered.assign(ne, std::vector<std::optional<bool>>(g));
    rr.failed.assign(ne, false);

    const GeneratedCase gen =
        generate_case(spec, mc.n, derive_seed(mc.master_seed, r, kSeedStageData));
    EstimatorWorkspace ws;
    for (std::size_t e = 0; e < ne; ++e) {
      EstimatorConfig cfg = mc.base;
      cfg.tag = mc.estimators[e];
      cfg.propensity_spec = spec.fit_propensity_spec;
      cfg.outcome_spec = spec.fit_outcome_spec;
      cfg.seed = derive_seed(mc.master_seed, r, kSeedStageCrossFit);
      try {
        const GateCurve curve = estimate_gate(gen.data, grid, cfg, {}, &ws);
        rr.estimates[e] = curve.estimates;
      } catch (const Error&) {
        rr.failed[e] = true;
        continue;
      }
      if (mc.with_ci) {
        SubsampleConfig ci = mc.ci;
        ci.seed = derive_seed(mc.master_seed, r, kSeedStageCi);
        try {
          const SubsampleCi sci = subsample_ci(gen.data, cfg, grid, ci);
          for (std::size_t k = 0; k < g; ++k) {
            if (sci.curve.ci_lower[k] && sci.curve.ci_upper[k] && !sci.unreliable[k]) {
              rr.covered[e][k] =
                  *sci.curve.ci_lower[k] <= tau[k] && tau[k] <= *sci.curve.ci_upper[k];
            }
          }
        } catch (const Error&) {
          // CI failure leaves coverage cells empty for this replicate
        }
      }
    }
  });

  SimulationReport report;
  report.case_id = spec.case_id;
  report.n = mc.n;
  report.reps = mc.reps;
  report.seed = mc.master_seed;
  report.grid = grid;
  report.estimators.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    EstimatorReport& er = report.estimators[e];
    er.tag = mc.estimators[e];
    er.cells.resize(g);
    for (int r = 0; r < mc.reps; ++r) {
      if (results[r].failed[e]) ++er.failed_replicates;
    }
    double mse_sum = 0.0;
    double coverage_sum = 0.0;
    int coverage_points = 0;
    for (std::size_t k = 0; k < g; ++k) {
      std::vector<double> vals;
      vals.reserve(mc.reps);
      for (int r = 0; r < mc.reps; ++r) {
        const auto& est = results[r].estimates[e][k];
        if (est) vals.push_back(*est);
      }
      CellStats& cell = er.cells[k];
      cell.missing = mc.reps - static_cast<int>(vals.size());
      if (vals.size() >= 2) {
        cell.bias = mean(vals) - tau[k];
        cell.sd = sample_sd(vals);
        double se = 0.0;
        for (double v : vals) se += (v - tau[k]) * (v - tau[k]);
        cell.mse = se / static_cast<double>(vals.size());
      }
      mse_sum += cell.mse;
      if (mc.with_ci) {
        int covered = 0, counted = 0;
        for (int r = 0; r < mc.reps; ++r) {
          const auto& c = results[r].covered[e][k];
          if (c) {
            ++counted;
            covered += *c ? 1 : 0;
          }
        }
        if (counted > 0) {
          cell.coverage = static_cast<double>(covered) / counted;
          coverage_sum += *cell.coverage;
          ++coverage_points;
        }
      }
    }
    er.mse_avg = mse_sum / static_cast<double>(g);
    if (coverage_points > 0) {
      er.cp95 = coverage_sum / static_cast<double>(coverage_points);
    }
  }
  return report;
}

void write_tidy_csv(std::span<const SimulationReport> reports, const std::string& path,
                    const std::vector<std::string>& header_lines) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (const auto& line : header_lines) out << "# " << line << '\n';
  out << "case,estimator,z,bias,sd,mse,cp95,n,reps,seed\n";
  for (const auto& report : reports) {
    for (const auto& er : report.estimators) {
      for (std::size_t k = 0; k < report.grid.points.size(); ++k) {
        out << report.case_id << ',' << tag_name(er.tag) << ','
            << format_g17(report.grid.points[k]) << ',' << format_g17(er.cells[k].bias)
            << ',' << format_g17(er.cells[k].sd) << ',' << format_g17(er.cells[k].mse)
            << ',' << (er.cp95 ? format_g17(*er.cp95) : std::string()) << ','
            << report.n << ',' << report.reps << ',' << report.seed << '\n';
      }
    }
  }
}

void write_wide_csv(std::span<const SimulationReport> reports, const std::string& path,
                    const std::vector<std::string>& header_lines) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (const auto& line : header_lines) out << "# " << line << '\n';
  if (reports.empty()) return;
  out << "case,z";
  for (const auto& er : reports.front().estimators) {
    out << ',' << tag_name(er.tag) << "_bias," << tag_name(er.tag) << "_sd";
  }
  out << '\n';
  for (const auto& report : reports) {
    for (std::size_t k = 0; k < report.grid.points.size(); ++k) {
      out << report.case_id << ',' << format_g17(report.grid.points[k]);
      for (const auto& er : report.estimators) {
        out << ',' << format_g17(er.cells[k].bias) << ',' << format_g17(er.cells[k].sd);
      }
      out << '\n';
    }
  }
}

std::vector<SimulationReport> read_tidy_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const int c_case = table.column("case");
  const int c_est = table.column("estimator");
  const int c_z = table.column("z");
  const int c_bias = table.column("bias");
  const int c_sd = table.column("sd");
  const int c_mse = table.column("mse");
  const int c_cp95 = table.column("cp95");
  const int c_n = table.column("n");
  const int c_reps = table.column("reps");
  const int c_seed = table.column("seed");
  if (c_case < 0 || c_est < 0 || c_z < 0 || c_bias < 0 || c_sd < 0 || c_mse < 0) {
    throw SchemaError("tidy report is missing required columns in " + path);
  }

  // case id -> report index, preserving first-seen order
  std::vector<SimulationReport> reports;
  std::map<std::string, std::size_t> case_index;
  for (const auto& row : table.rows) {
    const std::string& id = row[c_case];
    if (!case_index.count(id)) {
      case_index[id] = reports.size();
      SimulationReport r;
      r.case_id = id;
      if (c_n >= 0) r.n = std::atoi(row[c_n].c_str());
      if (c_reps >= 0) r.reps = std::atoi(row[c_reps].c_str());
      if (c_seed >= 0) r.seed = std::strtoull(row[c_seed].c_str(), nullptr, 10);
      reports.push_back(std::move(r));
    }
    SimulationReport& rep = reports[case_index[id]];
    const EstimatorTag tag = parse_estimator_tag(row[c_est]);
    EstimatorReport* er = nullptr;
    for (auto& cand : rep.estimators) {
      if (cand.tag == tag) er = &cand;
    }
    if (!er) {
      rep.estimators.push_back({});
      er = &rep.estimators.back();
      er->tag = tag;
    }
    const double z = std::strtod(row[c_z].c_str(), nullptr);
    std::size_t k = 0;
    bool found = false;
    for (; k < rep.grid.points.size(); ++k) {
      if (rep.grid.points[k] == z) {
        found = true;
        break;
      }
    }
    if (!found) rep.grid.points.push_back(z);
    if (er->cells.size() <= k) er->cells.resize(k + 1);
    er->cells[k].bias = std::strtod(row[c_bias].c_str(), nullptr);
    er->cells[k].sd = std::strtod(row[c_sd].c_str(), nullptr);
    er->cells[k].mse = std::strtod(row[c_mse].c_str(), nullptr);
    if (c_cp95 >= 0 && !row[c_cp95].empty()) {
      er->cp95 = std::strtod(row[c_cp95].c_str(), nullptr);
    }
  }
  for (auto& rep : reports) {
    for (auto& er : rep.estimators) {
      er.cells.resize(rep.grid.points.size());
      double s = 0.0;
      for (const auto& cell : er.cells) s += cell.mse;
      er.mse_avg = s / static_cast<double>(er.cells.size());
    }
  }
  return reports;
}

MetricsTables compare_metrics(std::span<const SimulationReport> reports) {
  MetricsTables tables;
  for (const auto& report : reports) {
    for (const auto& er : report.estimators) {
      if (std::find(tables.estimators.begin(), tables.estimators.end(), er.tag) ==
          tables.estimators.end()) {
        tables.estimators.push_back(er.tag);
      }
    }
  }
  for (const auto& report : reports) {
    for (std::size_t k = 0; k < report.grid.points.size(); ++k) {
      MetricsTables::MseRow row;
      row.case_id = report.case_id;
      row.z = report.grid.points[k];
      row.mse.resize(tables.estimators.size());
      for (std::size_t e = 0; e < tables.estimators.size(); ++e) {
        for (const auto& er : report.estimators) {
          if (er.tag == tables.estimators[e]) row.mse[e] = er.cells[k].mse;
        }
      }
      tables.mse_rows.push_back(std::move(row));
    }
    // rank estimators by grid-averaged MSE, ties by report order
    std::vector<std::size_t> order(report.estimators.size());
    for (std::size_t e = 0; e < order.size(); ++e) order[e] = e;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return report.estimators[a].mse_avg < report.estimators[b].mse_avg;
    });
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const auto& er = report.estimators[order[pos]];
      tables.ranking.push_back(
          {report.case_id, static_cast<int>(pos) + 1, er.tag, er.mse_avg});
    }
  }
  return tables;
}

void write_mse_table(const MetricsTables& tables, const std::string& path,
                     const std::vector<std::string>& header_lines) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (const auto& line : header_lines) out << "# " << line << '\n';
  out << "case,z";
  for (EstimatorTag tag : tables.estimators) out << ',' << tag_name(tag);
  out << '\n';
  for (const auto& row : tables.mse_rows) {
    out << row.case_id << ',' << format_g17(row.z);
    for (const auto& value : row.mse) out << ',' << format_optional(value);
    out << '\n';
  }
}

void write_ranking(const MetricsTables& tables, const std::string& path,
                   const std::vector<std::string>& header_lines) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (const auto& line : header_lines) out << "# " << line << '\n';
  out << "case,rank,estimator,mse_avg\n";
  for (const auto& row : tables.ranking) {
    out << row.case_id << ',' << row.rank << ',' << tag_name(row.tag) << ','
        << format_g17(row.mse_avg) << '\n';
  }
}

}  // namespace gatekit
