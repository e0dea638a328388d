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
#include "gatekit/nuisance.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "gatekit/errors.hpp"
#include "gatekit/rng.hpp"

namespace gatekit {

namespace {

double sigmoid(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

int parse_column_ref(const std::string& tok, int p) {
  if (tok.size() < 2 || (tok[0] != 'x' && tok[0] != 'X')) {
    throw UsageError("bad design term '" + tok + "' (expected x<j>)");
  }
  int idx = 0;
  for (std::size_t i = 1; i < tok.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(tok[i]))) {
      throw UsageError("bad design term '" + tok + "'");
    }
    idx = idx * 10 + (tok[i] - '0');
  }
  if (idx < 1 || idx > p) {
    throw UsageError("design term '" + tok + "' references column out of range 1.." +
                     std::to_string(p));
  }
  return idx - 1;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

DesignSpec DesignSpec::main_effects(int p) {
  DesignSpec spec;
  for (int j = 0; j < p; ++j) {
    spec.terms.push_back({DesignTerm::Kind::identity, j, 0});
  }
  return spec;
}

DesignSpec DesignSpec::squares(int p) {
  DesignSpec spec;
  for (int j = 0; j < p; ++j) {
    spec.terms.push_back({DesignTerm::Kind::square, j, 0});
  }
  return spec;
}

DesignSpec DesignSpec::parse(const std::string& text, int p) {
  DesignSpec spec;
  std::stringstream ss(text);
  std::string raw;
  while (std::getline(ss, raw, ',')) {
    const std::string tok = trim(raw);
    if (tok.empty()) throw UsageError("empty design term in '" + text + "'");
    const auto star = tok.find('*');
    const auto caret = tok.find('^');
    if (star != std::string::npos) {
      const int j = parse_column_ref(trim(tok.substr(0, star)), p);
      const int k = parse_column_ref(trim(tok.substr(star + 1)), p);
      spec.terms.push_back({DesignTerm::Kind::product, j, k});
    } else if (caret != std::string::npos) {
      if (trim(tok.substr(caret + 1)) != "2") {
        throw UsageError("only squares are supported, got '" + tok + "'");
      }
      const int j = parse_column_ref(trim(tok.substr(0, caret)), p);
      spec.terms.push_back({DesignTerm::Kind::square, j, 0});
    } else {
      spec.terms.push_back({DesignTerm::Kind::identity, parse_column_ref(tok, p), 0});
    }
  }
  if (spec.terms.empty()) throw UsageError("design spec '" + text + "' has no terms");
  return spec;
}

std::string DesignSpec::to_string() const {
  std::string out;
  for (const auto& t : terms) {
    if (!out.empty()) out += ",";
    switch (t.kind) {
      case DesignTerm::Kind::identity: out += "x" + std::to_string(t.j + 1); break;
      case DesignTerm::Kind::square: out += "x" + std::to_string(t.j + 1) + "^2"; break;
      case DesignTerm::Kind::product:
        out += "x" + std::to_string(t.j + 1) + "*x" + std::to_string(t.k + 1);
        break;
    }
  }
  return out.empty() ? "1" : out;
}

void DesignSpec::check(int p) const {
  for (const auto& t : terms) {
    if (t.j < 0 || t.j >= p || (t.kind == DesignTerm::Kind::product && (t.k < 0 || t.k >= p))) {
      throw UsageError("design term references column outside 1.." + std::to_string(p));
    }
  }
}

Eigen::MatrixXd build_design(const Dataset& d, const DesignSpec& spec) {
  spec.check(d.p);
  const int intercept = spec.intercept ? 1 : 0;
  Eigen::MatrixXd design(d.n, intercept + static_cast<int>(spec.terms.size()));
  if (spec.intercept) design.col(0).setOnes();
  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    const auto& term = spec.terms[t];
    for (int i = 0; i < d.n; ++i) {
      double v = d.x_at(i, term.j);
      if (term.kind == DesignTerm::Kind::square) v *= v;
      if (term.kind == DesignTerm::Kind::product) v *= d.x_at(i, term.k);
      design(i, intercept + static_cast<int>(t)) = v;
    }
  }
  return design;
}

namespace {

void check_rank(const Eigen::MatrixXd& design) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) {
    throw RankError("design matrix is rank deficient (rank " +
                    std::to_string(qr.rank()) + " of " + std::to_string(design.cols()) + ")");
  }
}

}  // namespace

LogisticFit fit_logistic(const Eigen::MatrixXd& design, std::span<const int> a,
                         double tol, int max_iter) {
  if (static_cast<Eigen::Index>(a.size()) != design.rows()) {
    throw DimensionError("treatment vector does not match the design matrix");
  }
  if (!(tol > 0)) throw UsageError("tol must be positive");
  check_rank(design);

  LogisticFit fit;
  fit.beta = Eigen::VectorXd::Zero(design.cols());
  Eigen::VectorXd av(design.rows());
  for (Eigen::Index i = 0; i < av.size(); ++i) av[i] = a[i];

  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd eta = design * fit.beta;
    Eigen::VectorXd prob = eta.unaryExpr([](double e) { return sigmoid(e); });
    Eigen::VectorXd grad = design.transpose() * (av - prob);
    fit.iterations = it;
    if (grad.norm() <= tol) {
      // A vanishing gradient with every unit classified to within 1e-4 of
      // its label means the data are separated and the likelihood supremum
      // sits at infinity; report the iterate but not convergence.
      const double worst = (av - prob).cwiseAbs().maxCoeff();
      fit.converged = worst > 1e-4;
      return fit;
    }
    Eigen::VectorXd w = prob.array() * (1.0 - prob.array());
    Eigen::MatrixXd hess = design.transpose() * w.asDiagonal() * design;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success) break;
    Eigen::VectorXd step = ldlt.solve(grad);
    if (!step.allFinite()) break;
    fit.beta += step;
  }
  fit.iterations = max_iter;
  fit.converged = false;
  return fit;
}

Eigen::VectorXd fit_ols(const Eigen::MatrixXd& design, std::span<const double> y) {
  if (static_cast<Eigen::Index>(y.size()) != design.rows()) {
    throw DimensionError("response vector does not match the design matrix");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) {
    throw RankError("design matrix is rank deficient (rank " +
                    std::to_string(qr.rank()) + " of " + std::to_string(design.cols()) + ")");
  }
  Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  return qr.solve(yv);
}

PropensityFit estimate_propensity(const Dataset& d, const DesignSpec& spec,
                                  double clip_eps) {
  if (!(clip_eps > 0.0 && clip_eps < 0.5)) {
    throw UsageError("clip_eps must lie in (0, 0.5)");
  }
  const Eigen::MatrixXd design = build_design(d, spec);
  const LogisticFit fit = fit_logistic(design, d.a);
  const Eigen::VectorXd eta = design * fit.beta;
  PropensityFit out;
  out.converged = fit.converged;
  out.pi_hat.resize(d.n);
  for (int i = 0; i < d.n; ++i) {
    double pi = sigmoid(eta[i]);
    if (pi < clip_eps) {
      pi = clip_eps;
      ++out.clip_count;
    } else if (pi > 1.0 - clip_eps) {
      pi = 1.0 - clip_eps;
      ++out.clip_count;
    }
    out.pi_hat[i] = pi;
  }
  return out;
}

OutcomeFit fit_outcome_models(const Dataset& d, const DesignSpec& spec) {
  const Eigen::MatrixXd design = build_design(d, spec);
  OutcomeFit out;
  out.mu0_hat.resize(d.n);
  out.mu1_hat.resize(d.n);
  for (int arm = 0; arm < 2; ++arm) {
    const auto& rows = arm == 0 ? d.controls : d.treated;
    Eigen::MatrixXd sub(rows.size(), design.cols());
    Eigen::VectorXd ysub(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      sub.row(r) = design.row(rows[r]);
      ysub[r] = d.y[rows[r]];
    }
    const Eigen::VectorXd beta =
        fit_ols(sub, {ysub.data(), static_cast<std::size_t>(ysub.size())});
    const Eigen::VectorXd pred = design * beta;
    auto& mu = arm == 0 ? out.mu0_hat : out.mu1_hat;
    for (int i = 0; i < d.n; ++i) mu[i] = pred[i];
  }
  return out;
}

CrossFitOutcomes cross_fit_outcome_models(const Dataset& d, const DesignSpec& spec,
                                          int k_folds, uint64_t seed) {
  if (k_folds < 2) throw UsageError("k_folds must be >= 2");
  const Eigen::MatrixXd design = build_design(d, spec);

  CrossFitOutcomes out;
  out.fold_assignment.assign(d.n, 0);
  Rng rng(seed);
  const std::vector<int> perm = rng.permutation(d.n);
  for (int i = 0; i < d.n; ++i) out.fold_assignment[perm[i]] = i % k_folds;

  std::vector<int> cell(static_cast<std::size_t>(k_folds) * 2, 0);
  for (int i = 0; i < d.n; ++i) ++cell[out.fold_assignment[i] * 2 + d.a[i]];
  for (int fold = 0; fold < k_folds; ++fold) {
    for (int arm = 0; arm < 2; ++arm) {
      if (cell[fold * 2 + arm] == 0) {
        throw FoldError("fold " + std::to_string(fold) + ", arm " + std::to_string(arm) +
                        " is empty; retry with fewer folds");
      }
    }
  }

  out.mu0_hat.assign(d.n, 0.0);
  out.mu1_hat.assign(d.n, 0.0);
  for (int fold = 0; fold < k_folds; ++fold) {
    for (int arm = 0; arm < 2; ++arm) {
      std::vector<int> train;
      for (int i = 0; i < d.n; ++i) {
        if (out.fold_assignment[i] != fold && d.a[i] == arm) train.push_back(i);
      }
      if (train.empty()) {
        throw FoldError("fold " + std::to_string(fold) + ", arm " + std::to_string(arm) +
                        " has no training units; retry with fewer folds");
      }
      Eigen::MatrixXd sub(train.size(), design.cols());
      Eigen::VectorXd ysub(train.size());
      for (std::size_t r = 0; r < train.size(); ++r) {
        sub.row(r) = design.row(train[r]);
        ysub[r] = d.y[train[r]];
      }
      const Eigen::VectorXd beta =
          fit_ols(sub, {ysub.data(), static_cast<std::size_t>(ysub.size())});
      auto& mu = arm == 0 ? out.mu0_hat : out.mu1_hat;
      for (int i = 0; i < d.n; ++i) {
        if (out.fold_assignment[i] == fold) mu[i] = design.row(i) * beta;
      }
    }
  }
  return out;
}

}  // namespace gatekit
