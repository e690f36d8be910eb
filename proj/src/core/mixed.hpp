/*
 * Copyright (c) 2026 benchmap contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace benchmap {

// One crossed random-effect term: a grouping factor contributing either
// random intercepts or random slopes on the shared covariate. Intercepts and
// slopes of the same factor are separate terms (constrained uncorrelated).
struct RandomTerm {
  std::string name;
  std::vector<int> levels;  // per-observation level index in [0, n_levels)
  int n_levels = 0;
  bool slope = false;
};

RandomTerm make_term(const std::string& name, const std::vector<std::string>& labels,
                     bool slope);

struct MixedSpec {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;  // fixed-effect design, first column usually intercept
  std::vector<std::string> fixed_names;
  Eigen::VectorXd x_covariate;  // slope covariate; required when any term has slope
  std::vector<RandomTerm> terms;

  int n_obs() const { return static_cast<int>(y.size()); }
};

struct VarianceComponent {
  std::string term;
  bool slope = false;
  double variance = 0.0;
};

struct MixedFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd beta_se;
  std::vector<std::string> fixed_names;
  std::vector<VarianceComponent> components;
  double sigma2 = 0.0;  // residual variance
  double reml = 0.0;    // -2 * restricted log-likelihood
  bool converged = false;
  bool singular = false;  // some variance < 1e-8 * residual
  int n_iter = 0;
  int n_obs = 0;
  int n_fixed = 0;

  double component(const std::string& term, bool slope) const;
  double total_intercept_variance() const;
  double total_slope_variance() const;
};

struct RemlOptions {
  int max_iter = 200;
  double grad_tol = 1e-7;
  double log_ratio_lo = -18.0;  // variance ratios bounded below at exp(-18)
  double log_ratio_hi = 13.0;
};

/// Profiled REML over log variance ratios by quasi-Newton; the crossed
/// structure is handled through sparse normal equations (fill-reducing AMD
/// ordering). Singular fits are flagged, not failed.
MixedFit fit_reml(const MixedSpec& spec, const RemlOptions& options = {});

// One stacked bootstrap statistic for the meta-analytic regression.
struct MetaObs {
  int bootstrap = 0;
  std::string structure;
  int randomized = 0;  // 0 = true mapping, 1 = permuted
  double value = 0.0;
};

struct MetaRegressionResult {
  std::vector<std::string> structures;
  Eigen::VectorXd alpha, alpha_se;  // expected fit under true assignment
  Eigen::VectorXd beta, beta_se;    // randomization penalty per structure
  bool has_randomization = false;
  bool fixed_only = false;  // single bootstrap fallback
  MixedFit fit;
};

/// t_{b,s,r} = alpha_s + beta_s r + u_b + v_b r + eps with random intercept
/// and randomization slope per bootstrap.
MetaRegressionResult fit_meta_regression(const std::vector<MetaObs>& rows);

struct Aggregate {
  Eigen::VectorXd estimates;
  Eigen::VectorXd ses;
  Eigen::VectorXd weights;
  std::vector<bool> fallback;  // weight came from the degenerate-SE rule
  double mean = 0.0;           // IVW mean
  double se = 0.0;             // 1 / sqrt(sum of weights)
  double tau2 = 0.0;           // DerSimonian-Laird style, truncated at 0
  bool tau2_defined = false;   // needs >= 2 valid replications
  double reliability = 0.0;    // mean^2 / (mean^2 + tau2)
  int n_valid = 0;
};

/// Inverse-variance weighted aggregation with the half-minimum-weight
/// fallback for missing/zero/infinite standard errors.
Aggregate ivw_aggregate(const std::vector<std::pair<double, double>>& estimates);

/// rank_i = #{x < v_i} / (n - 1); ties share the same count-below.
std::vector<double> percentile_ranks(const std::vector<double>& values);

}  // namespace benchmap
