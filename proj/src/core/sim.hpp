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

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "core/cfa.hpp"
#include "core/data.hpp"

namespace benchmap {

// Ground-truth generator parameters. Draw order is documented per generator
// and all draws run through the seeded inverse-CDF stream, so a spec plus a
// seed pins the data bit-for-bit.
struct CfaGenSpec {
  StructureKind kind = StructureKind::gfact;
  int n_models = 1000;
  std::vector<int> items_per_bench;
  Eigen::VectorXd loadings;    // primary loading per item
  Eigen::VectorXd general;     // general loading per item (bifactor family)
  Eigen::MatrixXd factor_cov;  // m x m; identity when empty
  Eigen::VectorXd tau;         // thresholds; zeros when empty
  std::vector<std::tuple<int, int, double>> resid_corr;  // injected residual correlations
  std::uint64_t seed = 1;

  int n_items() const;
  int n_benches() const { return static_cast<int>(items_per_bench.size()); }
  StructureSpec structure() const;
};

/// Uniform helper: primary loadings U(lo_f, hi_f), general U(lo_g, hi_g).
CfaGenSpec make_cfa_spec(StructureKind kind, int n_models, const std::vector<int>& ipb,
                         double lo_f, double hi_f, double lo_g, double hi_g,
                         std::uint64_t seed);

/// eta ~ N(0, Phi), y* = Lambda eta + eps, eps ~ N(0, Theta), y = 1[y* > tau].
/// Draw order: per model, eta components then the p residuals.
ResponseMatrix gen_cfa_data(const CfaGenSpec& spec);

struct IrtGenSpec {
  int n_models = 1000;
  std::vector<int> items_per_bench;
  Eigen::VectorXd a_general;   // per item, >= 0
  Eigen::VectorXd a_specific;  // per item, >= 0
  Eigen::VectorXd b;           // difficulties
  bool with_regression = false;
  Eigen::MatrixXd gamma;  // F x (K+1): rows intercept, x, then deployment flags
  int n_contributors = 0;
  double contrib_sd = 0.0;
  double x_lo = -1.0, x_hi = 1.0;
  double w_prob = 0.3;
  std::uint64_t seed = 1;

  int n_items() const;
  int n_benches() const { return static_cast<int>(items_per_bench.size()); }
};

IrtGenSpec make_irt_spec(int n_models, const std::vector<int>& ipb, double a_lo, double a_hi,
                         double b_sd, std::uint64_t seed);

struct IrtGenResult {
  ResponseMatrix rm;
  EcosystemMetadata md;        // filled when with_regression
  Eigen::MatrixXd theta_true;  // N x (K+1)
};

/// Bernoulli draws from the bifactor 2PL; theta from N(0, I) or, with
/// regression, theta = Gamma' z + u_contributor + e. Draw order: covariates
/// for all models, contributor effects, then per model theta and responses.
IrtGenResult gen_irt_data(const IrtGenSpec& spec);

struct GstudyGenSpec {
  int n_models = 500;
  int n_benches = 6;
  int levels_a = 10, levels_c = 20, levels_d = 4;
  double mu = 50.0;
  double beta = 0.0;
  std::map<std::string, double> var_intercept;  // keys A,B,C,D,AB,...,BCD
  std::map<std::string, double> var_slope;
  double resid_var = 1.0;
  double x_lo = -1.0, x_hi = 1.0;
  std::uint64_t seed = 1;
};

/// Scores mu + beta x + sum_S (u_S + v_S x) + eps over models x benchmarks.
/// Term effects are drawn from per-level counter streams so the result does
/// not depend on traversal order.
EcosystemMetadata gen_gstudy_scores(const GstudyGenSpec& spec);

/// y = intercept + slope * x + N(0, noise_sd), with a fraction of gross
/// outliers shifted by `outlier_shift`; used by the robust-line tests.
void gen_line_with_outliers(int n, double intercept, double slope, double noise_sd,
                            double outlier_frac, double outlier_shift, std::uint64_t seed,
                            std::vector<double>& x, std::vector<double>& y);

/// Parses the `simulate` genspec JSON, writes the same CSV formats the
/// ingest operations read plus truth.json; returns the truth JSON text.
std::string run_simulate(const std::string& genspec_json, const std::string& out_dir);

}  // namespace benchmap
