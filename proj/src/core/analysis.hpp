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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/cfa.hpp"
#include "core/irt.hpp"
#include "core/mixed.hpp"

namespace benchmap {

struct CampaignConfig {
  int replications = 1;
  std::vector<int> items_per_bench;  // r_k; empty = single shared count
  int items_per_bench_default = 10;
  std::uint64_t seed = 1;
  std::vector<StructureKind> structures = {
      StructureKind::indepfact, StructureKind::gfact,    StructureKind::hier2ord,
      StructureKind::corrfact,  StructureKind::bifact,   StructureKind::corrbifact};
  bool permutation_control = false;
  double holdout_fraction = 0.2;  // item-level hold-out within the replication
  int mi_pairs = 200;
  int jobs = 0;
  MhrmConfig mhrm;

  void validate() const;
  std::vector<int> resolve_r_k(int n_benches) const;
};

// One row of fit_stats.csv: replication x structure x condition.
struct FitStatRow {
  int replication = 0;
  std::string structure;
  int randomized = 0;
  bool failed = false;
  double rmsea = 0, cfi = 0, tli = 0, srmr = 0;
  double chi2 = 0;
  int df = 0;
  double aic = 0, bic = 0, loglik = 0;
  double auc = 0, mae = 0;
  bool converged = false;
  bool heywood = false;
};

struct MiAggregateRow {
  int replication = 0;
  std::string structure;
  int bench_a = 0, bench_b = 0;
  int item_a = 0, item_b = 0;
  double mi = 0, sepc = 0;
};

struct CfaCampaignResult {
  std::vector<FitStatRow> rows;
  std::vector<MiAggregateRow> mi_rows;
  // iteration-wise percent ranks averaged over replications (structure x metric)
  std::vector<std::string> metrics;
  std::vector<std::string> structures;
  Eigen::MatrixXd mean_percent_rank;
  Eigen::MatrixXd median_by_metric;  // structure x metric medians (true condition)
  // permutation-contrast meta-regressions keyed by fit index (rmsea, cfi, ...)
  std::map<std::string, MetaRegressionResult> meta;
  int n_failed_replications = 0;
  int n_replications = 0;
};

/// Method-1 campaign: per replication sample items, fit every requested
/// structure (and optionally the permuted mapping), hold out items for
/// AUC/MAE, collect MI/SEPC and fit statistics.
CfaCampaignResult run_cfa_campaign(const ResponseMatrix& rm, const CampaignConfig& config);

struct DimensionAggregate {
  int dimension = 0;          // 0 = general
  std::string covariate;      // "x" or a deployment flag name
  Aggregate aggregate;
};

struct LatRegCampaignResult {
  std::vector<DimensionAggregate> scaling;     // x slopes per dimension
  std::vector<DimensionAggregate> covariates;  // deployment effects per dimension
  std::vector<double> contrib_share;           // median contributor variance share
  Eigen::MatrixXd theta_agg;     // N x (K+1) precision-weighted latent scores
  Eigen::MatrixXd theta_agg_se;  // 1 / sqrt(sum of weights)
  int n_failed_replications = 0;
  int n_replications = 0;
  double measurement_loglik = 0.0;  // mean across replications
  double regression_loglik = 0.0;
};

/// Method-3 campaign: measurement-only and regression bifactor IRT per
/// replication, IVW-aggregated scaling vector and covariate effects.
LatRegCampaignResult run_latreg_campaign(const ResponseMatrix& rm,
                                         const EcosystemMetadata& md,
                                         const CampaignConfig& config);

struct RankReport {
  double spearman = 0;
  double kendall = 0;
  double dcor = 0;
  double top1_retention = 0;
  double top_decile_retention = 0;
  double bottom1_retention = 0;
  int n = 0;
};

/// Spearman on percentile ranks, tie-corrected Kendall tau-b, distance
/// correlation on percentile ranks, and top/bottom retention fractions.
RankReport rank_compare(const std::vector<double>& baseline,
                        const std::vector<double>& adjusted);

struct RobustLine {
  double intercept = 0, slope = 0;
  double intercept_se = 0, slope_se = 0;
  double scale = 0;  // robust residual scale (MAD-based)
  int n_iter = 0;
};

/// Iteratively reweighted least squares with the Tukey biweight
/// (c = 4.685, MAD scale, 50 iterations).
RobustLine tukey_line(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingPlotData {
  std::vector<double> x;         // log10 size
  std::vector<double> y;         // log10 of the min-max scaled Phi-transformed score
  std::vector<std::string> group;
  RobustLine line;                         // pooled fit
  std::map<std::string, RobustLine> group_lines;
};

/// Latent scores go through Phi, min-max scaling to [1, 100], then log10;
/// the trend per group (and pooled) is the Tukey-biweight robust line.
ScalingPlotData scaling_plot_data(const std::vector<double>& scores,
                                  const std::vector<double>& x,
                                  const std::vector<std::string>& groups,
                                  bool scores_are_latent = true);

}  // namespace benchmap
