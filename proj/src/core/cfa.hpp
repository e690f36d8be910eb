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
#include <string>
#include <vector>

#include "core/structures.hpp"
#include "core/tetra.hpp"

namespace benchmap {

struct FitIndices {
  double rmsea = 0, cfi = 0, tli = 0, srmr = 0;
};

struct CfaFit {
  StructureSpec spec;
  Eigen::VectorXd params;
  Eigen::VectorXd theta;   // derived residual variances, floored at 1e-4
  Eigen::VectorXd tau;     // thresholds fixed at the tetrachoric estimates
  Eigen::MatrixXd lambda;  // p x m
  Eigen::MatrixXd phi;     // m x m

  double discrepancy = 0;  // F; the test statistic is chi2 = n * F
  double chi2 = 0, chi2_null = 0;
  int df = 0, df_null = 0;
  double scale_factor = 1.0;
  double loglik_proxy = 0, aic = 0, bic = 0;
  FitIndices indices;
  int n = 0;
  int n_pairs_used = 0;
  bool converged = false;
  bool heywood = false;
  bool psi_repaired = false;
  int n_iter = 0;
  std::uint64_t data_signature = 0;  // set by campaigns to guard comparisons
};

struct DwlsOptions {
  int max_iter = 500;
  double grad_tol = 1e-6;
};

CfaFit fit_dwls(const StructureSpec& spec, const TetraResult& tetra, int n,
                const DwlsOptions& options = {});

FitIndices fit_indices(double chi2, int df, double chi2_null, int df_null, int n,
                       const Eigen::MatrixXd& residuals);

/// MAP latent scores under the latent-response model, one Newton solve per
/// model. Rows of the result align with rm's models.
Eigen::MatrixXd factor_scores(const CfaFit& fit, const ResponseMatrix& rm);

struct OosResult {
  double auc = 0, mae = 0;
  int n_cells = 0;
};

/// Held-out prediction: lambda of an unseen item is the benchmark-mean
/// training loading per factor; probability Phi(lambda~' eta - tau_j).
/// `bench_override` maps held-out items into the fit's bench space (used by
/// the permutation control); empty = use the held-out matrix's own benches.
OosResult oos_predict(const CfaFit& fit, const Eigen::MatrixXd& scores,
                      const ResponseMatrix& heldout, const Eigen::VectorXd& heldout_tau,
                      const std::vector<int>& bench_override = {});

struct MiEntry {
  int a = 0, b = 0;
  int bench_a = 0, bench_b = 0;
  double score = 0;         // U_psi
  double partial_info = 0;  // Schur complement I_{psi psi . theta}
  double mi = 0;
  double epc = 0;
  double sepc = 0;
  bool flagged = false;  // singular partial information
};

struct MiReport {
  std::vector<MiEntry> entries;
};

/// Score/Lagrange-multiplier statistics for freeing residual covariances
/// fixed at zero, with EPC and SEPC effect sizes.
MiReport modification_indices(const CfaFit& fit, const TetraResult& tetra,
                              const std::vector<std::pair<int, int>>& candidates);

/// Largest-|residual| candidate pairs (default MI candidate rule).
std::vector<std::pair<int, int>> top_residual_pairs(const CfaFit& fit,
                                                    const TetraResult& tetra, int max_pairs);

struct StructureComparison {
  std::string simple, complex_;
  bool nested = false;
  double delta_chi2 = 0;
  int delta_df = 0;
  double p_value = 1.0;        // nested pairs
  double delta_bic = 0;        // complex minus simple
  double evidence_ratio = 0;   // exp(-delta_bic / 2), pseudo-LRT
  bool prefer_complex = false;
};

struct ComparisonTable {
  std::vector<StructureComparison> pairs;
  // metric -> per-fit percent rank (0..100), higher = more desirable
  std::vector<std::string> metrics;
  std::vector<std::string> structures;
  Eigen::MatrixXd ranks;  // structures x metrics
};

ComparisonTable compare_structures(const std::vector<CfaFit>& fits);

}  // namespace benchmap
