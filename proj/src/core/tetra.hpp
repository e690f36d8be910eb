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

#include "core/data.hpp"

namespace benchmap {

// 2x2 table of a pair of binary items; n11 counts both-correct.
struct PairCounts {
  double n11 = 0, n10 = 0, n01 = 0, n00 = 0;

  double total() const { return n11 + n10 + n01 + n00; }
};

struct PairEstimate {
  double rho = 0.0;
  double avar = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  bool boundary = false;  // estimate hit the +/-0.999 clamp
};

// Pairwise tetrachoric correlation matrix with per-entry asymptotic
// variances; the input S of the DWLS discrepancy.
struct TetraResult {
  Eigen::MatrixXd S;           // p x p, unit diagonal
  Eigen::VectorXd tau;         // p thresholds
  Eigen::MatrixXd avar;        // p x p asymptotic variances (diag 0)
  Eigen::MatrixXd n_eff_pair;  // pairwise complete counts
  std::vector<bool> degenerate_item;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> failed_pair;
  bool repaired = false;  // nearest-PD repair was applied
  int n_failed_pairs = 0;

  int n_items() const { return static_cast<int>(S.rows()); }
};

/// tau_j = Phi^-1(1 - phat_j) over non-missing responses. Fails on a
/// degenerate item (all 0 or all 1).
Eigen::VectorXd estimate_thresholds(const ResponseMatrix& rm);

/// Maximum-likelihood tetrachoric correlation of one 2x2 table with
/// thresholds fixed at the margins. Zero cells get the +0.5 continuity
/// correction; a zero margin is an error. |rho| is clamped at 0.999.
PairEstimate tetrachoric_pair(const PairCounts& counts);

/// Pairwise-complete assembly over all item pairs; S is nearest-PD-repaired
/// (eigenvalue clipping at 1e-6, rescale to unit diagonal) when indefinite.
/// Individual pair failures are flagged, not fatal, unless >10% of pairs fail.
TetraResult tetrachoric_matrix(const ResponseMatrix& rm, int jobs = 0);

/// Eigenvalue clipping + rescale to unit diagonal until min eigenvalue >= 1e-6.
/// Returns true if a repair was needed.
bool nearest_pd_correlation(Eigen::MatrixXd& S, double min_eig = 1e-6);

}  // namespace benchmap
