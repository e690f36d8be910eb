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
#include <utility>
#include <vector>

namespace benchmap {

// The six competing latent structures. Names are the exact strings used in
// CLI arguments and JSON reports.
enum class StructureKind { indepfact, gfact, hier2ord, corrfact, bifact, corrbifact };

const std::vector<std::string>& structure_names();
std::string to_string(StructureKind k);
StructureKind structure_from_string(const std::string& name);

// A latent-structure hypothesis instantiated for a concrete item set:
// loading masks follow bench_of, factor variances are fixed to 1 and
// thresholds come from the tetrachoric stage (not re-estimated). Residual
// variances are derived from unit diagonals (theta_j = 1 - communality_j).
struct StructureSpec {
  StructureKind kind = StructureKind::gfact;
  int n_benches = 0;
  std::vector<int> bench_of;  // per item
  // Residual covariances freed in addition to the base structure (used by
  // the MI-vs-refit comparison); each pair adds one parameter.
  std::vector<std::pair<int, int>> free_resid;

  int n_items() const { return static_cast<int>(bench_of.size()); }
  bool has_general() const {
    return kind == StructureKind::gfact || kind == StructureKind::bifact ||
           kind == StructureKind::corrbifact;
  }
  bool bifactor_family() const {
    return kind == StructureKind::bifact || kind == StructureKind::corrbifact;
  }
  bool has_psi() const {
    return kind == StructureKind::corrfact || kind == StructureKind::corrbifact;
  }
  /// Number of latent factors m (hier2ord counts g plus the K first-order).
  int n_factors() const;
  int n_params() const;

  void validate() const;
};

// Offsets of the parameter blocks inside the flat parameter vector:
// [item loadings (p)] [general loadings (p)] [psi off-diag] [gamma] [freed residuals].
struct ParamLayout {
  int p = 0;
  int off_load = 0;
  int off_general = -1;
  int off_psi = -1;
  int n_psi = 0;
  int off_gamma = -1;
  int n_gamma = 0;
  int off_resid = -1;
  int n_resid = 0;
  int total = 0;

  int psi_index(int k1, int k2, int K) const;  // k1 < k2
};

ParamLayout layout_of(const StructureSpec& spec);

Eigen::VectorXd initial_params(const StructureSpec& spec);

/// Projects onto the feasible set: |correlations| <= 0.99, |gamma| <= 0.999
/// and per-item communality <= 1 - theta_floor. Returns true if any
/// communality projection was active (Heywood flag).
bool project_params(const StructureSpec& spec, Eigen::VectorXd& params,
                    double theta_floor = 1e-4);

double communality(const StructureSpec& spec, const Eigen::VectorXd& params, int item);

/// Model-implied covariance of one off-diagonal pair (a, b).
double implied_sigma_entry(const StructureSpec& spec, const Eigen::VectorXd& params, int a,
                           int b);

/// Full model-implied matrix (unit diagonal by construction).
Eigen::MatrixXd implied_sigma(const StructureSpec& spec, const Eigen::VectorXd& params);

/// Nonzero partial derivatives of sigma_ab with respect to the parameters.
/// At most 7 entries per pair; appended as (param index, value).
void pair_derivatives(const StructureSpec& spec, const Eigen::VectorXd& params, int a, int b,
                      std::vector<std::pair<int, double>>& out);

/// Loading matrix (p x m) and factor covariance (m x m) for factor scoring.
void factor_model(const StructureSpec& spec, const Eigen::VectorXd& params,
                  Eigen::MatrixXd& lambda, Eigen::MatrixXd& phi);

/// Flips factor signs so every factor's mean loading is nonnegative.
void canonicalize_signs(const StructureSpec& spec, Eigen::VectorXd& params);

}  // namespace benchmap
