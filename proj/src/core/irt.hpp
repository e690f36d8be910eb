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
#include <vector>

#include "core/data.hpp"

namespace benchmap {

// Bifactor 2PL item parameters: each item discriminates on the general
// dimension and on its own benchmark's specific dimension.
struct IrtParams {
  Eigen::VectorXd a_general;   // >= 0
  Eigen::VectorXd a_specific;  // >= 0
  Eigen::VectorXd b;           // difficulties

  int n_items() const { return static_cast<int>(b.size()); }
};

/// P(y = 1 | theta) = sigmoid(a_j0 theta_0 + a_jk theta_{k(j)} - b_j);
/// theta has K+1 entries, dimension 0 is the general factor.
double irt_prob(const IrtParams& params, int item, int bench,
                const Eigen::VectorXd& theta);

struct MhrmConfig {
  int cycles = 5000;  // hard cap on RM cycles
  int burnin = 200;
  double gain_exponent = 0.75;
  double proposal_sd = 1.0;
  double target_acceptance = 0.35;  // adapted into [0.2, 0.5] during burn-in
  std::uint64_t seed = 1;
  int mh_steps = 5;  // proposals per model per cycle, one retained imputation
  double conv_tol = 1e-4;
  int conv_window = 30;
  int scoring_sweeps = 400;  // frozen-parameter pass for posteriors and SEs
  int jobs = 1;
  bool constrain_general_zero = false;  // unidimensional 2PL reduction
};

struct LatRegFit {
  IrtParams item;
  Eigen::VectorXd a_general_se, a_specific_se, b_se;

  bool with_regression = false;
  // Fixed effects on the latent dimensions; rows: intercept (fixed at 0 in
  // the centered parameterization), x, then the deployment flags.
  Eigen::MatrixXd gamma;     // F x (K+1)
  Eigen::MatrixXd gamma_se;  // F x (K+1)
  Eigen::VectorXd covariate_means;      // centering constants (x, w...)
  Eigen::VectorXd sigma_zeta;           // contributor variance per dimension
  Eigen::VectorXd sigma_zeta_se;

  Eigen::MatrixXd theta;     // N x (K+1) posterior means
  Eigen::MatrixXd theta_se;  // N x (K+1) posterior SDs

  double loglik = 0.0;  // Monte-Carlo estimate at the solution
  std::vector<double> loglik_trace;
  bool converged = false;
  int n_cycles = 0;
  double acceptance_rate = 0.0;
  double proposal_sd_final = 0.0;

  int n_benches = 0;
  std::vector<int> bench_of;
};

/// Metropolis-Hastings Robbins-Monro estimation of the bifactor 2PL, with an
/// optional contributor-clustered latent regression layer (Gibbs updates for
/// the contributor effects, Robbins-Monro for everything else).
LatRegFit fit_mhrm(const ResponseMatrix& rm, const EcosystemMetadata* md,
                   bool with_regression, const MhrmConfig& config);

struct ScalingVectorEntry {
  int dimension = 0;  // 0 = general
  double beta = 0.0;
  double se = 0.0;
};

/// The scaling vector: the x-covariate row of Gamma with standard errors.
std::vector<ScalingVectorEntry> extract_scaling_vector(const LatRegFit& fit);

struct AttenuationRow {
  double lambda = 0.0;
  double beta = 0.0;
  double ols_slope = 0.0;     // manifest-score regression, attenuated by lambda
  double latent_slope = 0.0;  // regression on the latent scores themselves
};

/// Monte-Carlo check that OLS on manifest scores recovers lambda*beta while
/// regression on the latent variable recovers beta.
std::vector<AttenuationRow> attenuation_demo(const std::vector<double>& lambda_k,
                                             const std::vector<double>& beta_k, int n,
                                             std::uint64_t seed = 12345);

}  // namespace benchmap
