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

// Test-only oracles, deliberately independent of the implementation paths
// they check: plain quadrature instead of the production BVN integral, EM
// instead of MH-RM, O(n^2) rank statistics instead of the fast routines.

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "core/data.hpp"

namespace benchmap::oracle {

/// P(Z1 > tau1, Z2 > tau2) under a standard bivariate normal with
/// correlation rho, by tensor-product Gauss-Legendre quadrature of the
/// density over the truncated quadrant.
double bvn_upper_rect(double tau1, double tau2, double rho);

/// 2x2 cell probabilities from the rectangle integrals.
void bvn_cell_probs(double tau1, double tau2, double rho, double& p11, double& p10,
                    double& p01, double& p00);

struct Em2plResult {
  Eigen::VectorXd a, b;
  int n_iter = 0;
  bool converged = false;
};

/// Unidimensional 2PL via Bock-Aitkin EM with Gauss-Hermite quadrature and a
/// N(0,1) latent prior. P(y=1|t) = logistic(a t - b).
Em2plResult fit_2pl_em(const ResponseMatrix& rm, int max_iter = 500, double tol = 1e-6);

/// O(n^2) tie-corrected Kendall tau-b by direct pair counting.
double kendall_tau_b_bruteforce(const std::vector<double>& x, const std::vector<double>& y);

/// Distance correlation from fully materialized double-centered matrices.
double dcor_bruteforce(const std::vector<double>& x, const std::vector<double>& y);

/// Central finite-difference gradient of a scalar function.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h = 1e-6);

}  // namespace benchmap::oracle
