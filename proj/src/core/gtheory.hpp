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
#include <set>
#include <string>
#include <vector>

#include "core/data.hpp"
#include "core/mixed.hpp"

namespace benchmap {

// The 14 random terms of the four-facet crossed design (the four-way ABCD
// term is absorbed into the residual).
const std::vector<std::string>& gstudy_term_names();

// Per-observation facet labels for the model-benchmark score table, plus the
// covariate; one observation per leaderboard score row.
struct FacetDesign {
  std::vector<std::string> a, b, c, d;
  Eigen::VectorXd y;
  Eigen::VectorXd x;

  int n_obs() const { return static_cast<int>(y.size()); }
  std::vector<std::string> term_labels(const std::string& term) const;
};

FacetDesign build_facet_design(const EcosystemMetadata& md,
                               const FacetCompositions& comp = {});

/// Eq.-style crossed G-study with intercept-only random terms for all 14
/// members of the power set; reports sigma^2_S and the shares p_S.
MixedFit gstudy_base(const EcosystemMetadata& md, const FacetCompositions& comp = {});
MixedFit gstudy_base(const FacetDesign& design);

/// Random-slopes extension: fixed beta * x plus uncorrelated (intercept,
/// slope) pairs for every term.
MixedFit gstudy_slopes(const EcosystemMetadata& md, const FacetCompositions& comp = {});
MixedFit gstudy_slopes(const FacetDesign& design);

/// Shares p_S = sigma^2_S / (sum + resid); slope-model shares pool intercept
/// and slope variance per term before normalizing.
std::map<std::string, double> variance_shares(const MixedFit& fit);

struct ScalingMetrics {
  double snr_beta = 0;
  double r_beta = 0;
  std::map<std::string, double> psi;  // per term, slope-variance share
  double cv_beta = 0;
  double omega_x = 0;
  double omega_x_minus_b = 0;
  double omega_size_all = 0;
  double beta = 0;
  double total_slope_variance = 0;
  bool snr_infinite = false;  // zero total slope variance
};

/// Every reliability metric of the slope model: SNR, R_beta, PSI_S (= H_S),
/// CV_beta and the three Omega shares.
ScalingMetrics scaling_metrics(const MixedFit& fit, double var_x, double mean_x);

/// Relative G coefficient for ranking over n_B benchmarks: object-of-
/// measurement variance over itself plus benchmark-interaction error.
double g_coefficient(const MixedFit& fit, const std::set<std::string>& object_terms, int n_b);

}  // namespace benchmap
