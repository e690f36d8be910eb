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

#include "core/gtheory.hpp"

#include <cmath>
#include <limits>

#include "core/common.hpp"

namespace benchmap {

const std::vector<std::string>& gstudy_term_names() {
  static const std::vector<std::string> terms = {"A",  "B",  "C",  "D",   "AB",  "AC",  "AD",
                                                 "BC", "BD", "CD", "ABC", "ABD", "ACD", "BCD"};
  return terms;
}

std::vector<std::string> FacetDesign::term_labels(const std::string& term) const {
  std::vector<std::string> out(n_obs());
  for (int i = 0; i < n_obs(); ++i) {
    std::string lab;
    for (char f : term) {
      if (!lab.empty()) lab += '|';
      switch (f) {
        case 'A': lab += a[i]; break;
        case 'B': lab += b[i]; break;
        case 'C': lab += c[i]; break;
        case 'D': lab += d[i]; break;
        default: fail("E_TERM", "unknown facet letter in term '" + term + "'");
      }
    }
    out[i] = lab;
  }
  return out;
}

FacetDesign build_facet_design(const EcosystemMetadata& md, const FacetCompositions& comp) {
  require(!md.scores.empty(), "E_VALIDATION", "metadata carries no benchmark scores");
  const auto a_labels = md.facet_labels(comp.a);
  const auto c_labels = md.facet_labels(comp.c);
  const auto d_labels = md.facet_labels(comp.d);

  FacetDesign fd;
  const int n = static_cast<int>(md.scores.size());
  fd.y.resize(n);
  fd.x.resize(n);
  fd.a.resize(n);
  fd.b.resize(n);
  fd.c.resize(n);
  fd.d.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto& obs = md.scores[i];
    fd.y(i) = obs.value;
    fd.x(i) = md.x(obs.model);
    fd.a[i] = a_labels[obs.model];
    fd.b[i] = obs.bench;
    fd.c[i] = c_labels[obs.model];
    fd.d[i] = d_labels[obs.model];
  }
  return fd;
}

namespace {

MixedFit fit_gstudy(const FacetDesign& design, bool slopes) {
  for (const auto* facet : {&design.a, &design.b, &design.c, &design.d}) {
    std::set<std::string> levels(facet->begin(), facet->end());
    require(levels.size() >= 2, "E_FACET_LEVELS", "every facet needs at least 2 levels");
  }
  MixedSpec spec;
  spec.y = design.y;
  if (slopes) {
    spec.X.resize(design.n_obs(), 2);
    spec.X.col(0).setOnes();
    spec.X.col(1) = design.x;
    spec.fixed_names = {"(intercept)", "x"};
    spec.x_covariate = design.x;
  } else {
    spec.X.resize(design.n_obs(), 1);
    spec.X.col(0).setOnes();
    spec.fixed_names = {"(intercept)"};
  }
  for (const auto& term : gstudy_term_names()) {
    const auto labels = design.term_labels(term);
    spec.terms.push_back(make_term(term, labels, false));
    if (slopes) spec.terms.push_back(make_term(term, labels, true));
  }
  return fit_reml(spec);
}

}  // namespace

MixedFit gstudy_base(const FacetDesign& design) { return fit_gstudy(design, false); }

MixedFit gstudy_base(const EcosystemMetadata& md, const FacetCompositions& comp) {
  return gstudy_base(build_facet_design(md, comp));
}

MixedFit gstudy_slopes(const FacetDesign& design) { return fit_gstudy(design, true); }

MixedFit gstudy_slopes(const EcosystemMetadata& md, const FacetCompositions& comp) {
  require(build_facet_design(md, comp).x.allFinite(), "E_VALIDATION",
          "x covariate must be finite");
  return gstudy_slopes(build_facet_design(md, comp));
}

std::map<std::string, double> variance_shares(const MixedFit& fit) {
  std::map<std::string, double> pooled;
  double total = fit.sigma2;
  for (const auto& c : fit.components) {
    pooled[c.term] += c.variance;
    total += c.variance;
  }
  std::map<std::string, double> shares;
  for (const auto& [term, v] : pooled) shares[term] = total > 0 ? v / total : 0.0;
  shares["residual"] = total > 0 ? fit.sigma2 / total : 0.0;
  return shares;
}

ScalingMetrics scaling_metrics(const MixedFit& fit, double var_x, double mean_x) {
  ScalingMetrics m;
  int x_col = -1;
  for (std::size_t i = 0; i < fit.fixed_names.size(); ++i)
    if (fit.fixed_names[i] == "x") x_col = static_cast<int>(i);
  require(x_col >= 0, "E_VALIDATION", "scaling metrics need the slope model (fixed x)");
  m.beta = fit.beta(x_col);

  double slope_total = 0.0, intercept_total = 0.0, intercept_minus_b = 0.0;
  for (const auto& c : fit.components) {
    if (c.slope) {
      slope_total += c.variance;
    } else {
      intercept_total += c.variance;
      if (c.term != "B") intercept_minus_b += c.variance;
    }
  }
  m.total_slope_variance = slope_total;
  const double b2 = m.beta * m.beta;
  if (slope_total <= 0.0) {
    m.snr_infinite = b2 > 0.0;
    m.snr_beta = b2 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    m.r_beta = b2 > 0.0 ? 1.0 : 0.0;
    m.cv_beta = 0.0;
  } else {
    m.snr_beta = b2 / slope_total;
    m.r_beta = b2 / (b2 + slope_total);
    m.cv_beta = m.beta != 0.0 ? std::sqrt(slope_total) / std::abs(m.beta)
                              : std::numeric_limits<double>::infinity();
    for (const auto& c : fit.components)
      if (c.slope) m.psi[c.term] = c.variance / slope_total;
  }

  const double fixed_part = b2 * var_x;
  const double slope_part = (var_x + mean_x * mean_x) * slope_total;
  const double denom_x = fixed_part + intercept_total + fit.sigma2;
  m.omega_x = denom_x > 0 ? fixed_part / denom_x : 0.0;
  const double denom_mb = fixed_part + intercept_minus_b + fit.sigma2;
  m.omega_x_minus_b = denom_mb > 0 ? fixed_part / denom_mb : 0.0;
  const double denom_all = fixed_part + slope_part + intercept_total + fit.sigma2;
  m.omega_size_all = denom_all > 0 ? (fixed_part + slope_part) / denom_all : 0.0;
  return m;
}

double g_coefficient(const MixedFit& fit, const std::set<std::string>& object_terms, int n_b) {
  require(n_b >= 1, "E_VALIDATION", "n_B must be at least 1");
  double universe = 0.0, rel_error = 0.0;
  for (const auto& c : fit.components) {
    if (c.slope) continue;
    const bool has_b = c.term.find('B') != std::string::npos;
    if (object_terms.count(c.term)) {
      require(!has_b, "E_VALIDATION",
              "object terms must not interact with the benchmark facet");
      universe += c.variance;
    } else if (has_b && c.term != "B") {
      rel_error += c.variance / n_b;
    }
  }
  rel_error += fit.sigma2 / n_b;
  const double denom = universe + rel_error;
  return denom > 0 ? universe / denom : 1.0;
}

}  // namespace benchmap
