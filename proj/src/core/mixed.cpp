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

#include "core/mixed.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "core/common.hpp"

namespace benchmap {

RandomTerm make_term(const std::string& name, const std::vector<std::string>& labels,
                     bool slope) {
  RandomTerm term;
  term.name = name;
  term.slope = slope;
  std::map<std::string, int> index;
  term.levels.reserve(labels.size());
  for (const auto& lab : labels) {
    auto [it, inserted] = index.emplace(lab, term.n_levels);
    if (inserted) ++term.n_levels;
    term.levels.push_back(it->second);
  }
  return term;
}

double MixedFit::component(const std::string& term, bool slope) const {
  for (const auto& c : components)
    if (c.term == term && c.slope == slope) return c.variance;
  fail("E_TERM", "no variance component for term '" + term + "'");
}

double MixedFit::total_intercept_variance() const {
  double s = 0.0;
  for (const auto& c : components)
    if (!c.slope) s += c.variance;
  return s;
}

double MixedFit::total_slope_variance() const {
  double s = 0.0;
  for (const auto& c : components)
    if (c.slope) s += c.variance;
  return s;
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Profiled REML machinery in the lme4 parameterization: u = Lambda * spherical,
// A(gamma) = Lambda' Z'Z Lambda + I factored sparsely, fixed effects and the
// residual variance eliminated in closed form.
struct RemlWork {
  const MixedSpec* spec = nullptr;
  int n = 0, pf = 0, q = 0;
  std::vector<int> col_offset;          // per term
  Eigen::SparseMatrix<double> ZtZ;      // q x q
  Eigen::MatrixXd ZtX;                  // q x pf
  Eigen::VectorXd Zty;                  // q
  Eigen::MatrixXd XtX;                  // pf x pf
  Eigen::VectorXd Xty;
  double yty = 0.0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  bool pattern_ready = false;

  struct Eval {
    double deviance = 0.0;
    double pwrss = 0.0;
    Eigen::VectorXd beta;
    Eigen::MatrixXd RXtRX;
    bool ok = false;
  };

  void init(const MixedSpec& s) {
    spec = &s;
    n = s.n_obs();
    pf = static_cast<int>(s.X.cols());
    col_offset.clear();
    q = 0;
    for (const auto& t : s.terms) {
      col_offset.push_back(q);
      q += t.n_levels;
    }
    // Z in triplet form: intercept terms contribute 1, slope terms x_i.
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * s.terms.size());
    for (std::size_t t = 0; t < s.terms.size(); ++t) {
      const auto& term = s.terms[t];
      require(static_cast<int>(term.levels.size()) == n, "E_VALIDATION",
              "random term '" + term.name + "' has wrong length");
      require(term.n_levels >= 2, "E_VALIDATION",
              "grouping factor '" + term.name + "' needs at least 2 levels");
      if (term.slope)
        require(spec->x_covariate.size() == n, "E_VALIDATION",
                "slope terms need the x covariate");
      for (int i = 0; i < n; ++i) {
        const double v = term.slope ? spec->x_covariate(i) : 1.0;
        trips.emplace_back(i, col_offset[t] + term.levels[i], v);
      }
    }
    Eigen::SparseMatrix<double> Z(n, q);
    Z.setFromTriplets(trips.begin(), trips.end());
    ZtZ = Eigen::SparseMatrix<double>(Z.transpose()) * Z;
    ZtX = Z.transpose() * spec->X;
    Zty = Z.transpose() * spec->y;
    XtX = spec->X.transpose() * spec->X;
    Xty = spec->X.transpose() * spec->y;
    yty = spec->y.squaredNorm();
  }

  // scale(t) column scaling = sqrt(gamma_term)
  Eigen::VectorXd column_scales(const Eigen::VectorXd& log_gamma) const {
    Eigen::VectorXd s(q);
    for (std::size_t t = 0; t < spec->terms.size(); ++t) {
      const double val = std::sqrt(std::exp(log_gamma(static_cast<int>(t))));
      s.segment(col_offset[t], spec->terms[t].n_levels).setConstant(val);
    }
    return s;
  }

  Eval evaluate(const Eigen::VectorXd& log_gamma, bool reml) {
    Eval ev;
    if (q == 0) {  // fixed-effects only: ordinary least squares
      Eigen::LLT<Eigen::MatrixXd> llt(XtX);
      require(llt.info() == Eigen::Success, "E_RANK_DEFICIENT",
              "fixed-effect design is rank deficient");
      ev.beta = llt.solve(Xty);
      ev.pwrss = yty - Xty.dot(ev.beta);
      ev.RXtRX = XtX;
      const double dfr = reml ? n - pf : n;
      ev.deviance = std::log(XtX.determinant()) * (reml ? 1.0 : 0.0) +
                    dfr * (1.0 + kLog2Pi + std::log(std::max(ev.pwrss, 1e-300) / dfr));
      ev.ok = true;
      return ev;
    }
    const Eigen::VectorXd s = column_scales(log_gamma);
    Eigen::SparseMatrix<double> A = ZtZ;
    for (int k = 0; k < A.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
        it.valueRef() *= s(it.row()) * s(it.col());
      }
    }
    Eigen::SparseMatrix<double> I(q, q);
    I.setIdentity();
    A = A + I;
    if (!pattern_ready) {
      solver.analyzePattern(A);
      pattern_ready = true;
    }
    solver.factorize(A);
    if (solver.info() != Eigen::Success) return ev;

    const Eigen::MatrixXd sZtX = s.asDiagonal() * ZtX;
    const Eigen::VectorXd sZty = s.asDiagonal() * Zty;
    const Eigen::MatrixXd AinvZtX = solver.solve(sZtX);
    const Eigen::VectorXd AinvZty = solver.solve(sZty);

    ev.RXtRX = XtX - sZtX.transpose() * AinvZtX;
    Eigen::LLT<Eigen::MatrixXd> llt(ev.RXtRX);
    if (llt.info() != Eigen::Success) return ev;
    ev.beta = llt.solve(Xty - sZtX.transpose() * AinvZty);

    // pwrss = |y - X beta - Z Lambda u|^2 + |u|^2 via the eliminated system.
    const double cz = sZty.dot(AinvZty);
    const Eigen::VectorXd rhs_x = Xty - sZtX.transpose() * AinvZty;
    ev.pwrss = yty - cz - rhs_x.dot(ev.beta);
    ev.pwrss = std::max(ev.pwrss, 1e-300);

    double logdet_A = 0.0;
    const auto& D = solver.vectorD();
    for (int i = 0; i < q; ++i) logdet_A += std::log(std::max(D(i), 1e-300));
    const double dfr = reml ? n - pf : n;
    double dev = logdet_A + dfr * (1.0 + kLog2Pi + std::log(ev.pwrss / dfr));
    if (reml) {
      double logdet_RX = 0.0;
      const Eigen::MatrixXd& Lx = llt.matrixLLT();
      for (int i = 0; i < pf; ++i) logdet_RX += 2.0 * std::log(std::max(Lx(i, i), 1e-300));
      dev += logdet_RX;
    }
    ev.deviance = dev;
    ev.ok = true;
    return ev;
  }
};

}  // namespace

MixedFit fit_reml(const MixedSpec& spec, const RemlOptions& options) {
  require(spec.n_obs() > static_cast<int>(spec.X.cols()), "E_VALIDATION",
          "need more observations than fixed parameters");
  require(spec.X.rows() == spec.n_obs(), "E_VALIDATION", "X row mismatch");

  RemlWork work;
  work.init(spec);

  MixedFit fit;
  fit.n_obs = work.n;
  fit.n_fixed = work.pf;
  fit.fixed_names = spec.fixed_names;

  const int m = static_cast<int>(spec.terms.size());
  Eigen::VectorXd lg = Eigen::VectorXd::Zero(m);  // log variance ratios
  auto project = [&](Eigen::VectorXd& v) {
    for (int i = 0; i < m; ++i)
      v(i) = std::clamp(v(i), options.log_ratio_lo, options.log_ratio_hi);
  };

  if (m == 0) {
    const auto ev = work.evaluate(lg, true);
    fit.beta = ev.beta;
    fit.sigma2 = ev.pwrss / (work.n - work.pf);
    fit.beta_se = (fit.sigma2 * ev.RXtRX.inverse()).diagonal().cwiseSqrt();
    fit.reml = ev.deviance;
    fit.converged = true;
    return fit;
  }

  auto deviance = [&](const Eigen::VectorXd& v) {
    const auto ev = work.evaluate(v, true);
    return ev.ok ? ev.deviance : 1e12;
  };
  auto num_gradient = [&](const Eigen::VectorXd& v, double f0, Eigen::VectorXd& g) {
    const double h = 1e-6;
    Eigen::VectorXd vv = v;
    for (int i = 0; i < m; ++i) {
      const double orig = vv(i);
      vv(i) = std::min(orig + h, options.log_ratio_hi + h);
      const double fp = deviance(vv);
      vv(i) = orig - h;
      const double fm = deviance(vv);
      vv(i) = orig;
      g(i) = (fp - fm) / (2.0 * h);
      (void)f0;
    }
  };

  double f = deviance(lg);
  Eigen::VectorXd g(m), g_new(m);
  num_gradient(lg, f, g);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(m, m);

  int iter = 0;
  bool converged = false;
  for (; iter < options.max_iter; ++iter) {
    Eigen::VectorXd probe = lg - g;
    project(probe);
    if ((lg - probe).lpNorm<Eigen::Infinity>() < options.grad_tol) {
      converged = true;
      break;
    }
    Eigen::VectorXd d = -(H * g);
    if (d.dot(g) > -1e-14 * d.norm() * g.norm()) {
      H.setIdentity();
      d = -g;
    }
    double step = 1.0;
    Eigen::VectorXd lg_new = lg;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      lg_new = lg + step * d;
      project(lg_new);
      f_new = deviance(lg_new);
      if (f_new <= f + 1e-4 * g.dot(lg_new - lg) || f_new < f - 1e-13) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || std::abs(f - f_new) < 1e-13 * (1.0 + std::abs(f))) {
      converged = (lg - (lg - g)).lpNorm<Eigen::Infinity>() < 1e-4 || iter > 0;
      break;
    }
    num_gradient(lg_new, f_new, g_new);
    const Eigen::VectorXd sv = lg_new - lg;
    const Eigen::VectorXd yv = g_new - g;
    const double sy = sv.dot(yv);
    if (sy > 1e-12) {
      const Eigen::VectorXd Hy = H * yv;
      const double yHy = yv.dot(Hy);
      H += ((sy + yHy) / (sy * sy)) * (sv * sv.transpose()) -
           (Hy * sv.transpose() + sv * Hy.transpose()) / sy;
    }
    lg = lg_new;
    f = f_new;
    g = g_new;
  }

  const auto ev = work.evaluate(lg, true);
  require(ev.ok, "E_NUMERIC", "REML evaluation failed at the solution");
  fit.n_iter = iter;
  fit.converged = converged;
  fit.reml = ev.deviance;
  fit.sigma2 = ev.pwrss / (work.n - work.pf);
  fit.beta = ev.beta;
  Eigen::LLT<Eigen::MatrixXd> llt(ev.RXtRX);
  fit.beta_se = (fit.sigma2 * llt.solve(Eigen::MatrixXd::Identity(work.pf, work.pf)))
                    .diagonal()
                    .cwiseSqrt();
  for (int t = 0; t < m; ++t) {
    VarianceComponent c;
    c.term = spec.terms[t].name;
    c.slope = spec.terms[t].slope;
    c.variance = std::exp(lg(t)) * fit.sigma2;
    if (c.variance < 1e-8 * fit.sigma2) fit.singular = true;
    fit.components.push_back(c);
  }
  return fit;
}

MetaRegressionResult fit_meta_regression(const std::vector<MetaObs>& rows) {
  require(!rows.empty(), "E_VALIDATION", "no rows for meta regression");
  std::set<std::string> sset;
  std::set<int> bset;
  bool any_rand = false;
  for (const auto& r : rows) {
    sset.insert(r.structure);
    bset.insert(r.bootstrap);
    if (r.randomized) any_rand = true;
  }
  MetaRegressionResult out;
  out.structures.assign(sset.begin(), sset.end());
  out.has_randomization = any_rand;
  const int ns = static_cast<int>(out.structures.size());
  const int n = static_cast<int>(rows.size());
  auto sidx = [&](const std::string& s) {
    return static_cast<int>(std::lower_bound(out.structures.begin(), out.structures.end(), s) -
                            out.structures.begin());
  };

  const int pf = any_rand ? 2 * ns : ns;
  MixedSpec spec;
  spec.y.resize(n);
  spec.X = Eigen::MatrixXd::Zero(n, pf);
  spec.x_covariate.resize(n);
  std::vector<std::string> boot_labels(n);
  for (int i = 0; i < n; ++i) {
    const auto& r = rows[i];
    spec.y(i) = r.value;
    const int s = sidx(r.structure);
    spec.X(i, s) = 1.0;
    if (any_rand && r.randomized) spec.X(i, ns + s) = 1.0;
    spec.x_covariate(i) = r.randomized ? 1.0 : 0.0;
    boot_labels[i] = "b" + std::to_string(r.bootstrap);
  }
  for (int s = 0; s < ns; ++s) spec.fixed_names.push_back("alpha:" + out.structures[s]);
  if (any_rand)
    for (int s = 0; s < ns; ++s) spec.fixed_names.push_back("beta:" + out.structures[s]);

  const bool multi_boot = bset.size() >= 2;
  if (multi_boot && static_cast<int>(rows.size()) > pf + 2) {
    spec.terms.push_back(make_term("bootstrap", boot_labels, false));
    if (any_rand) spec.terms.push_back(make_term("bootstrap", boot_labels, true));
  } else {
    out.fixed_only = true;
  }

  out.fit = fit_reml(spec);
  out.alpha.resize(ns);
  out.alpha_se.resize(ns);
  out.beta = Eigen::VectorXd::Zero(ns);
  out.beta_se = Eigen::VectorXd::Zero(ns);
  for (int s = 0; s < ns; ++s) {
    out.alpha(s) = out.fit.beta(s);
    out.alpha_se(s) = out.fit.beta_se(s);
    if (any_rand) {
      out.beta(s) = out.fit.beta(ns + s);
      out.beta_se(s) = out.fit.beta_se(ns + s);
    }
  }
  return out;
}

Aggregate ivw_aggregate(const std::vector<std::pair<double, double>>& estimates) {
  require(!estimates.empty(), "E_NO_VALID_ESTIMATES", "no estimates to aggregate");
  const int B = static_cast<int>(estimates.size());
  Aggregate agg;
  agg.estimates.resize(B);
  agg.ses.resize(B);
  agg.weights.resize(B);
  agg.fallback.assign(B, false);

  double min_valid_weight = std::numeric_limits<double>::infinity();
  int n_valid = 0;
  double sum_valid_w = 0.0;
  for (int b = 0; b < B; ++b) {
    const auto [xi, se] = estimates[b];
    agg.estimates(b) = xi;
    agg.ses(b) = se;
    if (std::isfinite(se) && se > 0.0 && std::isfinite(xi)) {
      const double w = 1.0 / (se * se);
      agg.weights(b) = w;
      min_valid_weight = std::min(min_valid_weight, w);
      sum_valid_w += w;
      ++n_valid;
    } else {
      agg.weights(b) = -1.0;  // resolved below
    }
  }
  require(n_valid >= 1, "E_NO_VALID_ESTIMATES", "no valid (finite, positive SE) estimates");
  agg.n_valid = n_valid;
  for (int b = 0; b < B; ++b) {
    if (agg.weights(b) < 0.0) {
      agg.weights(b) = 0.5 * min_valid_weight;
      agg.fallback[b] = true;
      if (!std::isfinite(agg.estimates(b))) agg.estimates(b) = 0.0;
    }
  }

  const double W = agg.weights.sum();
  agg.mean = agg.weights.dot(agg.estimates) / W;
  agg.se = 1.0 / std::sqrt(W);

  if (n_valid >= 2) {
    // Weighted between-replication variance minus the average within noise
    // (1 / mean weight over the valid replications).
    double num = 0.0;
    for (int b = 0; b < B; ++b) {
      const double d = agg.estimates(b) - agg.mean;
      num += agg.weights(b) * d * d;
    }
    const double wbar = sum_valid_w / n_valid;
    agg.tau2 = std::max(num / W - 1.0 / wbar, 0.0);
    agg.tau2_defined = true;
    const double b2 = agg.mean * agg.mean;
    agg.reliability = (b2 + agg.tau2) > 0.0 ? b2 / (b2 + agg.tau2) : 0.0;
  }
  return agg;
}

std::vector<double> percentile_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  require(n >= 2, "E_VALIDATION", "percentile ranks need at least 2 values");
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto below =
        std::lower_bound(sorted.begin(), sorted.end(), values[i]) - sorted.begin();
    out[i] = static_cast<double>(below) / (n - 1);
  }
  return out;
}

}  // namespace benchmap
