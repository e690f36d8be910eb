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

#include "core/cfa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/common.hpp"
#include "core/mathutil.hpp"

namespace benchmap {

namespace {

constexpr double kThetaFloor = 1e-4;
constexpr double kAvarFloor = 1e-8;

struct WeightedPair {
  int a, b;
  double s;  // observed tetrachoric correlation
  double w;  // 1 / avar
};

std::vector<WeightedPair> build_pairs(const TetraResult& tetra) {
  std::vector<WeightedPair> pairs;
  const int p = tetra.n_items();
  pairs.reserve(p * (p - 1) / 2);
  for (int a = 0; a < p; ++a) {
    for (int b = a + 1; b < p; ++b) {
      if (tetra.failed_pair(a, b)) continue;
      const double avar = std::max(tetra.avar(a, b), kAvarFloor);
      pairs.push_back({a, b, tetra.S(a, b), 1.0 / avar});
    }
  }
  return pairs;
}

double objective(const StructureSpec& spec, const Eigen::VectorXd& params,
                 const std::vector<WeightedPair>& pairs) {
  double f = 0.0;
  for (const auto& pr : pairs) {
    const double r = implied_sigma_entry(spec, params, pr.a, pr.b) - pr.s;
    f += pr.w * r * r;
  }
  return f;
}

void gradient(const StructureSpec& spec, const Eigen::VectorXd& params,
              const std::vector<WeightedPair>& pairs, Eigen::VectorXd& grad) {
  grad.setZero();
  std::vector<std::pair<int, double>> derivs;
  for (const auto& pr : pairs) {
    const double r = implied_sigma_entry(spec, params, pr.a, pr.b) - pr.s;
    const double c = 2.0 * pr.w * r;
    pair_derivatives(spec, params, pr.a, pr.b, derivs);
    for (const auto& [idx, d] : derivs) grad(idx) += c * d;
  }
}

// J' V J over the current parameters (diagonal DWLS weight matrix).
Eigen::MatrixXd dwls_information(const StructureSpec& spec, const Eigen::VectorXd& params,
                                 const std::vector<WeightedPair>& pairs) {
  const int q = static_cast<int>(params.size());
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(q, q);
  std::vector<std::pair<int, double>> derivs;
  for (const auto& pr : pairs) {
    pair_derivatives(spec, params, pr.a, pr.b, derivs);
    for (const auto& [i, di] : derivs)
      for (const auto& [j, dj] : derivs) info(i, j) += pr.w * di * dj;
  }
  return info;
}

double rank_auc(const std::vector<double>& pred, const std::vector<int>& label) {
  const std::size_t n = pred.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return pred[i] < pred[j]; });
  double rank_sum_pos = 0.0;
  long n_pos = 0, n_neg = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pred[order[j + 1]] == pred[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t t = i; t <= j; ++t) {
      if (label[order[t]] == 1) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      } else {
        ++n_neg;
      }
    }
    i = j + 1;
  }
  if (n_pos == 0 || n_neg == 0) return 0.5;
  const double u = rank_sum_pos - 0.5 * n_pos * (n_pos + 1.0);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

CfaFit fit_dwls(const StructureSpec& spec, const TetraResult& tetra, int n,
                const DwlsOptions& options) {
  spec.validate();
  require(tetra.n_items() == spec.n_items(), "E_VALIDATION",
          "tetrachoric matrix and structure disagree on item count");
  const auto pairs = build_pairs(tetra);
  require(!pairs.empty(), "E_VALIDATION", "no usable item pairs");

  CfaFit fit;
  fit.spec = spec;
  fit.n = n;
  fit.tau = tetra.tau;
  fit.n_pairs_used = static_cast<int>(pairs.size());

  const int q = spec.n_params();
  Eigen::VectorXd x = initial_params(spec);
  project_params(spec, x, kThetaFloor);

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(q, q);
  Eigen::VectorXd g(q), g_new(q);
  double f = objective(spec, x, pairs);
  gradient(spec, x, pairs, g);

  int iter = 0;
  bool converged = false;
  for (; iter < options.max_iter; ++iter) {
    // Projected-gradient stationarity measure.
    Eigen::VectorXd probe = x - g;
    project_params(spec, probe, kThetaFloor);
    if ((x - probe).lpNorm<Eigen::Infinity>() < options.grad_tol) {
      converged = true;
      break;
    }

    Eigen::VectorXd d = -(H * g);
    if (d.dot(g) > -1e-12 * d.norm() * g.norm()) {
      H.setIdentity();
      d = -g;
    }
    double step = 1.0;
    Eigen::VectorXd x_new = x;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = x + step * d;
      project_params(spec, x_new, kThetaFloor);
      f_new = objective(spec, x_new, pairs);
      const double decrease = g.dot(x_new - x);
      if (f_new <= f + 1e-4 * decrease || f_new < f - 1e-14) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    gradient(spec, x_new, pairs, g_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      // BFGS update of the inverse Hessian approximation.
      const Eigen::VectorXd Hy = H * y;
      const double yHy = y.dot(Hy);
      H += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
           (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }
    x = x_new;
    f = f_new;
    g = g_new;
  }
  fit.n_iter = iter;
  fit.converged = converged;

  canonicalize_signs(spec, x);
  fit.heywood = project_params(spec, x, kThetaFloor);

  if (spec.has_psi()) {
    // Elementwise boxes do not guarantee a PSD factor correlation block;
    // repair and refresh the solution when violated.
    Eigen::MatrixXd lambda, phi;
    factor_model(spec, x, lambda, phi);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(phi);
    if (es.eigenvalues().minCoeff() < 0.0) {
      nearest_pd_correlation(phi, 1e-6);
      const ParamLayout l = layout_of(spec);
      const int K = spec.n_benches;
      const int base = spec.kind == StructureKind::corrbifact ? 1 : 0;
      for (int k1 = 0; k1 < K; ++k1)
        for (int k2 = k1 + 1; k2 < K; ++k2)
          x(l.psi_index(k1, k2, K)) = phi(base + k1, base + k2);
      fit.psi_repaired = true;
    }
  }

  fit.params = x;
  factor_model(spec, x, fit.lambda, fit.phi);
  fit.theta.resize(spec.n_items());
  for (int j = 0; j < spec.n_items(); ++j)
    fit.theta(j) = std::max(1.0 - communality(spec, x, j), kThetaFloor);

  const double raw = objective(spec, x, pairs);
  double chi2_null = 0.0;
  for (const auto& pr : pairs) chi2_null += pr.w * pr.s * pr.s;

  // Mean correction from the weight matrix: with diagonal weights equal to
  // inverse asymptotic variances the factor reduces to
  // (pairs - rank(J'VJ)) / df; it departs from 1 only when the information
  // is rank deficient at the solution.
  const Eigen::MatrixXd info = dwls_information(spec, x, pairs);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
  const double eig_max = std::max(es.eigenvalues().maxCoeff(), 1e-30);
  int rank = 0;
  for (int i = 0; i < q; ++i)
    if (es.eigenvalues()(i) > 1e-10 * eig_max) ++rank;

  fit.df = fit.n_pairs_used - q;
  fit.df_null = fit.n_pairs_used;
  fit.scale_factor =
      fit.df > 0 ? (fit.n_pairs_used - rank) / static_cast<double>(fit.df) : 1.0;
  if (fit.scale_factor <= 0) fit.scale_factor = 1.0;
  fit.chi2 = raw / fit.scale_factor;
  fit.chi2_null = chi2_null;
  fit.discrepancy = fit.chi2 / n;
  fit.loglik_proxy = -0.5 * fit.chi2;
  fit.aic = fit.chi2 + 2.0 * q;
  fit.bic = fit.chi2 + q * std::log(static_cast<double>(n));

  Eigen::MatrixXd resid = Eigen::MatrixXd::Zero(spec.n_items(), spec.n_items());
  for (const auto& pr : pairs) {
    const double r = pr.s - implied_sigma_entry(spec, x, pr.a, pr.b);
    resid(pr.a, pr.b) = resid(pr.b, pr.a) = r;
  }
  fit.indices =
      fit_indices(fit.chi2, std::max(fit.df, 1), fit.chi2_null, fit.df_null, n, resid);
  return fit;
}

FitIndices fit_indices(double chi2, int df, double chi2_null, int df_null, int n,
                       const Eigen::MatrixXd& residuals) {
  require(df >= 1 && df_null >= 1, "E_VALIDATION", "fit_indices needs df >= 1");
  FitIndices ix;
  const double excess = std::max(chi2 - df, 0.0);
  ix.rmsea = std::sqrt(excess / (static_cast<double>(df) * std::max(n - 1, 1)));

  const double excess_null = std::max(chi2_null - df_null, 0.0);
  const double denom = std::max(excess_null, excess);
  ix.cfi = denom > 0.0 ? 1.0 - excess / denom : 1.0;

  const double null_ratio = chi2_null / df_null;
  if (null_ratio > 1.0) {
    ix.tli = (null_ratio - chi2 / df) / (null_ratio - 1.0);
    ix.tli = std::min(ix.tli, 1.0);
  } else {
    ix.tli = 1.0;
  }

  const int p = static_cast<int>(residuals.rows());
  double ss = 0.0;
  int count = 0;
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < a; ++b) {
      ss += residuals(a, b) * residuals(a, b);
      ++count;
    }
  }
  ix.srmr = count > 0 ? std::sqrt(ss / count) : 0.0;
  return ix;
}

Eigen::MatrixXd factor_scores(const CfaFit& fit, const ResponseMatrix& rm) {
  require(fit.converged, "E_NOT_CONVERGED", "factor scores require a converged fit");
  require(rm.n_items() == fit.spec.n_items(), "E_VALIDATION",
          "response matrix does not match the fitted item set");
  const int m = static_cast<int>(fit.lambda.cols());
  const int p = rm.n_items();

  Eigen::MatrixXd phi = fit.phi;
  Eigen::LLT<Eigen::MatrixXd> llt(phi);
  if (llt.info() != Eigen::Success) {
    phi += 1e-6 * Eigen::MatrixXd::Identity(m, m);
    llt.compute(phi);
  }
  const Eigen::MatrixXd phi_inv = llt.solve(Eigen::MatrixXd::Identity(m, m));

  Eigen::MatrixXd eta(rm.n_models(), m);
  for (int i = 0; i < rm.n_models(); ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    for (int it = 0; it < 50; ++it) {
      Eigen::VectorXd grad = -(phi_inv * e);
      Eigen::MatrixXd hess = -phi_inv;
      for (int j = 0; j < p; ++j) {
        const auto y = rm.values(i, j);
        if (y == kMissing) continue;
        double z = fit.lambda.row(j).dot(e) - fit.tau(j);
        z = std::clamp(z, -8.0, 8.0);
        const double pdf = norm_pdf(z);
        const double cdf = norm_cdf(z);
        const double u = (y == 1) ? pdf / cdf : -pdf / (1.0 - cdf);
        const double h = -u * (z + u);
        grad += u * fit.lambda.row(j).transpose();
        hess += h * fit.lambda.row(j).transpose() * fit.lambda.row(j);
      }
      if (grad.lpNorm<Eigen::Infinity>() < 1e-8) break;
      Eigen::VectorXd delta = (-hess).ldlt().solve(grad);
      if (!delta.allFinite()) break;
      // Backtrack on the Newton step if it overshoots.
      const double max_step = delta.lpNorm<Eigen::Infinity>();
      if (max_step > 3.0) delta *= 3.0 / max_step;
      e += delta;
    }
    eta.row(i) = e.transpose();
  }
  return eta;
}

OosResult oos_predict(const CfaFit& fit, const Eigen::MatrixXd& scores,
                      const ResponseMatrix& heldout, const Eigen::VectorXd& heldout_tau,
                      const std::vector<int>& bench_override) {
  require(heldout.n_items() >= 1, "E_VALIDATION", "empty held-out set");
  require(scores.rows() == heldout.n_models(), "E_VALIDATION",
          "score rows must match held-out models");
  require(bench_override.empty() ||
              static_cast<int>(bench_override.size()) == heldout.n_items(),
          "E_VALIDATION", "bench_override length mismatch");
  const int m = static_cast<int>(fit.lambda.cols());

  // Benchmark-mean training loading per factor (training bench labels).
  const int K = fit.spec.n_benches;
  Eigen::MatrixXd mean_loading = Eigen::MatrixXd::Zero(K, m);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
  for (int j = 0; j < fit.spec.n_items(); ++j) {
    mean_loading.row(fit.spec.bench_of[j]) += fit.lambda.row(j);
    counts(fit.spec.bench_of[j]) += 1.0;
  }
  for (int k = 0; k < K; ++k)
    if (counts(k) > 0) mean_loading.row(k) /= counts(k);

  std::vector<double> pred;
  std::vector<int> label;
  double abs_err = 0.0;
  for (int i = 0; i < heldout.n_models(); ++i) {
    for (int j = 0; j < heldout.n_items(); ++j) {
      const auto y = heldout.values(i, j);
      if (y == kMissing) continue;
      const int tb = bench_override.empty() ? heldout.bench_of[j] : bench_override[j];
      if (tb < 0 || tb >= K) continue;
      const double z = mean_loading.row(tb).dot(scores.row(i)) - heldout_tau(j);
      const double phat = norm_cdf(z);
      pred.push_back(phat);
      label.push_back(y);
      abs_err += std::abs(phat - y);
    }
  }
  require(!pred.empty(), "E_VALIDATION", "empty held-out set");
  OosResult res;
  res.n_cells = static_cast<int>(pred.size());
  res.auc = rank_auc(pred, label);
  res.mae = abs_err / res.n_cells;
  return res;
}

MiReport modification_indices(const CfaFit& fit, const TetraResult& tetra,
                              const std::vector<std::pair<int, int>>& candidates) {
  require(fit.converged, "E_NOT_CONVERGED", "modification indices require a converged fit");
  const auto pairs = build_pairs(tetra);
  const Eigen::MatrixXd info = dwls_information(fit.spec, fit.params, pairs);

  // Pseudo-inverse of the parameter information; rank deficiency at active
  // constraints is tolerated.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info);
  const double eig_max = std::max(es.eigenvalues().maxCoeff(), 1e-30);
  Eigen::VectorXd inv_eig = es.eigenvalues();
  for (int i = 0; i < inv_eig.size(); ++i)
    inv_eig(i) = inv_eig(i) > 1e-10 * eig_max ? 1.0 / inv_eig(i) : 0.0;
  const Eigen::MatrixXd info_pinv =
      es.eigenvectors() * inv_eig.asDiagonal() * es.eigenvectors().transpose();

  const int q = static_cast<int>(fit.params.size());
  MiReport report;
  std::vector<std::pair<int, double>> derivs;
  for (auto [a, b] : candidates) {
    require(a >= 0 && b >= 0 && a < fit.spec.n_items() && b < fit.spec.n_items() && a != b,
            "E_VALIDATION", "candidate pair out of range");
    if (a > b) std::swap(a, b);
    MiEntry e;
    e.a = a;
    e.b = b;
    e.bench_a = fit.spec.bench_of[a];
    e.bench_b = fit.spec.bench_of[b];
    if (tetra.failed_pair(a, b)) {
      e.flagged = true;
      report.entries.push_back(e);
      continue;
    }
    const double w = 1.0 / std::max(tetra.avar(a, b), kAvarFloor);
    const double resid = tetra.S(a, b) - implied_sigma_entry(fit.spec, fit.params, a, b);
    e.score = w * resid;

    Eigen::VectorXd j_row = Eigen::VectorXd::Zero(q);
    pair_derivatives(fit.spec, fit.params, a, b, derivs);
    for (const auto& [idx, d] : derivs) j_row(idx) = d;
    // I_{psi theta} = w * J_ab ; Schur complement of the full information.
    const double cross = w * w * j_row.dot(info_pinv * j_row);
    e.partial_info = w - cross;
    if (e.partial_info < 1e-12) {
      e.flagged = true;
      report.entries.push_back(e);
      continue;
    }
    e.mi = e.score * e.score / e.partial_info;
    e.epc = e.score / e.partial_info;
    e.sepc = e.epc / std::sqrt(fit.theta(a) * fit.theta(b));
    e.sepc = std::clamp(e.sepc, -1.0, 1.0);
    report.entries.push_back(e);
  }
  return report;
}

std::vector<std::pair<int, int>> top_residual_pairs(const CfaFit& fit,
                                                    const TetraResult& tetra, int max_pairs) {
  struct Cand {
    double abs_resid;
    int a, b;
  };
  std::vector<Cand> cands;
  for (int a = 0; a < fit.spec.n_items(); ++a) {
    for (int b = a + 1; b < fit.spec.n_items(); ++b) {
      if (tetra.failed_pair(a, b)) continue;
      const double r = tetra.S(a, b) - implied_sigma_entry(fit.spec, fit.params, a, b);
      cands.push_back({std::abs(r), a, b});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.abs_resid != y.abs_resid) return x.abs_resid > y.abs_resid;
    return std::make_pair(x.a, x.b) < std::make_pair(y.a, y.b);
  });
  if (static_cast<int>(cands.size()) > max_pairs) cands.resize(max_pairs);
  std::vector<std::pair<int, int>> out;
  out.reserve(cands.size());
  for (const auto& c : cands) out.emplace_back(c.a, c.b);
  return out;
}

namespace {

// Structure pairs with a proper parameter nesting (simple inside complex);
// everything else is compared with the information-criteria evidence ratio.
bool is_nested(StructureKind simple, StructureKind complex_) {
  using K = StructureKind;
  switch (simple) {
    case K::indepfact:
      return complex_ == K::hier2ord || complex_ == K::corrfact || complex_ == K::bifact ||
             complex_ == K::corrbifact;
    case K::gfact:
      return complex_ == K::bifact || complex_ == K::corrbifact;
    case K::corrfact:
      return complex_ == K::corrbifact;
    case K::bifact:
      return complex_ == K::corrbifact;
    default:
      return false;
  }
}

}  // namespace

ComparisonTable compare_structures(const std::vector<CfaFit>& fits) {
  require(fits.size() >= 2, "E_VALIDATION", "need at least two fits to compare");
  for (std::size_t i = 1; i < fits.size(); ++i) {
    require(fits[i].spec.n_items() == fits[0].spec.n_items() && fits[i].n == fits[0].n,
            "E_SUBSET_MISMATCH", "fits were not computed on the same item subset");
    require(fits[i].data_signature == fits[0].data_signature, "E_SUBSET_MISMATCH",
            "fits were not computed on the same item subset");
  }

  ComparisonTable table;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    for (std::size_t j = 0; j < fits.size(); ++j) {
      if (i == j) continue;
      // candidate: fits[i] simple, fits[j] complex (fewer df = more params)
      if (fits[i].df < fits[j].df) continue;
      StructureComparison cmp;
      cmp.simple = to_string(fits[i].spec.kind);
      cmp.complex_ = to_string(fits[j].spec.kind);
      cmp.nested = is_nested(fits[i].spec.kind, fits[j].spec.kind);
      cmp.delta_chi2 = std::max(fits[i].chi2 - fits[j].chi2, 0.0);
      cmp.delta_df = fits[i].df - fits[j].df;
      cmp.delta_bic = fits[j].bic - fits[i].bic;
      if (cmp.nested && cmp.delta_df >= 1) {
        cmp.p_value = chi2_sf(cmp.delta_chi2, cmp.delta_df);
        cmp.prefer_complex = cmp.p_value < 0.05;
      } else {
        cmp.nested = false;
        cmp.evidence_ratio = std::exp(-0.5 * cmp.delta_bic);
        cmp.prefer_complex = cmp.delta_bic < 0.0;
      }
      table.pairs.push_back(cmp);
    }
  }

  table.metrics = {"rmsea", "cfi", "tli", "srmr", "aic", "bic", "loglik"};
  const int nf = static_cast<int>(fits.size());
  table.ranks.resize(nf, static_cast<int>(table.metrics.size()));
  for (const auto& f : fits) table.structures.push_back(to_string(f.spec.kind));
  for (std::size_t mi = 0; mi < table.metrics.size(); ++mi) {
    std::vector<double> desirability(nf);
    for (int i = 0; i < nf; ++i) {
      const CfaFit& f = fits[i];
      double v = 0;
      const std::string& metric = table.metrics[mi];
      if (metric == "rmsea") v = -f.indices.rmsea;
      else if (metric == "cfi") v = f.indices.cfi;
      else if (metric == "tli") v = f.indices.tli;
      else if (metric == "srmr") v = -f.indices.srmr;
      else if (metric == "aic") v = -f.aic;
      else if (metric == "bic") v = -f.bic;
      else v = f.loglik_proxy;
      desirability[i] = v;
    }
    for (int i = 0; i < nf; ++i) {
      int below = 0;
      for (int j = 0; j < nf; ++j)
        if (desirability[j] < desirability[i]) ++below;
      table.ranks(i, static_cast<int>(mi)) = 100.0 * below / (nf - 1);
    }
  }
  return table;
}

}  // namespace benchmap
