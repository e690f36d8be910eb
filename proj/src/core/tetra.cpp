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

#include "core/tetra.hpp"

#include <algorithm>
#include <cmath>

#include "core/bvn.hpp"
#include "core/common.hpp"
#include "core/mathutil.hpp"
#include "core/threads.hpp"

namespace benchmap {

namespace {

constexpr double kRhoClamp = 0.999;

struct CellProbs {
  double p11, p10, p01, p00;
};

CellProbs cell_probs(double tau1, double tau2, double rho) {
  const double p1 = 1.0 - norm_cdf(tau1);
  const double p2 = 1.0 - norm_cdf(tau2);
  double p11 = bvn_upper(tau1, tau2, rho);
  p11 = std::clamp(p11, 1e-14, 1.0 - 1e-14);
  CellProbs c;
  c.p11 = p11;
  c.p10 = std::max(p1 - p11, 1e-14);
  c.p01 = std::max(p2 - p11, 1e-14);
  c.p00 = std::max(1.0 - p1 - p2 + p11, 1e-14);
  return c;
}

double loglik(const PairCounts& n, double tau1, double tau2, double rho) {
  const CellProbs c = cell_probs(tau1, tau2, rho);
  return n.n11 * std::log(c.p11) + n.n10 * std::log(c.p10) + n.n01 * std::log(c.p01) +
         n.n00 * std::log(c.p00);
}

// d loglik / d rho. Uses Plackett's identity: d p11 / d rho = bvn_pdf.
double score(const PairCounts& n, double tau1, double tau2, double rho) {
  const CellProbs c = cell_probs(tau1, tau2, rho);
  const double d = bvn_pdf(tau1, tau2, rho);
  return d * (n.n11 / c.p11 - n.n10 / c.p10 - n.n01 / c.p01 + n.n00 / c.p00);
}

}  // namespace

Eigen::VectorXd estimate_thresholds(const ResponseMatrix& rm) {
  Eigen::VectorXd tau(rm.n_items());
  for (int j = 0; j < rm.n_items(); ++j) {
    int n = 0, ones = 0;
    for (int i = 0; i < rm.n_models(); ++i) {
      const auto v = rm.values(i, j);
      if (v == kMissing) continue;
      ++n;
      ones += v;
    }
    require(n > 0, "E_DEGENERATE_ITEM", "item '" + rm.item_ids[j] + "' has no responses");
    require(ones > 0 && ones < n, "E_DEGENERATE_ITEM",
            "item '" + rm.item_ids[j] + "' is degenerate (all 0 or all 1)");
    const double phat = static_cast<double>(ones) / n;
    tau(j) = norm_quantile(1.0 - phat);
  }
  return tau;
}

PairEstimate tetrachoric_pair(const PairCounts& counts) {
  PairCounts n = counts;
  require(n.n11 + n.n10 > 0 && n.n01 + n.n00 > 0 && n.n11 + n.n01 > 0 && n.n10 + n.n00 > 0,
          "E_ZERO_MARGIN", "2x2 table has a zero margin");
  if (n.n11 == 0 || n.n10 == 0 || n.n01 == 0 || n.n00 == 0) {
    n.n11 += 0.5;
    n.n10 += 0.5;
    n.n01 += 0.5;
    n.n00 += 0.5;
  }
  const double total = n.total();
  const double p1 = (n.n11 + n.n10) / total;
  const double p2 = (n.n11 + n.n01) / total;
  PairEstimate est;
  est.tau1 = norm_quantile(1.0 - p1);
  est.tau2 = norm_quantile(1.0 - p2);

  auto g = [&](double rho) { return score(n, est.tau1, est.tau2, rho); };

  const double lo = -kRhoClamp, hi = kRhoClamp;
  double glo = g(lo), ghi = g(hi);
  double rho;
  if (glo <= 0.0 && ghi <= 0.0) {
    rho = lo;  // likelihood decreasing everywhere
    est.boundary = true;
  } else if (glo >= 0.0 && ghi >= 0.0) {
    rho = hi;
    est.boundary = true;
  } else {
    // Bracketing secant/bisection hybrid on the score; the log-likelihood is
    // unimodal in rho so the sign change is unique. Start at the cos-pi
    // odds-ratio approximation.
    double a = lo, b = hi, ga = glo, gb = ghi;
    const double odds = (n.n11 * n.n00) / (n.n10 * n.n01);
    rho = std::clamp(std::cos(M_PI / (1.0 + std::sqrt(odds))), -0.98, 0.98);
    for (int iter = 0; iter < 200; ++iter) {
      double gr = g(rho);
      if (std::abs(gr) < 1e-12 * total || (b - a) < 1e-13) break;
      if ((ga < 0.0) == (gr < 0.0)) {
        a = rho;
        ga = gr;
      } else {
        b = rho;
        gb = gr;
      }
      double next = rho - gr * (b - a) / (gb - ga);  // secant-ish step
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      rho = next;
    }
  }
  est.rho = std::clamp(rho, -kRhoClamp, kRhoClamp);

  // Observed information of the profile likelihood via central differences
  // of the analytic score.
  const double h = 1e-5;
  const double r0 = std::clamp(est.rho, lo + h, hi - h);
  const double curvature = (g(r0 + h) - g(r0 - h)) / (2.0 * h);
  est.avar = 1.0 / std::max(-curvature, 1e-8);
  return est;
}

TetraResult tetrachoric_matrix(const ResponseMatrix& rm, int jobs) {
  const int p = rm.n_items();
  require(p >= 2, "E_VALIDATION", "tetrachoric matrix needs at least 2 items");

  TetraResult res;
  res.S = Eigen::MatrixXd::Identity(p, p);
  res.avar = Eigen::MatrixXd::Zero(p, p);
  res.n_eff_pair = Eigen::MatrixXd::Zero(p, p);
  res.failed_pair.setConstant(p, p, false);
  res.tau = Eigen::VectorXd::Zero(p);
  res.degenerate_item.assign(p, false);

  int n_ok = 0;
  for (int j = 0; j < p; ++j) {
    int n = 0, ones = 0;
    for (int i = 0; i < rm.n_models(); ++i) {
      const auto v = rm.values(i, j);
      if (v == kMissing) continue;
      ++n;
      ones += v;
    }
    if (n == 0 || ones == 0 || ones == n) {
      res.degenerate_item[j] = true;
    } else {
      res.tau(j) = norm_quantile(1.0 - static_cast<double>(ones) / n);
      ++n_ok;
    }
  }
  require(n_ok >= 2, "E_VALIDATION", "fewer than 2 non-degenerate items");

  struct Pair {
    int a, b;
  };
  std::vector<Pair> pairs;
  pairs.reserve(p * (p - 1) / 2);
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b) pairs.push_back({a, b});

  std::vector<PairEstimate> out(pairs.size());
  std::vector<double> pair_n(pairs.size(), 0.0);
  std::vector<char> ok(pairs.size(), 0);
  parallel_for(static_cast<int>(pairs.size()), jobs, [&](int idx) {
    const int a = pairs[idx].a, b = pairs[idx].b;
    if (res.degenerate_item[a] || res.degenerate_item[b]) return;
    PairCounts c;
    for (int i = 0; i < rm.n_models(); ++i) {
      const auto va = rm.values(i, a), vb = rm.values(i, b);
      if (va == kMissing || vb == kMissing) continue;
      if (va == 1 && vb == 1) c.n11 += 1;
      else if (va == 1) c.n10 += 1;
      else if (vb == 1) c.n01 += 1;
      else c.n00 += 1;
    }
    pair_n[idx] = c.total();
    if (c.total() < 4) return;
    try {
      out[idx] = tetrachoric_pair(c);
      ok[idx] = 1;
    } catch (const Error&) {
      // flagged below
    }
  });

  for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
    const int a = pairs[idx].a, b = pairs[idx].b;
    res.n_eff_pair(a, b) = res.n_eff_pair(b, a) = pair_n[idx];
    if (ok[idx]) {
      res.S(a, b) = res.S(b, a) = out[idx].rho;
      res.avar(a, b) = res.avar(b, a) = out[idx].avar;
    } else {
      res.failed_pair(a, b) = res.failed_pair(b, a) = true;
      res.S(a, b) = res.S(b, a) = 0.0;
      res.avar(a, b) = res.avar(b, a) = 0.0;
      ++res.n_failed_pairs;
    }
  }
  require(res.n_failed_pairs <= static_cast<int>(pairs.size()) / 10, "E_TETRA_FAILURES",
          std::to_string(res.n_failed_pairs) + " of " + std::to_string(pairs.size()) +
              " item pairs failed tetrachoric estimation");

  res.repaired = nearest_pd_correlation(res.S);
  return res;
}

bool nearest_pd_correlation(Eigen::MatrixXd& S, double min_eig) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  if (eig.eigenvalues().minCoeff() >= min_eig) return false;
  Eigen::MatrixXd M = S;
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e(M);
    if (e.eigenvalues().minCoeff() >= min_eig) break;
    Eigen::VectorXd d = e.eigenvalues().cwiseMax(min_eig * 1.5);
    M = e.eigenvectors() * d.asDiagonal() * e.eigenvectors().transpose();
    Eigen::VectorXd scale = M.diagonal().cwiseSqrt().cwiseInverse();
    M = scale.asDiagonal() * M * scale.asDiagonal();
    M = 0.5 * (M + M.transpose());
    M.diagonal().setOnes();
  }
  S = M;
  return true;
}

}  // namespace benchmap
