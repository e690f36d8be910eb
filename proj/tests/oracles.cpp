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

#include "oracles.hpp"

#include <cmath>
#include <functional>

#include "core/mathutil.hpp"

namespace benchmap::oracle {

namespace {

// 64-point Gauss-Legendre nodes/weights on [-1, 1] (half shown, mirrored).
void gl64(std::vector<double>& nodes, std::vector<double>& weights) {
  static const double x[32] = {
      0.0243502926634244, 0.0729931217877990, 0.1214628192961206, 0.1696444204239928,
      0.2174236437400071, 0.2646871622087674, 0.3113228719902110, 0.3572201583376681,
      0.4022701579639916, 0.4463660172534641, 0.4894031457070530, 0.5312794640198946,
      0.5718956462026340, 0.6111553551723933, 0.6489654712546573, 0.6852363130542333,
      0.7198818501716109, 0.7528199072605319, 0.7839723589433414, 0.8132653151227975,
      0.8406292962525803, 0.8659993981540928, 0.8893154459951141, 0.9105221370785028,
      0.9295691721319396, 0.9464113748584028, 0.9610087996520538, 0.9733268277899110,
      0.9833362538846260, 0.9910133714767443, 0.9963401167719553, 0.9993050417357722};
  static const double w[32] = {
      0.0486909570091397, 0.0485754674415034, 0.0483447622348030, 0.0479993885964583,
      0.0475401657148303, 0.0469681828162100, 0.0462847965813144, 0.0454916279274181,
      0.0445905581637566, 0.0435837245293235, 0.0424735151236536, 0.0412625632426235,
      0.0399537411327203, 0.0385501531786156, 0.0370551285402400, 0.0354722132568824,
      0.0338051618371416, 0.0320579283548516, 0.0302346570724025, 0.0283396726142595,
      0.0263774697150547, 0.0243527025687109, 0.0222701738083833, 0.0201348231535302,
      0.0179517157756973, 0.0157260304760247, 0.0134630478967186, 0.0111681394601311,
      0.0088467598263639, 0.0065044579689784, 0.0041470332605625, 0.0017832807216964};
  nodes.clear();
  weights.clear();
  for (int i = 31; i >= 0; --i) {
    nodes.push_back(-x[i]);
    weights.push_back(w[i]);
  }
  for (int i = 0; i < 32; ++i) {
    nodes.push_back(x[i]);
    weights.push_back(w[i]);
  }
}

}  // namespace

double bvn_upper_rect(double tau1, double tau2, double rho) {
  std::vector<double> nodes, weights;
  gl64(nodes, weights);
  const double hi = 9.0;
  const double a1 = tau1, a2 = tau2;
  const double c1 = 0.5 * (hi - a1), m1 = 0.5 * (hi + a1);
  const double c2 = 0.5 * (hi - a2), m2 = 0.5 * (hi + a2);
  const double det = 1.0 - rho * rho;
  const double norm = 1.0 / (2.0 * M_PI * std::sqrt(det));
  double total = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double z1 = m1 + c1 * nodes[i];
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const double z2 = m2 + c2 * nodes[j];
      const double q = (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / (2.0 * det);
      total += weights[i] * weights[j] * std::exp(-q);
    }
  }
  return total * c1 * c2 * norm;
}

void bvn_cell_probs(double tau1, double tau2, double rho, double& p11, double& p10,
                    double& p01, double& p00) {
  p11 = bvn_upper_rect(tau1, tau2, rho);
  const double p1 = 1.0 - norm_cdf(tau1);
  const double p2 = 1.0 - norm_cdf(tau2);
  p10 = p1 - p11;
  p01 = p2 - p11;
  p00 = 1.0 - p1 - p2 + p11;
}

Em2plResult fit_2pl_em(const ResponseMatrix& rm, int max_iter, double tol) {
  const int N = rm.n_models();
  const int p = rm.n_items();
  // Gauss-Hermite-style grid: equally spaced quadrature on [-5, 5] with
  // standard-normal weights (Bock-Aitkin style histogram quadrature).
  const int Q = 61;
  Eigen::VectorXd nodes(Q), prior(Q);
  for (int q = 0; q < Q; ++q) {
    nodes(q) = -5.0 + 10.0 * q / (Q - 1);
    prior(q) = norm_pdf(nodes(q));
  }
  prior /= prior.sum();

  Em2plResult res;
  res.a = Eigen::VectorXd::Ones(p);
  res.b = Eigen::VectorXd::Zero(p);
  for (int j = 0; j < p; ++j) {
    double ones = 0, n = 0;
    for (int i = 0; i < N; ++i) {
      if (rm.values(i, j) == kMissing) continue;
      ones += rm.values(i, j);
      n += 1;
    }
    const double phat = std::min(std::max(ones / n, 0.02), 0.98);
    res.b(j) = -std::log(phat / (1.0 - phat));
  }

  Eigen::MatrixXd post(N, Q);
  for (int iter = 0; iter < max_iter; ++iter) {
    // E step: posterior over nodes per model.
    for (int i = 0; i < N; ++i) {
      for (int q = 0; q < Q; ++q) {
        double ll = std::log(prior(q));
        for (int j = 0; j < p; ++j) {
          const auto y = rm.values(i, j);
          if (y == kMissing) continue;
          const double lin = res.a(j) * nodes(q) - res.b(j);
          ll += (y == 1) ? -log1pexp(-lin) : -log1pexp(lin);
        }
        post(i, q) = ll;
      }
      const double mx = post.row(i).maxCoeff();
      post.row(i) = (post.row(i).array() - mx).exp();
      post.row(i) /= post.row(i).sum();
    }
    // M step: per-item weighted logistic regression on the nodes.
    double max_change = 0.0;
    for (int j = 0; j < p; ++j) {
      Eigen::VectorXd r1 = Eigen::VectorXd::Zero(Q);  // expected correct at node
      Eigen::VectorXd n1 = Eigen::VectorXd::Zero(Q);  // expected count at node
      for (int i = 0; i < N; ++i) {
        const auto y = rm.values(i, j);
        if (y == kMissing) continue;
        n1 += post.row(i).transpose();
        if (y == 1) r1 += post.row(i).transpose();
      }
      double a = res.a(j), b = res.b(j);
      for (int newton = 0; newton < 30; ++newton) {
        double g_a = 0, g_b = 0, h_aa = 0, h_ab = 0, h_bb = 0;
        for (int q = 0; q < Q; ++q) {
          const double pr = logistic(a * nodes(q) - b);
          const double e = r1(q) - n1(q) * pr;
          const double wq = n1(q) * pr * (1.0 - pr);
          g_a += e * nodes(q);
          g_b += -e;
          h_aa += wq * nodes(q) * nodes(q);
          h_ab += -wq * nodes(q);
          h_bb += wq;
        }
        const double det = h_aa * h_bb - h_ab * h_ab;
        if (std::abs(det) < 1e-12) break;
        const double da = (h_bb * g_a - h_ab * g_b) / det;
        const double db = (-h_ab * g_a + h_aa * g_b) / det;
        a += da;
        b += db;
        if (std::abs(da) < 1e-10 && std::abs(db) < 1e-10) break;
      }
      max_change = std::max({max_change, std::abs(a - res.a(j)), std::abs(b - res.b(j))});
      res.a(j) = a;
      res.b(j) = b;
    }
    res.n_iter = iter + 1;
    if (max_change < tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

double kendall_tau_b_bruteforce(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  long long concordant = 0, discordant = 0, tx = 0, ty = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) ++tx;
      else if (dy == 0) ++ty;
      else if (dx * dy > 0) ++concordant;
      else ++discordant;
    }
  }
  const double n0 = 0.5 * n * (n - 1);
  long long joint = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (x[i] == x[j] && y[i] == y[j]) ++joint;
  const double nx = concordant + discordant + tx;
  const double ny = concordant + discordant + ty;
  (void)n0;
  (void)joint;
  const double denom = std::sqrt(nx) * std::sqrt(ny);
  return denom > 0 ? (concordant - discordant) / denom : 0.0;
}

double dcor_bruteforce(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd A(n, n), B(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      A(i, j) = std::abs(x[i] - x[j]);
      B(i, j) = std::abs(y[i] - y[j]);
    }
  }
  auto center = [n](Eigen::MatrixXd& m) {
    const Eigen::VectorXd row_mean = m.rowwise().mean();
    const double grand = m.mean();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) += grand - row_mean(i) - row_mean(j);
  };
  center(A);
  center(B);
  const double dcov2 = (A.array() * B.array()).mean();
  const double dvarx = (A.array() * A.array()).mean();
  const double dvary = (B.array() * B.array()).mean();
  const double denom = std::sqrt(dvarx) * std::sqrt(dvary);
  if (denom <= 0 || dcov2 <= 0) return 0.0;
  return std::sqrt(dcov2 / denom);
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double orig = xp(i);
    xp(i) = orig + h;
    const double fp = f(xp);
    xp(i) = orig - h;
    const double fm = f(xp);
    xp(i) = orig;
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace benchmap::oracle
