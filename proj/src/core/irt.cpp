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

#include "core/irt.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

#include "core/common.hpp"
#include "core/mathutil.hpp"
#include "core/rng.hpp"
#include "core/threads.hpp"

namespace benchmap {

double irt_prob(const IrtParams& params, int item, int bench, const Eigen::VectorXd& theta) {
  const double lin = params.a_general(item) * theta(0) +
                     params.a_specific(item) * theta(1 + bench) - params.b(item);
  return logistic(lin);
}

namespace {

constexpr double kDivergenceBound = 20.0;

struct MhrmState {
  const ResponseMatrix* rm = nullptr;
  const MhrmConfig* cfg = nullptr;
  int N = 0, p = 0, K = 0, dims = 0;
  std::vector<int> bench_of;

  // item parameters
  Eigen::VectorXd a0, ak, b;
  // structural layer
  bool regression = false;
  Eigen::MatrixXd z;       // N x F_eff, centered covariates (x, w...)
  Eigen::MatrixXd ztz_inv; // F_eff x F_eff
  Eigen::VectorXd cov_means;
  Eigen::MatrixXd gamma;   // F_eff x dims
  std::vector<int> contrib;
  int n_contrib = 0;
  Eigen::MatrixXd u;           // n_contrib x dims
  Eigen::VectorXd log_s2zeta;  // per dimension

  Eigen::MatrixXd theta;  // N x dims, current imputation

  // Robbins-Monro conditioning per item (3x3 information recursions).
  std::vector<Eigen::Matrix3d> item_info;

  double proposal_sd = 1.0;
  long accepted = 0, proposed = 0;

  double complete_loglik = 0.0;

  double item_lin(int i, int j) const {
    return a0(j) * theta(i, 0) + ak(j) * theta(i, 1 + bench_of[j]) - b(j);
  }

  Eigen::VectorXd model_prior_mean(int i) const {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(dims);
    if (regression) {
      mu = gamma.transpose() * z.row(i).transpose();
      if (n_contrib > 0) mu += u.row(contrib[i]).transpose();
    }
    return mu;
  }

  // Bernoulli log-likelihood of model i at a candidate theta.
  double model_loglik(int i, const Eigen::VectorXd& th) const {
    double ll = 0.0;
    for (int j = 0; j < p; ++j) {
      const auto y = rm->values(i, j);
      if (y == kMissing) continue;
      const double lin = a0(j) * th(0) + ak(j) * th(1 + bench_of[j]) - b(j);
      ll += (y == 1) ? -log1pexp(-lin) : -log1pexp(lin);
    }
    return ll;
  }

  // One MH sweep for model i; returns accepted count. rng is per (cycle, i).
  int mh_model(int i, StreamRng& rng) {
    Eigen::VectorXd cur = theta.row(i).transpose();
    const Eigen::VectorXd mu = model_prior_mean(i);
    double cur_ll = model_loglik(i, cur) - 0.5 * (cur - mu).squaredNorm();
    int acc = 0;
    Eigen::VectorXd prop(dims);
    for (int s = 0; s < cfg->mh_steps; ++s) {
      for (int d = 0; d < dims; ++d) prop(d) = cur(d) + proposal_sd * rng.normal();
      const double prop_ll = model_loglik(i, prop) - 0.5 * (prop - mu).squaredNorm();
      if (std::log(rng.uniform()) < prop_ll - cur_ll) {
        cur = prop;
        cur_ll = prop_ll;
        ++acc;
      }
    }
    theta.row(i) = cur.transpose();
    return acc;
  }

  void gibbs_contributors(std::uint64_t cycle) {
    if (!regression || n_contrib == 0) return;
    // Conditional posterior of u_cd is normal: the structural layer is
    // linear-Gaussian given theta.
    Eigen::MatrixXd resid_sum = Eigen::MatrixXd::Zero(n_contrib, dims);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_contrib);
    for (int i = 0; i < N; ++i) {
      const Eigen::VectorXd r =
          theta.row(i).transpose() - gamma.transpose() * z.row(i).transpose();
      resid_sum.row(contrib[i]) += r.transpose();
      counts(contrib[i]) += 1.0;
    }
    for (int c = 0; c < n_contrib; ++c) {
      StreamRng rng(cfg->seed ^ 0xc0117ULL, cycle, static_cast<std::uint64_t>(c));
      for (int d = 0; d < dims; ++d) {
        const double s2 = std::exp(log_s2zeta(d));
        const double post_var = 1.0 / (1.0 / s2 + counts(c));
        const double post_mean = post_var * resid_sum(c, d);
        u(c, d) = post_mean + std::sqrt(post_var) * rng.normal();
      }
    }
  }

  // Complete-data scores and information for the current imputation.
  void item_score_info(int j, Eigen::Vector3d& score, Eigen::Matrix3d& info) const {
    score.setZero();
    info.setZero();
    const int k = bench_of[j];
    for (int i = 0; i < N; ++i) {
      const auto y = rm->values(i, j);
      if (y == kMissing) continue;
      const double pr = logistic(a0(j) * theta(i, 0) + ak(j) * theta(i, 1 + k) - b(j));
      const double e = y - pr;
      const double wgt = std::max(pr * (1.0 - pr), 1e-8);
      const Eigen::Vector3d xv(theta(i, 0), theta(i, 1 + k), -1.0);
      score += e * xv;
      info += wgt * (xv * xv.transpose());
    }
  }

  double update_complete_loglik() {
    double ll = 0.0;
    for (int i = 0; i < N; ++i) ll += model_loglik(i, theta.row(i).transpose());
    complete_loglik = ll;
    return ll;
  }
};

}  // namespace

LatRegFit fit_mhrm(const ResponseMatrix& rm, const EcosystemMetadata* md,
                   bool with_regression, const MhrmConfig& config) {
  const auto zv = rm.zero_variance_flags();
  for (int j = 0; j < rm.n_items(); ++j)
    require(!zv[j], "E_ZERO_VARIANCE",
            "item '" + rm.item_ids[j] + "' has no variance; exclude it before fitting");
  if (with_regression) {
    require(md != nullptr, "E_META_MISSING", "latent regression requires metadata");
    require(md->n_models() == rm.n_models(), "E_META_ALIGN",
            "metadata rows must align with the response matrix");
  }

  MhrmState st;
  st.rm = &rm;
  st.cfg = &config;
  st.N = rm.n_models();
  st.p = rm.n_items();
  st.K = rm.n_benches();
  st.dims = st.K + 1;
  st.bench_of = rm.bench_of;
  st.proposal_sd = config.proposal_sd;
  st.regression = with_regression;

  // Item starting values: unit slopes, difficulty from the item mean.
  st.a0 = Eigen::VectorXd::Constant(st.p, config.constrain_general_zero ? 0.0 : 1.0);
  st.ak = Eigen::VectorXd::Constant(st.p, 1.0);
  st.b.resize(st.p);
  for (int j = 0; j < st.p; ++j) {
    int n = 0, ones = 0;
    for (int i = 0; i < st.N; ++i) {
      const auto v = rm.values(i, j);
      if (v == kMissing) continue;
      ++n;
      ones += v;
    }
    const double phat = std::clamp(static_cast<double>(ones) / n, 0.02, 0.98);
    st.b(j) = -std::log(phat / (1.0 - phat));
  }

  int f_eff = 0;
  if (with_regression) {
    const int nw = static_cast<int>(md->w.cols());
    f_eff = 1 + nw;
    st.z.resize(st.N, f_eff);
    st.z.col(0) = md->x;
    st.z.rightCols(nw) = md->w;
    st.cov_means = st.z.colwise().mean();
    st.z.rowwise() -= st.cov_means.transpose();
    Eigen::MatrixXd ztz = st.z.transpose() * st.z;
    ztz += 1e-8 * Eigen::MatrixXd::Identity(f_eff, f_eff);
    st.ztz_inv = ztz.inverse();
    st.gamma = Eigen::MatrixXd::Zero(f_eff, st.dims);

    std::map<std::string, int> cindex;
    st.contrib.resize(st.N);
    const auto authors = md->facet_labels("author");
    for (int i = 0; i < st.N; ++i) {
      auto [it, inserted] = cindex.emplace(authors[i], st.n_contrib);
      if (inserted) ++st.n_contrib;
      st.contrib[i] = it->second;
    }
    st.u = Eigen::MatrixXd::Zero(st.n_contrib, st.dims);
    st.log_s2zeta = Eigen::VectorXd::Constant(st.dims, std::log(0.1));
  }

  st.theta = Eigen::MatrixXd::Zero(st.N, st.dims);
  st.item_info.assign(st.p, Eigen::Matrix3d::Identity() * (0.1 * st.N));

  // Louis accumulators over the frozen-parameter scoring pass.
  const int n_struct = with_regression ? f_eff * st.dims + st.dims : 0;
  const int D = 3 * st.p + n_struct;

  LatRegFit fit;
  fit.with_regression = with_regression;
  fit.n_benches = st.K;
  fit.bench_of = st.bench_of;

  std::deque<double> change_window;
  long acc_since_adapt = 0, prop_since_adapt = 0;
  int cycle = 0;
  bool converged = false;

  auto mh_sweep = [&](int t) {
    std::vector<int> acc(st.N, 0);
    parallel_for(st.N, config.jobs, [&](int i) {
      StreamRng rng(config.seed, static_cast<std::uint64_t>(t),
                    static_cast<std::uint64_t>(i));
      acc[i] = st.mh_model(i, rng);
    });
    long a = 0;
    for (int i = 0; i < st.N; ++i) a += acc[i];
    st.accepted += a;
    st.proposed += static_cast<long>(st.N) * config.mh_steps;
    acc_since_adapt += a;
    prop_since_adapt += static_cast<long>(st.N) * config.mh_steps;
    st.gibbs_contributors(static_cast<std::uint64_t>(t));
  };

  for (cycle = 1; cycle <= config.cycles; ++cycle) {
    mh_sweep(cycle);

    const bool in_burnin = cycle <= config.burnin;
    const double gain =
        in_burnin ? 0.1
                  : std::min(1.0, 1.0 / std::pow(static_cast<double>(cycle - config.burnin),
                                                 config.gain_exponent));

    // Proposal adaptation toward the target acceptance rate (burn-in only).
    if (in_burnin && cycle % 25 == 0 && prop_since_adapt > 0) {
      const double rate = static_cast<double>(acc_since_adapt) / prop_since_adapt;
      if (rate < 0.2 || rate > 0.5)
        st.proposal_sd *= std::exp(rate - config.target_acceptance);
      st.proposal_sd = std::clamp(st.proposal_sd, 0.05, 5.0);
      acc_since_adapt = prop_since_adapt = 0;
    }

    // Robbins-Monro step on item parameters with recursive information.
    double max_change = 0.0;
    std::vector<double> changes(st.p, 0.0);
    parallel_for(st.p, config.jobs, [&](int j) {
      Eigen::Vector3d score;
      Eigen::Matrix3d info;
      st.item_score_info(j, score, info);
      auto& cond = st.item_info[j];
      cond += gain * (info - cond);
      Eigen::Matrix3d reg = cond + 1e-4 * st.N * Eigen::Matrix3d::Identity();
      Eigen::Vector3d step = gain * reg.ldlt().solve(score);
      double a0_new = st.a0(j) + step(0);
      double ak_new = st.ak(j) + step(1);
      double b_new = st.b(j) + step(2);
      if (config.constrain_general_zero) a0_new = 0.0;
      a0_new = std::max(a0_new, 0.0);
      ak_new = std::max(ak_new, 0.0);
      changes[j] = std::max({std::abs(a0_new - st.a0(j)), std::abs(ak_new - st.ak(j)),
                             std::abs(b_new - st.b(j))});
      st.a0(j) = a0_new;
      st.ak(j) = ak_new;
      st.b(j) = b_new;
    });
    for (int j = 0; j < st.p; ++j) max_change = std::max(max_change, changes[j]);

    if (with_regression) {
      // Structural layer: Fisher-scoring RM steps; Z'Z is the exact
      // complete-data information for each gamma column.
      Eigen::MatrixXd resid = st.theta;
      for (int i = 0; i < st.N; ++i)
        if (st.n_contrib > 0) resid.row(i) -= st.u.row(st.contrib[i]);
      const Eigen::MatrixXd target = st.ztz_inv * (st.z.transpose() * resid);
      const Eigen::MatrixXd dg = gain * (target - st.gamma);
      st.gamma += dg;
      max_change = std::max(max_change, dg.cwiseAbs().maxCoeff());

      if (st.n_contrib > 0) {
        for (int d = 0; d < st.dims; ++d) {
          const double s2 = std::exp(st.log_s2zeta(d));
          double ssq = 0.0;
          for (int c = 0; c < st.n_contrib; ++c) ssq += st.u(c, d) * st.u(c, d);
          const double score = 0.5 * (ssq / s2 - st.n_contrib);
          const double step = gain * score / (0.5 * st.n_contrib);
          st.log_s2zeta(d) = std::clamp(st.log_s2zeta(d) + step, -18.0, 5.0);
          max_change = std::max(max_change, std::abs(step));
        }
      }
    }

    const double extreme = std::max({st.a0.cwiseAbs().maxCoeff(), st.ak.cwiseAbs().maxCoeff(),
                                     st.b.cwiseAbs().maxCoeff()});
    require(extreme <= kDivergenceBound, "E_DIVERGED",
            "MH-RM diverged: a parameter exceeded " + std::to_string(kDivergenceBound) +
                " at cycle " + std::to_string(cycle));

    fit.loglik_trace.push_back(st.update_complete_loglik());

    if (!in_burnin) {
      change_window.push_back(max_change);
      if (static_cast<int>(change_window.size()) > config.conv_window)
        change_window.pop_front();
      if (static_cast<int>(change_window.size()) == config.conv_window) {
        bool all_small = true;
        for (double c : change_window)
          if (c >= config.conv_tol) {
            all_small = false;
            break;
          }
        if (all_small) {
          converged = true;
          break;
        }
      }
    }
  }
  fit.n_cycles = std::min(cycle, config.cycles);
  fit.converged = converged;
  fit.acceptance_rate =
      st.proposed > 0 ? static_cast<double>(st.accepted) / st.proposed : 0.0;
  fit.proposal_sd_final = st.proposal_sd;

  // Frozen-parameter scoring pass: posterior means/SDs for theta and the
  // Louis accumulators for the observed information.
  const int discard = config.scoring_sweeps / 4;
  Eigen::MatrixXd theta_sum = Eigen::MatrixXd::Zero(st.N, st.dims);
  Eigen::MatrixXd theta_sq = Eigen::MatrixXd::Zero(st.N, st.dims);
  Eigen::VectorXd s_bar = Eigen::VectorXd::Zero(D);
  Eigen::MatrixXd ss_bar = Eigen::MatrixXd::Zero(D, D);
  Eigen::MatrixXd h_bar = Eigen::MatrixXd::Zero(D, D);
  int kept = 0;
  double loglik_sum = 0.0;

  for (int s = 0; s < config.scoring_sweeps; ++s) {
    mh_sweep(config.cycles + 1 + s);
    if (s < discard) continue;
    ++kept;
    theta_sum += st.theta;
    theta_sq += st.theta.cwiseProduct(st.theta);
    loglik_sum += st.update_complete_loglik();

    Eigen::VectorXd sv = Eigen::VectorXd::Zero(D);
    for (int j = 0; j < st.p; ++j) {
      Eigen::Vector3d score;
      Eigen::Matrix3d info;
      st.item_score_info(j, score, info);
      sv.segment(3 * j, 3) = score;
      h_bar.block(3 * j, 3 * j, 3, 3) += info;
    }
    if (with_regression) {
      Eigen::MatrixXd resid = st.theta - st.z * st.gamma;
      if (st.n_contrib > 0)
        for (int i = 0; i < st.N; ++i) resid.row(i) -= st.u.row(st.contrib[i]);
      const Eigen::MatrixXd gscore = st.z.transpose() * resid;  // F_eff x dims
      const int off = 3 * st.p;
      for (int d = 0; d < st.dims; ++d) {
        sv.segment(off + d * f_eff, f_eff) = gscore.col(d);
        h_bar.block(off + d * f_eff, off + d * f_eff, f_eff, f_eff) +=
            st.z.transpose() * st.z;
      }
      const int off2 = off + f_eff * st.dims;
      for (int d = 0; d < st.dims; ++d) {
        const double s2 = std::exp(st.log_s2zeta(d));
        double ssq = 0.0;
        for (int c = 0; c < st.n_contrib; ++c) ssq += st.u(c, d) * st.u(c, d);
        sv(off2 + d) = 0.5 * (ssq / s2 - st.n_contrib);
        h_bar(off2 + d, off2 + d) += 0.5 * st.n_contrib;
      }
    }
    s_bar += sv;
    ss_bar += sv * sv.transpose();
  }
  require(kept > 0, "E_NUMERIC", "no scoring sweeps retained");
  theta_sum /= kept;
  theta_sq /= kept;
  fit.theta = theta_sum;
  fit.theta_se =
      (theta_sq - theta_sum.cwiseProduct(theta_sum)).cwiseMax(1e-12).cwiseSqrt();
  fit.loglik = loglik_sum / kept;
  s_bar /= kept;
  ss_bar /= kept;
  h_bar /= kept;

  // Louis: observed info = E[complete info] - Var(complete score).
  Eigen::MatrixXd obs_info = h_bar - (ss_bar - s_bar * s_bar.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(obs_info);
  const double emax = std::max(es.eigenvalues().maxCoeff(), 1e-30);
  Eigen::VectorXd inv = es.eigenvalues();
  for (int i = 0; i < D; ++i) inv(i) = inv(i) > 1e-8 * emax ? 1.0 / inv(i) : 0.0;
  const Eigen::VectorXd var_diag =
      (es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose()).diagonal();

  fit.item.a_general = st.a0;
  fit.item.a_specific = st.ak;
  fit.item.b = st.b;
  fit.a_general_se.resize(st.p);
  fit.a_specific_se.resize(st.p);
  fit.b_se.resize(st.p);
  for (int j = 0; j < st.p; ++j) {
    fit.a_general_se(j) = std::sqrt(std::max(var_diag(3 * j), 0.0));
    fit.a_specific_se(j) = std::sqrt(std::max(var_diag(3 * j + 1), 0.0));
    fit.b_se(j) = std::sqrt(std::max(var_diag(3 * j + 2), 0.0));
  }
  if (with_regression) {
    const int nw = f_eff - 1;
    fit.gamma = Eigen::MatrixXd::Zero(f_eff + 1, st.dims);  // + intercept row
    fit.gamma_se = Eigen::MatrixXd::Zero(f_eff + 1, st.dims);
    fit.covariate_means = st.cov_means;
    const int off = 3 * st.p;
    for (int d = 0; d < st.dims; ++d) {
      for (int c = 0; c < f_eff; ++c) {
        fit.gamma(1 + c, d) = st.gamma(c, d);
        fit.gamma_se(1 + c, d) = std::sqrt(std::max(var_diag(off + d * f_eff + c), 0.0));
      }
    }
    fit.sigma_zeta.resize(st.dims);
    fit.sigma_zeta_se.resize(st.dims);
    const int off2 = off + f_eff * st.dims;
    for (int d = 0; d < st.dims; ++d) {
      fit.sigma_zeta(d) = std::exp(st.log_s2zeta(d));
      // delta method from the log-scale SE
      const double log_se = std::sqrt(std::max(var_diag(off2 + d), 0.0));
      fit.sigma_zeta_se(d) = fit.sigma_zeta(d) * log_se;
    }
    (void)nw;
  }
  return fit;
}

std::vector<ScalingVectorEntry> extract_scaling_vector(const LatRegFit& fit) {
  require(fit.with_regression, "E_NO_REGRESSION",
          "scaling vector requires a latent-regression fit");
  std::vector<ScalingVectorEntry> out;
  const int dims = fit.n_benches + 1;
  for (int d = 0; d < dims; ++d) {
    ScalingVectorEntry e;
    e.dimension = d;
    e.beta = fit.gamma(1, d);  // row 1 = x covariate
    e.se = fit.gamma_se(1, d);
    out.push_back(e);
  }
  return out;
}

std::vector<AttenuationRow> attenuation_demo(const std::vector<double>& lambda_k,
                                             const std::vector<double>& beta_k, int n,
                                             std::uint64_t seed) {
  require(lambda_k.size() == beta_k.size(), "E_VALIDATION",
          "lambda and beta vectors must have equal length");
  require(n >= 10, "E_VALIDATION", "attenuation demo needs n >= 10");
  std::vector<AttenuationRow> rows;
  Rng rng(seed);
  for (std::size_t k = 0; k < lambda_k.size(); ++k) {
    const double lam = lambda_k[k];
    require(lam >= 0.0 && lam <= 1.0, "E_VALIDATION", "lambda must be in [0, 1]");
    double sx = 0, sxx = 0, sxy_obs = 0, sy_obs = 0, sxy_lat = 0, sy_lat = 0;
    for (int i = 0; i < n; ++i) {
      const double x = rng.uniform(-1.0, 1.0);
      const double th = 0.3 + beta_k[k] * x + rng.normal();
      const double ybar = lam * th + 0.5 * rng.normal();
      sx += x;
      sxx += x * x;
      sy_obs += ybar;
      sxy_obs += x * ybar;
      sy_lat += th;
      sxy_lat += x * th;
    }
    const double vx = sxx - sx * sx / n;
    AttenuationRow row;
    row.lambda = lam;
    row.beta = beta_k[k];
    row.ols_slope = (sxy_obs - sx * sy_obs / n) / vx;
    row.latent_slope = (sxy_lat - sx * sy_lat / n) / vx;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace benchmap
