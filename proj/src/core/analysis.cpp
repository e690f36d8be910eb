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

#include "core/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/common.hpp"
#include "core/mathutil.hpp"
#include "core/rng.hpp"
#include "core/threads.hpp"

namespace benchmap {

void CampaignConfig::validate() const {
  require(replications >= 1, "E_CONFIG", "replications must be >= 1");
  require(holdout_fraction >= 0.0 && holdout_fraction <= 0.5, "E_CONFIG",
          "holdout_fraction must be in [0, 0.5]");
  require(!structures.empty(), "E_CONFIG", "at least one structure is required");
}

std::vector<int> CampaignConfig::resolve_r_k(int n_benches) const {
  if (!items_per_bench.empty()) {
    require(static_cast<int>(items_per_bench.size()) == n_benches, "E_CONFIG",
            "items_per_bench must have one entry per benchmark");
    return items_per_bench;
  }
  return std::vector<int>(n_benches, items_per_bench_default);
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct ReplicationOutput {
  std::vector<FitStatRow> rows;
  std::vector<MiAggregateRow> mi_rows;
  bool failed = false;
  std::string error;
};

// Splits a replication's item draw into train/holdout, keeping per-bench
// grouping and carrying permuted labels along.
struct SubsetSplit {
  std::vector<int> train_items, holdout_items;
  std::vector<int> train_perm, holdout_perm;  // permuted bench labels
};

SubsetSplit split_subset(const ResponseMatrix& rm, const ItemSubset& subset,
                         const std::vector<int>& r_k, double holdout_fraction,
                         std::uint64_t seed) {
  SubsetSplit split;
  Rng rng(seed);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < r_k.size(); ++k) {
    const int nk = r_k[k];
    int n_hold = static_cast<int>(std::floor(nk * holdout_fraction));
    if (nk - n_hold < 1) n_hold = nk - 1;
    std::vector<int> hold_local;
    if (n_hold > 0) {
      hold_local = rng.sample_without_replacement(nk, n_hold);
      std::sort(hold_local.begin(), hold_local.end());
    }
    std::size_t h = 0;
    for (int t = 0; t < nk; ++t) {
      const std::size_t idx = pos + t;
      const bool is_hold = h < hold_local.size() && hold_local[h] == t;
      if (is_hold) {
        split.holdout_items.push_back(subset.items[idx]);
        if (subset.permuted()) split.holdout_perm.push_back(subset.permuted_bench[idx]);
        ++h;
      } else {
        split.train_items.push_back(subset.items[idx]);
        if (subset.permuted()) split.train_perm.push_back(subset.permuted_bench[idx]);
      }
    }
    pos += nk;
  }
  return split;
}

FitStatRow make_row(int replication, const std::string& structure, int randomized,
                    const CfaFit& fit, const OosResult& oos) {
  FitStatRow row;
  row.replication = replication;
  row.structure = structure;
  row.randomized = randomized;
  row.rmsea = fit.indices.rmsea;
  row.cfi = fit.indices.cfi;
  row.tli = fit.indices.tli;
  row.srmr = fit.indices.srmr;
  row.chi2 = fit.chi2;
  row.df = fit.df;
  row.aic = fit.aic;
  row.bic = fit.bic;
  row.loglik = fit.loglik_proxy;
  row.auc = oos.auc;
  row.mae = oos.mae;
  row.converged = fit.converged;
  row.heywood = fit.heywood;
  return row;
}

}  // namespace

CfaCampaignResult run_cfa_campaign(const ResponseMatrix& rm, const CampaignConfig& config) {
  config.validate();
  // DWLS consumers exclude items with missingness and degenerate items.
  const auto pool = eligible_items(rm, /*exclude_missing=*/true,
                                   /*exclude_zero_variance=*/true);
  const auto r_k = config.resolve_r_k(rm.n_benches());
  for (int c : r_k) require(c >= 2, "E_CONFIG", "need at least 2 items per benchmark");

  std::vector<ReplicationOutput> outputs(config.replications);
  parallel_for(config.replications, config.jobs, [&](int rep) {
    ReplicationOutput& out = outputs[rep];
    try {
      const std::uint64_t rep_seed = mix_seed(config.seed, rep);
      const ItemSubset subset = sample_item_subset_from(
          rm, pool, r_k, rep_seed, config.permutation_control, rep);
      const SubsetSplit split =
          split_subset(rm, subset, r_k, config.holdout_fraction, mix_seed(rep_seed, 7));

      const ResponseMatrix train = rm.select_items(split.train_items);
      const TetraResult tetra = tetrachoric_matrix(train, 1);
      const std::uint64_t signature = mix_seed(rep_seed, 99);

      ResponseMatrix holdout;
      Eigen::VectorXd holdout_tau;
      const bool has_holdout = !split.holdout_items.empty();
      if (has_holdout) {
        holdout = rm.select_items(split.holdout_items);
        holdout_tau = estimate_thresholds(holdout);
      }
      // Map held-out benches into the training spec's bench space (the
      // select_items compaction preserves first-appearance order, which is
      // bench order because every r_k >= 1).
      std::vector<int> holdout_bench_true;
      for (int j : split.holdout_items) holdout_bench_true.push_back(rm.bench_of[j]);

      for (StructureKind kind : config.structures) {
        StructureSpec spec;
        spec.kind = kind;
        spec.n_benches = train.n_benches();
        spec.bench_of = train.bench_of;

        CfaFit fit = fit_dwls(spec, tetra, rm.n_models());
        fit.data_signature = signature;
        OosResult oos;
        if (has_holdout) {
          const Eigen::MatrixXd scores = factor_scores(fit, train);
          oos = oos_predict(fit, scores, holdout, holdout_tau, holdout_bench_true);
        }
        out.rows.push_back(make_row(rep, to_string(kind), 0, fit, oos));

        const auto cands = top_residual_pairs(fit, tetra, config.mi_pairs);
        const MiReport mi = modification_indices(fit, tetra, cands);
        for (const auto& e : mi.entries) {
          if (e.flagged) continue;
          out.mi_rows.push_back({rep, to_string(kind), e.bench_a, e.bench_b, e.a, e.b,
                                 e.mi, e.sepc});
        }

        if (config.permutation_control) {
          StructureSpec perm_spec = spec;
          perm_spec.bench_of = split.train_perm;
          CfaFit perm_fit = fit_dwls(perm_spec, tetra, rm.n_models());
          perm_fit.data_signature = signature;
          OosResult perm_oos;
          if (has_holdout) {
            const Eigen::MatrixXd scores = factor_scores(perm_fit, train);
            perm_oos = oos_predict(perm_fit, scores, holdout, holdout_tau,
                                   split.holdout_perm);
          }
          out.rows.push_back(make_row(rep, to_string(kind), 1, perm_fit, perm_oos));
        }
      }
    } catch (const Error& e) {
      out.failed = true;
      out.error = e.what();
      out.rows.clear();
      out.mi_rows.clear();
      FitStatRow row;
      row.replication = rep;
      row.failed = true;
      out.rows.push_back(row);
    }
  });

  CfaCampaignResult result;
  result.n_replications = config.replications;
  for (auto& out : outputs) {
    if (out.failed) ++result.n_failed_replications;
    for (auto& r : out.rows) result.rows.push_back(std::move(r));
    for (auto& r : out.mi_rows) result.mi_rows.push_back(std::move(r));
  }
  require(result.n_failed_replications * 5 <= config.replications, "E_CAMPAIGN_FAILED",
          std::to_string(result.n_failed_replications) + " of " +
              std::to_string(config.replications) + " replications failed (> 20%)");

  // Percent ranks within replication across structures, then averaged, plus
  // per-structure medians on the true condition.
  result.metrics = {"rmsea", "cfi", "tli", "srmr", "aic", "bic", "loglik", "auc", "mae"};
  for (StructureKind k : config.structures) result.structures.push_back(to_string(k));
  const int ns = static_cast<int>(result.structures.size());
  const int nm = static_cast<int>(result.metrics.size());
  result.mean_percent_rank = Eigen::MatrixXd::Zero(ns, nm);
  result.median_by_metric = Eigen::MatrixXd::Zero(ns, nm);

  auto metric_value = [&](const FitStatRow& r, const std::string& metric,
                          bool desirability) -> double {
    double v = 0, sign = 1;
    if (metric == "rmsea") { v = r.rmsea; sign = -1; }
    else if (metric == "cfi") v = r.cfi;
    else if (metric == "tli") v = r.tli;
    else if (metric == "srmr") { v = r.srmr; sign = -1; }
    else if (metric == "aic") { v = r.aic; sign = -1; }
    else if (metric == "bic") { v = r.bic; sign = -1; }
    else if (metric == "loglik") v = r.loglik;
    else if (metric == "auc") v = r.auc;
    else { v = r.mae; sign = -1; }
    return desirability ? sign * v : v;
  };

  std::vector<int> rank_counts(ns, 0);
  for (int rep = 0; rep < config.replications; ++rep) {
    std::vector<const FitStatRow*> rep_rows(ns, nullptr);
    for (const auto& r : result.rows) {
      if (r.replication != rep || r.randomized != 0 || r.failed) continue;
      for (int s = 0; s < ns; ++s)
        if (result.structures[s] == r.structure) rep_rows[s] = &r;
    }
    if (std::any_of(rep_rows.begin(), rep_rows.end(),
                    [](const FitStatRow* p) { return p == nullptr; }))
      continue;
    for (int mi = 0; mi < nm; ++mi) {
      std::vector<double> desirability(ns);
      for (int s = 0; s < ns; ++s)
        desirability[s] = metric_value(*rep_rows[s], result.metrics[mi], true);
      const auto ranks = percentile_ranks(desirability);
      for (int s = 0; s < ns; ++s) result.mean_percent_rank(s, mi) += 100.0 * ranks[s];
    }
    for (int s = 0; s < ns; ++s) ++rank_counts[s];
  }
  for (int s = 0; s < ns; ++s) {
    if (rank_counts[s] > 0) result.mean_percent_rank.row(s) /= rank_counts[s];
    for (int mi = 0; mi < nm; ++mi) {
      std::vector<double> vals;
      for (const auto& r : result.rows)
        if (!r.failed && r.randomized == 0 && r.structure == result.structures[s])
          vals.push_back(metric_value(r, result.metrics[mi], false));
      result.median_by_metric(s, mi) = median_of(vals);
    }
  }

  if (config.permutation_control) {
    for (const std::string metric : {"rmsea", "cfi", "tli", "srmr"}) {
      std::vector<MetaObs> obs;
      for (const auto& r : result.rows) {
        if (r.failed) continue;
        obs.push_back({r.replication, r.structure, r.randomized,
                       metric_value(r, metric, false)});
      }
      if (!obs.empty()) result.meta.emplace(metric, fit_meta_regression(obs));
    }
  }
  return result;
}

LatRegCampaignResult run_latreg_campaign(const ResponseMatrix& rm,
                                         const EcosystemMetadata& md,
                                         const CampaignConfig& config) {
  config.validate();
  require(md.n_models() == rm.n_models(), "E_META_ALIGN",
          "metadata rows must align with the response matrix");
  // MH-RM consumers keep missing cells but drop zero-variance items.
  const auto pool = eligible_items(rm, /*exclude_missing=*/false,
                                   /*exclude_zero_variance=*/true);
  const auto r_k = config.resolve_r_k(rm.n_benches());

  const int dims = rm.n_benches() + 1;
  const auto& flags = EcosystemMetadata::deploy_flag_names();
  const int nw = static_cast<int>(flags.size());

  struct RepOut {
    bool failed = false;
    std::string error;
    Eigen::MatrixXd beta, beta_se;  // (1 + nw) x dims (x row then w rows)
    Eigen::MatrixXd theta, theta_se;
    double contrib_share = 0;
    double meas_ll = 0, reg_ll = 0;
  };
  std::vector<RepOut> outs(config.replications);

  parallel_for(config.replications, config.jobs, [&](int rep) {
    RepOut& out = outs[rep];
    try {
      const std::uint64_t rep_seed = mix_seed(config.seed ^ 0x1a7e9ULL, rep);
      const ItemSubset subset =
          sample_item_subset_from(rm, pool, r_k, rep_seed, false, rep);
      const ResponseMatrix sub = rm.select_items(subset.items);

      MhrmConfig mcfg = config.mhrm;
      mcfg.seed = mix_seed(rep_seed, 3);
      mcfg.jobs = 1;  // replications already run in parallel
      const LatRegFit meas = fit_mhrm(sub, nullptr, false, mcfg);
      mcfg.seed = mix_seed(rep_seed, 4);
      const LatRegFit reg = fit_mhrm(sub, &md, true, mcfg);

      out.meas_ll = meas.loglik;
      out.reg_ll = reg.loglik;
      out.beta.resize(1 + nw, dims);
      out.beta_se.resize(1 + nw, dims);
      for (int d = 0; d < dims; ++d) {
        for (int c = 0; c < 1 + nw; ++c) {
          out.beta(c, d) = reg.gamma(1 + c, d);
          out.beta_se(c, d) = reg.gamma_se(1 + c, d);
        }
      }
      double share = 0;
      for (int d = 0; d < dims; ++d)
        share += reg.sigma_zeta(d) / (reg.sigma_zeta(d) + 1.0);
      out.contrib_share = share / dims;
      out.theta = reg.theta;
      out.theta_se = reg.theta_se;
    } catch (const Error& e) {
      out.failed = true;
      out.error = e.what();
    }
  });

  LatRegCampaignResult result;
  result.n_replications = config.replications;
  for (const auto& o : outs)
    if (o.failed) ++result.n_failed_replications;
  require(result.n_failed_replications * 5 <= config.replications, "E_CAMPAIGN_FAILED",
          std::to_string(result.n_failed_replications) + " of " +
              std::to_string(config.replications) + " replications failed (> 20%)");

  double mll = 0, rll = 0;
  int ok = 0;
  Eigen::MatrixXd wsum = Eigen::MatrixXd::Zero(rm.n_models(), dims);
  Eigen::MatrixXd wtheta = Eigen::MatrixXd::Zero(rm.n_models(), dims);
  for (const auto& o : outs) {
    if (o.failed) continue;
    mll += o.meas_ll;
    rll += o.reg_ll;
    result.contrib_share.push_back(o.contrib_share);
    // Precision-weighted latent score aggregation; weights are model- and
    // dimension-specific posterior precisions.
    for (int i = 0; i < rm.n_models(); ++i) {
      for (int d = 0; d < dims; ++d) {
        const double se = std::max(o.theta_se(i, d), 1e-6);
        const double w = 1.0 / (se * se);
        wsum(i, d) += w;
        wtheta(i, d) += w * o.theta(i, d);
      }
    }
    ++ok;
  }
  result.measurement_loglik = ok ? mll / ok : 0;
  result.regression_loglik = ok ? rll / ok : 0;
  if (ok > 0) {
    result.theta_agg = wtheta.cwiseQuotient(wsum);
    result.theta_agg_se = wsum.cwiseInverse().cwiseSqrt();
  }

  for (int c = 0; c < 1 + nw; ++c) {
    for (int d = 0; d < dims; ++d) {
      std::vector<std::pair<double, double>> est;
      for (const auto& o : outs) {
        if (o.failed) continue;
        est.emplace_back(o.beta(c, d), o.beta_se(c, d));
      }
      if (est.empty()) continue;
      DimensionAggregate agg;
      agg.dimension = d;
      agg.covariate = c == 0 ? "x" : flags[c - 1];
      agg.aggregate = ivw_aggregate(est);
      if (c == 0) result.scaling.push_back(std::move(agg));
      else result.covariates.push_back(std::move(agg));
    }
  }
  return result;
}

namespace {

// Knight's O(n log n) Kendall tau-b: swap counting by merge sort plus tie
// corrections.
long long merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                      std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = (lo + hi) / 2;
  long long swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<long long>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return swaps;
}

long long tie_count(const std::vector<double>& sorted) {
  long long t = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const long long run = static_cast<long long>(j - i + 1);
    t += run * (run - 1) / 2;
    i = j + 1;
  }
  return t;
}

double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }
  long long n1 = 0, n3 = 0;
  {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && xs[j + 1] == xs[i]) ++j;
      const long long run = static_cast<long long>(j - i + 1);
      n1 += run * (run - 1) / 2;
      std::size_t a = i;
      while (a <= j) {
        std::size_t b = a;
        while (b + 1 <= j && ys[b + 1] == ys[a]) ++b;
        const long long r2 = static_cast<long long>(b - a + 1);
        n3 += r2 * (r2 - 1) / 2;
        a = b + 1;
      }
      i = j + 1;
    }
  }
  std::vector<double> ybuf(ys), tmp(n);
  const long long swaps = merge_count(ybuf, tmp, 0, n);
  const long long n2 = tie_count(ybuf);  // ybuf sorted now
  const long long n0 = static_cast<long long>(n) * (n - 1) / 2;
  const long long concordant_minus_discordant = n0 - n1 - n2 + n3 - 2 * swaps;
  const double denom = std::sqrt(static_cast<double>(n0 - n1)) *
                       std::sqrt(static_cast<double>(n0 - n2));
  return denom > 0 ? concordant_minus_discordant / denom : 0.0;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  const double denom = std::sqrt(saa) * std::sqrt(sbb);
  return denom > 0 ? sab / denom : 0.0;
}

// Distance correlation with O(n) memory: row sums in one pass, the cross
// term in a second pass.
double distance_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  std::vector<double> ra(n, 0.0), rb(n, 0.0);
  double sa = 0, sb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      ra[i] += std::abs(a[i] - a[j]);
      rb[i] += std::abs(b[i] - b[j]);
    }
    sa += ra[i];
    sb += rb[i];
  }
  double s_ab = 0, s_aa = 0, s_bb = 0, s2 = 0, s2a = 0, s2b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double da = std::abs(a[i] - a[j]);
      const double db = std::abs(b[i] - b[j]);
      s_ab += da * db;
      s_aa += da * da;
      s_bb += db * db;
    }
    s2 += ra[i] * rb[i];
    s2a += ra[i] * ra[i];
    s2b += rb[i] * rb[i];
  }
  const double nn = static_cast<double>(n);
  const double ma = sa / (nn * nn), mb_ = sb / (nn * nn);
  const double dcov2 = (s_ab - 2.0 * s2 / nn + nn * nn * ma * mb_) / (nn * nn);
  const double dvar_a = (s_aa - 2.0 * s2a / nn + nn * nn * ma * ma) / (nn * nn);
  const double dvar_b = (s_bb - 2.0 * s2b / nn + nn * nn * mb_ * mb_) / (nn * nn);
  const double denom = std::sqrt(dvar_a) * std::sqrt(dvar_b);
  if (denom <= 0 || dcov2 <= 0) return 0.0;
  return std::sqrt(dcov2 / denom);
}

double retention(const std::vector<double>& base, const std::vector<double>& adj,
                 double frac, bool top) {
  const int n = static_cast<int>(base.size());
  const int m = std::max(1, static_cast<int>(std::floor(n * frac)));
  auto top_set = [&](const std::vector<double>& v) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
      if (v[i] != v[j]) return top ? v[i] > v[j] : v[i] < v[j];
      return i < j;
    });
    order.resize(m);
    std::sort(order.begin(), order.end());
    return order;
  };
  const auto sb = top_set(base);
  const auto sa = top_set(adj);
  std::vector<int> inter;
  std::set_intersection(sb.begin(), sb.end(), sa.begin(), sa.end(),
                        std::back_inserter(inter));
  return static_cast<double>(inter.size()) / m;
}

}  // namespace

RankReport rank_compare(const std::vector<double>& baseline,
                        const std::vector<double>& adjusted) {
  require(baseline.size() == adjusted.size(), "E_VALIDATION",
          "rank vectors must have equal length");
  require(baseline.size() >= 5, "E_VALIDATION", "rank comparison needs n >= 5");
  RankReport rep;
  rep.n = static_cast<int>(baseline.size());
  const auto rb = percentile_ranks(baseline);
  const auto ra = percentile_ranks(adjusted);
  rep.spearman = pearson(rb, ra);
  rep.kendall = kendall_tau_b(baseline, adjusted);
  rep.dcor = distance_correlation(rb, ra);
  rep.top1_retention = retention(baseline, adjusted, 0.01, true);
  rep.top_decile_retention = retention(baseline, adjusted, 0.10, true);
  rep.bottom1_retention = retention(baseline, adjusted, 0.01, false);
  return rep;
}

RobustLine tukey_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "E_VALIDATION", "x and y must be the same length");
  const int n = static_cast<int>(x.size());
  require(n >= 3, "E_VALIDATION", "robust line needs at least 3 points");
  const double c = 4.685;

  auto wls = [&](const std::vector<double>& w, double& b0, double& b1) {
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (int i = 0; i < n; ++i) {
      sw += w[i];
      swx += w[i] * x[i];
      swy += w[i] * y[i];
      swxx += w[i] * x[i] * x[i];
      swxy += w[i] * x[i] * y[i];
    }
    const double det = sw * swxx - swx * swx;
    require(std::abs(det) > 1e-12 * std::max(1.0, swxx), "E_NUMERIC",
            "degenerate x in robust line fit");
    b1 = (sw * swxy - swx * swy) / det;
    b0 = (swy - b1 * swx) / sw;
  };

  RobustLine line;
  std::vector<double> w(n, 1.0), resid(n);
  wls(w, line.intercept, line.slope);
  double scale = 0;
  for (int iter = 0; iter < 50; ++iter) {
    for (int i = 0; i < n; ++i) resid[i] = y[i] - line.intercept - line.slope * x[i];
    std::vector<double> absr(n);
    for (int i = 0; i < n; ++i) absr[i] = std::abs(resid[i]);
    scale = 1.4826 * median_of(absr);
    if (scale < 1e-12) break;  // exact fit
    for (int i = 0; i < n; ++i) {
      const double u = resid[i] / (c * scale);
      w[i] = std::abs(u) < 1.0 ? (1 - u * u) * (1 - u * u) : 0.0;
    }
    const double prev_b0 = line.intercept, prev_b1 = line.slope;
    wls(w, line.intercept, line.slope);
    line.n_iter = iter + 1;
    if (std::abs(prev_b0 - line.intercept) < 1e-12 &&
        std::abs(prev_b1 - line.slope) < 1e-12)
      break;
  }
  line.scale = scale;

  // M-estimator covariance: s^2 * (sum psi^2 / (n-2)) / (mean psi')^2 * (X'X)^-1.
  double sum_psi2 = 0, sum_dpsi = 0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - line.intercept - line.slope * x[i];
    if (scale < 1e-12) continue;
    const double u = r / scale;
    const double t = u / c;
    if (std::abs(t) < 1.0) {
      const double psi = u * (1 - t * t) * (1 - t * t);
      const double dpsi = (1 - t * t) * (1 - 5 * t * t);
      sum_psi2 += psi * psi;
      sum_dpsi += dpsi;
    }
  }
  double sx = 0, sxx = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sxx += x[i] * x[i];
  }
  const double det = n * sxx - sx * sx;
  if (scale >= 1e-12 && sum_dpsi > 0 && det > 0) {
    const double kappa =
        scale * scale * (sum_psi2 / std::max(n - 2, 1)) / std::pow(sum_dpsi / n, 2);
    line.intercept_se = std::sqrt(kappa * sxx / det);
    line.slope_se = std::sqrt(kappa * n / det);
  }
  return line;
}

ScalingPlotData scaling_plot_data(const std::vector<double>& scores,
                                  const std::vector<double>& x,
                                  const std::vector<std::string>& groups,
                                  bool scores_are_latent) {
  require(scores.size() == x.size(), "E_VALIDATION", "scores and x must align");
  require(groups.empty() || groups.size() == scores.size(), "E_VALIDATION",
          "groups must align with scores");
  const int n = static_cast<int>(scores.size());
  require(n >= 3, "E_VALIDATION", "scaling plot needs at least 3 points");
  for (int i = 0; i < n; ++i)
    require(std::isfinite(scores[i]) && std::isfinite(x[i]), "E_VALIDATION",
            "scaling plot inputs must be finite");

  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[i] = scores_are_latent ? norm_cdf(scores[i]) : scores[i];
  const double lo = *std::min_element(s.begin(), s.end());
  const double hi = *std::max_element(s.begin(), s.end());
  ScalingPlotData out;
  out.x = x;
  out.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const double scaled = hi > lo ? 1.0 + 99.0 * (s[i] - lo) / (hi - lo) : 1.0;
    out.y[i] = std::log10(scaled);
  }
  out.group = groups.empty() ? std::vector<std::string>(n, "all") : groups;
  out.line = tukey_line(out.x, out.y);
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_group;
  for (int i = 0; i < n; ++i) {
    by_group[out.group[i]].first.push_back(out.x[i]);
    by_group[out.group[i]].second.push_back(out.y[i]);
  }
  for (const auto& [g, xy] : by_group) {
    if (static_cast<int>(xy.first.size()) >= 3)
      out.group_lines[g] = tukey_line(xy.first, xy.second);
  }
  return out;
}

}  // namespace benchmap
