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

#include "core/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "core/common.hpp"
#include "core/csv.hpp"

namespace benchmap {

using nlohmann::json;

namespace {

json aggregate_json(const Aggregate& a) {
  json j;
  j["mean"] = a.mean;
  j["se"] = a.se;
  j["n_valid"] = a.n_valid;
  if (a.tau2_defined) {
    j["tau2"] = a.tau2;
    j["reliability"] = a.reliability;
  } else {
    j["tau2"] = nullptr;
    j["reliability"] = nullptr;
    j["reliability_undefined"] = true;
  }
  return j;
}

json robust_line_json(const RobustLine& l) {
  json j;
  j["intercept"] = l.intercept;
  j["slope"] = l.slope;
  j["intercept_se"] = l.intercept_se;
  j["slope_se"] = l.slope_se;
  j["scale"] = l.scale;
  return j;
}

}  // namespace

void Report::write(const std::string& out_dir) const {
  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir + "/" + name + ".json", json);
  for (const auto& [fname, csv] : tables) write_text_file(out_dir + "/" + fname, csv);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "E_IO", "cannot write file: " + path);
  out << text;
}

Report report_cfa_campaign(const CfaCampaignResult& result) {
  Report rep;
  rep.name = "cfa_summary";

  json j;
  j["replications"] = result.n_replications;
  j["failed_replications"] = result.n_failed_replications;
  json medians = json::object();
  json ranks = json::object();
  for (std::size_t s = 0; s < result.structures.size(); ++s) {
    json mrow = json::object(), rrow = json::object();
    for (std::size_t m = 0; m < result.metrics.size(); ++m) {
      mrow[result.metrics[m]] = result.median_by_metric(s, m);
      rrow[result.metrics[m]] = result.mean_percent_rank(s, m);
    }
    medians[result.structures[s]] = mrow;
    ranks[result.structures[s]] = rrow;
  }
  j["median_by_metric"] = medians;
  j["mean_percent_rank"] = ranks;
  for (const auto& [metric, meta] : result.meta) {
    json mj;
    for (std::size_t s = 0; s < meta.structures.size(); ++s) {
      json row;
      row["alpha"] = meta.alpha(s);
      row["alpha_se"] = meta.alpha_se(s);
      if (meta.has_randomization) {
        row["beta_rand"] = meta.beta(s);
        row["beta_rand_se"] = meta.beta_se(s);
      }
      mj[meta.structures[s]] = row;
    }
    mj["fixed_only"] = meta.fixed_only;
    j["meta_regression"][metric] = mj;
  }
  rep.json = j.dump(2) + "\n";

  CsvTable fit_stats;
  fit_stats.header = {"replication", "structure", "randomized", "failed",  "converged",
                      "heywood",     "rmsea",     "cfi",        "tli",     "srmr",
                      "chi2",        "df",        "aic",        "bic",     "loglik",
                      "auc",         "mae"};
  for (const auto& r : result.rows) {
    fit_stats.rows.push_back(
        {std::to_string(r.replication), r.structure, std::to_string(r.randomized),
         r.failed ? "1" : "0", r.converged ? "1" : "0", r.heywood ? "1" : "0",
         format_double(r.rmsea), format_double(r.cfi), format_double(r.tli),
         format_double(r.srmr), format_double(r.chi2), std::to_string(r.df),
         format_double(r.aic), format_double(r.bic), format_double(r.loglik),
         format_double(r.auc), format_double(r.mae)});
  }
  rep.tables.emplace_back("fit_stats.csv", fit_stats.to_string());

  CsvTable mi;
  mi.header = {"replication", "structure", "bench_a", "bench_b",
               "item_a",      "item_b",    "mi",      "sepc"};
  for (const auto& r : result.mi_rows) {
    mi.rows.push_back({std::to_string(r.replication), r.structure,
                       std::to_string(r.bench_a), std::to_string(r.bench_b),
                       std::to_string(r.item_a), std::to_string(r.item_b),
                       format_double(r.mi), format_double(r.sepc)});
  }
  rep.tables.emplace_back("mi_sepc.csv", mi.to_string());
  return rep;
}

Report report_gstudy(const MixedFit& base_fit, const MixedFit* slope_fit,
                     const ScalingMetrics* metrics, double g_relative, int n_b) {
  Report rep;
  rep.name = "varcomp";
  json j;
  auto fit_json = [](const MixedFit& f) {
    json out;
    out["converged"] = f.converged;
    out["singular"] = f.singular;
    out["sigma2_residual"] = f.sigma2;
    out["reml"] = f.reml;
    json comps = json::object();
    for (const auto& c : f.components) {
      comps[c.term][c.slope ? "slope" : "intercept"] = c.variance;
    }
    out["components"] = comps;
    json shares = json::object();
    for (const auto& [term, share] : variance_shares(f)) shares[term] = share;
    out["shares"] = shares;
    json fixed = json::object();
    for (std::size_t i = 0; i < f.fixed_names.size(); ++i) {
      fixed[f.fixed_names[i]] = {{"estimate", f.beta(static_cast<int>(i))},
                                 {"se", f.beta_se(static_cast<int>(i))}};
    }
    out["fixed"] = fixed;
    return out;
  };
  j["base"] = fit_json(base_fit);
  if (slope_fit) j["slopes"] = fit_json(*slope_fit);
  if (metrics) {
    json m;
    m["snr_beta"] = metrics->snr_infinite ? json(nullptr) : json(metrics->snr_beta);
    m["snr_infinite"] = metrics->snr_infinite;
    m["r_beta"] = metrics->r_beta;
    m["cv_beta"] = metrics->cv_beta;
    m["omega_x"] = metrics->omega_x;
    m["omega_x_minus_b"] = metrics->omega_x_minus_b;
    m["omega_size_all"] = metrics->omega_size_all;
    m["beta"] = metrics->beta;
    json psi = json::object();
    for (const auto& [term, v] : metrics->psi) psi[term] = v;
    m["psi"] = psi;
    j["scaling_metrics"] = m;
  }
  j["g_relative"] = g_relative;
  j["n_b"] = n_b;
  rep.json = j.dump(2) + "\n";

  CsvTable t;
  t.header = {"term", "sigma2_intercept", "sigma2_slope", "p_S", "PSI_S"};
  const MixedFit& f = slope_fit ? *slope_fit : base_fit;
  const auto shares = variance_shares(f);
  for (const auto& term : gstudy_term_names()) {
    double v0 = 0, v1 = 0;
    for (const auto& c : f.components) {
      if (c.term != term) continue;
      (c.slope ? v1 : v0) = c.variance;
    }
    const double share = shares.count(term) ? shares.at(term) : 0.0;
    const double psi =
        metrics && metrics->psi.count(term) ? metrics->psi.at(term) : 0.0;
    t.rows.push_back({term, format_double(v0), format_double(v1), format_double(share),
                      format_double(psi)});
  }
  t.rows.push_back({"residual", format_double(f.sigma2), "",
                    format_double(shares.at("residual")), ""});
  rep.tables.emplace_back("varcomp.csv", t.to_string());
  return rep;
}

Report report_latreg_campaign(const LatRegCampaignResult& result,
                              const ScalingPlotData* plot) {
  Report rep;
  rep.name = "scaling_vector";
  json j;
  j["replications"] = result.n_replications;
  j["failed_replications"] = result.n_failed_replications;
  j["measurement_loglik"] = result.measurement_loglik;
  j["regression_loglik"] = result.regression_loglik;
  json scaling = json::array();
  for (const auto& d : result.scaling) {
    json row = aggregate_json(d.aggregate);
    row["dimension"] = d.dimension;
    scaling.push_back(row);
  }
  j["scaling_vector"] = scaling;
  json covs = json::array();
  for (const auto& d : result.covariates) {
    json row = aggregate_json(d.aggregate);
    row["dimension"] = d.dimension;
    row["covariate"] = d.covariate;
    covs.push_back(row);
  }
  j["covariate_effects"] = covs;
  if (!result.contrib_share.empty()) {
    std::vector<double> v = result.contrib_share;
    std::sort(v.begin(), v.end());
    j["contributor_share_median"] =
        v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  }
  if (plot) {
    j["scaling_plot"]["pooled"] = robust_line_json(plot->line);
    json gl = json::object();
    for (const auto& [g, line] : plot->group_lines) gl[g] = robust_line_json(line);
    j["scaling_plot"]["groups"] = gl;
  }
  rep.json = j.dump(2) + "\n";

  if (plot) {
    CsvTable t;
    t.header = {"x", "y", "group"};
    for (std::size_t i = 0; i < plot->x.size(); ++i)
      t.rows.push_back({format_double(plot->x[i]), format_double(plot->y[i]),
                        plot->group[i]});
    rep.tables.emplace_back("plotdata/scaling.csv", t.to_string());
  }
  return rep;
}

std::string rank_report_json(const RankReport& rank) {
  json j;
  j["n"] = rank.n;
  j["spearman"] = rank.spearman;
  j["kendall_tau_b"] = rank.kendall;
  j["distance_correlation"] = rank.dcor;
  j["top1_retention"] = rank.top1_retention;
  j["top_decile_retention"] = rank.top_decile_retention;
  j["bottom1_retention"] = rank.bottom1_retention;
  return j.dump(2) + "\n";
}

Report report_rank(const RankReport& rank) {
  Report rep;
  rep.name = "rank_report";
  rep.json = rank_report_json(rank);
  return rep;
}

std::string merge_reports(const std::string& dir) {
  json merged = json::object();
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in.good()) continue;
    try {
      json doc = json::parse(in);
      merged[std::filesystem::path(f).stem().string()] = doc;
    } catch (const std::exception&) {
      // non-report JSON files are skipped
    }
  }
  return merged.dump(2) + "\n";
}

std::string ingest_manifest_json(const IngestInfo& responses, const IngestInfo* metadata,
                                 unsigned long long seed, bool has_seed) {
  json j;
  j["responses"] = {{"path", responses.source_path},
                    {"rows_read", responses.n_rows_read},
                    {"rows_kept", responses.n_rows_kept},
                    {"columns", responses.n_cols},
                    {"zero_variance_items", responses.n_zero_variance}};
  if (metadata) {
    j["metadata"] = {{"path", metadata->source_path},
                     {"rows_read", metadata->n_rows_read},
                     {"rows_kept", metadata->n_rows_kept},
                     {"columns", metadata->n_cols},
                     {"dropped_nonpositive_size", metadata->n_dropped}};
  }
  if (has_seed) j["seed"] = seed;
  else j["seed"] = nullptr;
  return j.dump(2) + "\n";
}

}  // namespace benchmap
