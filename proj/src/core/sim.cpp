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

#include "core/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "core/common.hpp"
#include "core/rng.hpp"

namespace benchmap {

using nlohmann::json;

int CfaGenSpec::n_items() const {
  int p = 0;
  for (int c : items_per_bench) p += c;
  return p;
}

StructureSpec CfaGenSpec::structure() const {
  StructureSpec s;
  s.kind = kind;
  s.n_benches = n_benches();
  for (int k = 0; k < n_benches(); ++k)
    for (int j = 0; j < items_per_bench[k]; ++j) s.bench_of.push_back(k);
  return s;
}

CfaGenSpec make_cfa_spec(StructureKind kind, int n_models, const std::vector<int>& ipb,
                         double lo_f, double hi_f, double lo_g, double hi_g,
                         std::uint64_t seed) {
  CfaGenSpec spec;
  spec.kind = kind;
  spec.n_models = n_models;
  spec.items_per_bench = ipb;
  spec.seed = seed;
  const int p = spec.n_items();
  Rng rng(seed ^ 0x5152cafeULL);
  spec.loadings.resize(p);
  for (int j = 0; j < p; ++j) spec.loadings(j) = rng.uniform(lo_f, hi_f);
  const StructureSpec st = spec.structure();
  if (st.bifactor_family()) {
    spec.general.resize(p);
    for (int j = 0; j < p; ++j) spec.general(j) = rng.uniform(lo_g, hi_g);
  }
  spec.tau = Eigen::VectorXd::Zero(p);
  return spec;
}

ResponseMatrix gen_cfa_data(const CfaGenSpec& spec) {
  const int p = spec.n_items();
  const int N = spec.n_models;
  require(p >= 2 && N >= 2, "E_VALIDATION", "generator needs N >= 2 and p >= 2");
  const StructureSpec st = spec.structure();
  const int m = st.n_factors();

  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(p, m);
  {
    // Reuse the structure conventions to place loadings.
    Eigen::VectorXd params = Eigen::VectorXd::Zero(st.n_params());
    const ParamLayout l = layout_of(st);
    params.segment(l.off_load, p) = spec.loadings;
    if (l.off_general >= 0) params.segment(l.off_general, p) = spec.general;
    Eigen::MatrixXd phi_unused;
    factor_model(st, params, lambda, phi_unused);
  }
  Eigen::MatrixXd phi = spec.factor_cov.size() > 0
                            ? spec.factor_cov
                            : Eigen::MatrixXd::Identity(m, m);
  require(phi.rows() == m && phi.cols() == m, "E_VALIDATION", "factor_cov has wrong shape");
  Eigen::LLT<Eigen::MatrixXd> phi_llt(phi);
  require(phi_llt.info() == Eigen::Success, "E_NON_PSD", "factor covariance is not PSD");
  const Eigen::MatrixXd phi_chol = phi_llt.matrixL();

  // Residual covariance: diag(1 - communality) plus injected correlations
  // scaled by the residual SDs.
  Eigen::VectorXd theta(p);
  for (int j = 0; j < p; ++j) {
    const Eigen::VectorXd lam = lambda.row(j).transpose();
    const double comm = lam.dot(phi * lam);
    require(comm < 1.0, "E_VALIDATION", "communality >= 1 in generator spec");
    theta(j) = 1.0 - comm;
  }
  Eigen::MatrixXd theta_cov = theta.asDiagonal();
  for (const auto& [a, b, r] : spec.resid_corr) {
    theta_cov(a, b) = theta_cov(b, a) = r * std::sqrt(theta(a) * theta(b));
  }
  Eigen::LLT<Eigen::MatrixXd> theta_llt(theta_cov);
  require(theta_llt.info() == Eigen::Success, "E_NON_PSD",
          "residual covariance is not PSD after correlation injection");
  const Eigen::MatrixXd theta_chol = theta_llt.matrixL();

  Eigen::VectorXd tau = spec.tau.size() > 0 ? spec.tau : Eigen::VectorXd::Zero(p);

  ResponseMatrix rm;
  rm.values.resize(N, p);
  Rng rng(spec.seed);
  Eigen::VectorXd z(m), e(p);
  for (int i = 0; i < N; ++i) {
    for (int d = 0; d < m; ++d) z(d) = rng.normal();
    for (int j = 0; j < p; ++j) e(j) = rng.normal();
    const Eigen::VectorXd ystar = lambda * (phi_chol * z) + theta_chol * e;
    for (int j = 0; j < p; ++j) rm.values(i, j) = ystar(j) > tau(j) ? 1 : 0;
  }
  for (int i = 0; i < N; ++i) rm.model_ids.push_back("m" + std::to_string(i));
  for (int k = 0; k < spec.n_benches(); ++k) rm.bench_ids.push_back("bench" + std::to_string(k));
  rm.bench_of = st.bench_of;
  for (int k = 0, j = 0; k < spec.n_benches(); ++k)
    for (int t = 0; t < spec.items_per_bench[k]; ++t, ++j)
      rm.item_ids.push_back("q" + std::to_string(t));
  return rm;
}

int IrtGenSpec::n_items() const {
  int p = 0;
  for (int c : items_per_bench) p += c;
  return p;
}

IrtGenSpec make_irt_spec(int n_models, const std::vector<int>& ipb, double a_lo, double a_hi,
                         double b_sd, std::uint64_t seed) {
  IrtGenSpec spec;
  spec.n_models = n_models;
  spec.items_per_bench = ipb;
  spec.seed = seed;
  const int p = spec.n_items();
  Rng rng(seed ^ 0x17a7ULL);
  spec.a_general.resize(p);
  spec.a_specific.resize(p);
  spec.b.resize(p);
  for (int j = 0; j < p; ++j) spec.a_general(j) = rng.uniform(a_lo, a_hi);
  for (int j = 0; j < p; ++j) spec.a_specific(j) = rng.uniform(a_lo, a_hi);
  for (int j = 0; j < p; ++j) spec.b(j) = rng.normal(0.0, b_sd);
  return spec;
}

IrtGenResult gen_irt_data(const IrtGenSpec& spec) {
  const int p = spec.n_items();
  const int N = spec.n_models;
  const int K = spec.n_benches();
  const int dims = K + 1;
  require(p >= 2 && N >= 2 && K >= 1, "E_VALIDATION", "invalid IRT generator spec");

  IrtGenResult out;
  Rng rng(spec.seed);

  const auto& flags = EcosystemMetadata::deploy_flag_names();
  const int nw = static_cast<int>(flags.size());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(N);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(N, nw);
  std::vector<int> contrib(N, 0);
  if (spec.with_regression) {
    for (int i = 0; i < N; ++i) x(i) = rng.uniform(spec.x_lo, spec.x_hi);
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < nw; ++c) w(i, c) = rng.bernoulli(spec.w_prob) ? 1.0 : 0.0;
    const int C = std::max(spec.n_contributors, 1);
    for (int i = 0; i < N; ++i) contrib[i] = static_cast<int>(rng.below(C));
  }
  Eigen::MatrixXd u;  // contributor effects per dimension
  if (spec.with_regression && spec.n_contributors > 0) {
    u.resize(spec.n_contributors, dims);
    for (int c = 0; c < spec.n_contributors; ++c)
      for (int d = 0; d < dims; ++d) u(c, d) = rng.normal(0.0, spec.contrib_sd);
  }

  out.theta_true.resize(N, dims);
  out.rm.values.resize(N, p);
  const StructureSpec st = [&] {
    StructureSpec s;
    s.n_benches = K;
    for (int k = 0; k < K; ++k)
      for (int j = 0; j < spec.items_per_bench[k]; ++j) s.bench_of.push_back(k);
    return s;
  }();

  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd theta(dims);
    if (spec.with_regression) {
      Eigen::VectorXd z(2 + nw);
      z(0) = 1.0;
      z(1) = x(i);
      z.segment(2, nw) = w.row(i).transpose();
      Eigen::VectorXd mean = spec.gamma.transpose() * z;
      for (int d = 0; d < dims; ++d) {
        double mu = mean(d);
        if (u.size() > 0) mu += u(contrib[i], d);
        theta(d) = mu + rng.normal();
      }
    } else {
      for (int d = 0; d < dims; ++d) theta(d) = rng.normal();
    }
    out.theta_true.row(i) = theta.transpose();
    for (int j = 0; j < p; ++j) {
      const int k = st.bench_of[j];
      const double lin =
          spec.a_general(j) * theta(0) + spec.a_specific(j) * theta(1 + k) - spec.b(j);
      out.rm.values(i, j) = rng.bernoulli(logistic(lin)) ? 1 : 0;
    }
  }

  for (int i = 0; i < N; ++i) out.rm.model_ids.push_back("m" + std::to_string(i));
  for (int k = 0; k < K; ++k) out.rm.bench_ids.push_back("bench" + std::to_string(k));
  out.rm.bench_of = st.bench_of;
  for (int k = 0, j = 0; k < K; ++k)
    for (int t = 0; t < spec.items_per_bench[k]; ++t, ++j)
      out.rm.item_ids.push_back("q" + std::to_string(t));

  if (spec.with_regression) {
    EcosystemMetadata& md = out.md;
    md.model_ids = out.rm.model_ids;
    md.x = x;
    md.w = w;
    auto& cols = md.columns;
    for (const char* name : {"architecture", "generation", "author", "removed", "not_avail",
                             "type", "chat_template", "mo_e", "merged", "precision"})
      cols[name] = std::vector<std::string>(N);
    for (int i = 0; i < N; ++i) {
      cols["architecture"][i] = "arch" + std::to_string(i % 7);
      cols["generation"][i] = "g0";
      cols["author"][i] = "c" + std::to_string(contrib[i]);
      cols["removed"][i] = "0";
      cols["not_avail"][i] = "0";
      std::string type = "pretrained";
      if (w(i, 1) > 0) type = "chat";
      else if (w(i, 2) > 0) type = "domain_tune";
      else if (w(i, 5) > 0) type = "continuous_pretrain";
      cols["type"][i] = type;
      cols["chat_template"][i] = w(i, 0) > 0 ? "1" : "0";
      cols["mo_e"][i] = w(i, 6) > 0 ? "1" : "0";
      cols["merged"][i] = w(i, 3) > 0 ? "1" : "0";
      cols["precision"][i] = "bf16";
    }
  }
  return out;
}

namespace {

const std::vector<std::string>& gstudy_terms() {
  static const std::vector<std::string> terms = {"A",   "B",   "C",   "D",  "AB",  "AC", "AD",
                                                 "BC",  "BD",  "CD",  "ABC", "ABD", "ACD",
                                                 "BCD"};
  return terms;
}

}  // namespace

EcosystemMetadata gen_gstudy_scores(const GstudyGenSpec& spec) {
  const int N = spec.n_models;
  require(N >= 2 && spec.n_benches >= 1, "E_VALIDATION", "invalid gstudy generator spec");

  EcosystemMetadata md;
  Rng rng(spec.seed);

  std::vector<int> a_of(N), c_of(N), d_of(N);
  for (int i = 0; i < N; ++i) a_of[i] = static_cast<int>(rng.below(spec.levels_a));
  for (int i = 0; i < N; ++i) c_of[i] = static_cast<int>(rng.below(spec.levels_c));
  for (int i = 0; i < N; ++i) d_of[i] = static_cast<int>(rng.below(spec.levels_d));
  md.x.resize(N);
  for (int i = 0; i < N; ++i) md.x(i) = rng.uniform(spec.x_lo, spec.x_hi);

  md.model_ids.resize(N);
  auto& cols = md.columns;
  for (const char* name : {"architecture", "generation", "author", "removed", "not_avail",
                           "type", "chat_template", "mo_e", "merged", "precision"})
    cols[name] = std::vector<std::string>(N);
  for (int i = 0; i < N; ++i) {
    md.model_ids[i] = "m" + std::to_string(i);
    cols["architecture"][i] = "arch" + std::to_string(a_of[i]);
    cols["generation"][i] = "g0";
    cols["author"][i] = "auth" + std::to_string(c_of[i]);
    cols["removed"][i] = "0";
    cols["not_avail"][i] = "0";
    cols["type"][i] = "pretrained";
    cols["chat_template"][i] = "0";
    cols["mo_e"][i] = "0";
    cols["merged"][i] = "0";
    cols["precision"][i] = "p" + std::to_string(d_of[i]);
  }
  md.w = Eigen::MatrixXd::Zero(N, static_cast<int>(EcosystemMetadata::deploy_flag_names().size()));
  for (int i = 0; i < N; ++i) md.w(i, 4) = 1.0;  // pretrained

  // Effects per (term, level combination) come from counter streams keyed by
  // the level ids, independent of traversal order.
  auto term_effect = [&](const std::string& term, int a, int b, int c, int d, bool slope,
                         double sd) {
    if (sd <= 0.0) return 0.0;
    std::uint64_t key = 1469598103934665603ULL;
    auto mixin = [&key](std::uint64_t v) { key = (key ^ v) * 1099511628211ULL; };
    for (char f : term) {
      if (f == 'A') mixin(2 + static_cast<std::uint64_t>(a));
      if (f == 'B') mixin(1000003 + static_cast<std::uint64_t>(b));
      if (f == 'C') mixin(2000003 + static_cast<std::uint64_t>(c));
      if (f == 'D') mixin(3000017 + static_cast<std::uint64_t>(d));
    }
    std::uint64_t tid = 0;
    for (char f : term) tid = tid * 5 + (f - 'A' + 1);
    StreamRng sr(spec.seed ^ 0xfacee5ULL, tid * 2 + (slope ? 1 : 0), key);
    return sd * sr.normal();
  };

  for (int i = 0; i < N; ++i) {
    for (int b = 0; b < spec.n_benches; ++b) {
      double s = spec.mu + spec.beta * md.x(i);
      for (const auto& term : gstudy_terms()) {
        const auto it0 = spec.var_intercept.find(term);
        const auto it1 = spec.var_slope.find(term);
        const double sd0 = it0 != spec.var_intercept.end() ? std::sqrt(it0->second) : 0.0;
        const double sd1 = it1 != spec.var_slope.end() ? std::sqrt(it1->second) : 0.0;
        s += term_effect(term, a_of[i], b, c_of[i], d_of[i], false, sd0);
        s += term_effect(term, a_of[i], b, c_of[i], d_of[i], true, sd1) * md.x(i);
      }
      s += rng.normal(0.0, std::sqrt(spec.resid_var));
      md.scores.push_back({i, "bench" + std::to_string(b), s});
    }
  }
  return md;
}

void gen_line_with_outliers(int n, double intercept, double slope, double noise_sd,
                            double outlier_frac, double outlier_shift, std::uint64_t seed,
                            std::vector<double>& x, std::vector<double>& y) {
  Rng rng(seed);
  x.resize(n);
  y.resize(n);
  for (int i = 0; i < n; ++i) {
    x[i] = rng.uniform(0.0, 3.0);
    y[i] = intercept + slope * x[i] + (noise_sd > 0 ? rng.normal(0.0, noise_sd) : 0.0);
    if (outlier_frac > 0 && rng.bernoulli(outlier_frac)) y[i] += outlier_shift;
  }
}

namespace {

Eigen::VectorXd json_vector(const json& j, int size, const std::string& what) {
  Eigen::VectorXd v(size);
  if (j.is_number()) {
    v.setConstant(j.get<double>());
  } else if (j.is_array()) {
    require(static_cast<int>(j.size()) == size, "E_CONFIG",
            what + " must have " + std::to_string(size) + " entries");
    for (int i = 0; i < size; ++i) v(i) = j[i].get<double>();
  } else {
    fail("E_CONFIG", what + " must be a number or an array");
  }
  return v;
}

}  // namespace

std::string run_simulate(const std::string& genspec_json, const std::string& out_dir) {
  json cfg;
  try {
    cfg = json::parse(genspec_json);
  } catch (const std::exception& e) {
    fail("E_CONFIG", std::string("genspec is not valid JSON: ") + e.what());
  }
  const std::string family = cfg.value("family", "cfa");
  const std::uint64_t seed = cfg.value("seed", 1ULL);
  std::filesystem::create_directories(out_dir);

  json truth;
  truth["family"] = family;
  truth["seed"] = seed;
  truth["generator"] = Rng::kGeneratorId;
  truth["normal_algorithm"] = Rng::kNormalId;

  if (family == "cfa") {
    std::vector<int> ipb = cfg.at("items_per_bench").get<std::vector<int>>();
    CfaGenSpec spec = make_cfa_spec(structure_from_string(cfg.value("kind", "bifact")),
                                    cfg.value("n_models", 1000), ipb,
                                    cfg.value("loading_lo", 0.4), cfg.value("loading_hi", 0.7),
                                    cfg.value("general_lo", 0.4), cfg.value("general_hi", 0.7),
                                    seed);
    if (cfg.contains("tau")) spec.tau = json_vector(cfg["tau"], spec.n_items(), "tau");
    if (cfg.contains("resid_corr")) {
      for (const auto& rc : cfg["resid_corr"])
        spec.resid_corr.emplace_back(rc[0].get<int>(), rc[1].get<int>(), rc[2].get<double>());
    }
    const ResponseMatrix rm = gen_cfa_data(spec);
    write_responses(rm, out_dir + "/responses.csv", "wide");
    truth["kind"] = to_string(spec.kind);
    truth["n_models"] = spec.n_models;
    truth["items_per_bench"] = spec.items_per_bench;
    truth["loadings"] = std::vector<double>(spec.loadings.data(),
                                            spec.loadings.data() + spec.loadings.size());
    if (spec.general.size() > 0)
      truth["general"] =
          std::vector<double>(spec.general.data(), spec.general.data() + spec.general.size());
  } else if (family == "irt") {
    std::vector<int> ipb = cfg.at("items_per_bench").get<std::vector<int>>();
    IrtGenSpec spec = make_irt_spec(cfg.value("n_models", 1000), ipb, cfg.value("a_lo", 0.8),
                                    cfg.value("a_hi", 2.0), cfg.value("b_sd", 1.0), seed);
    if (cfg.contains("regression")) {
      const auto& reg = cfg["regression"];
      spec.with_regression = true;
      const int dims = spec.n_benches() + 1;
      const int nw = static_cast<int>(EcosystemMetadata::deploy_flag_names().size());
      spec.gamma = Eigen::MatrixXd::Zero(2 + nw, dims);
      if (reg.contains("beta"))
        spec.gamma.row(1) = json_vector(reg["beta"], dims, "beta").transpose();
      if (reg.contains("w_effects")) {
        for (int c = 0; c < nw; ++c)
          spec.gamma.row(2 + c) =
              json_vector(reg["w_effects"][c], dims, "w_effects row").transpose();
      }
      spec.n_contributors = reg.value("n_contributors", 50);
      spec.contrib_sd = reg.value("contrib_sd", 0.3);
      spec.x_lo = reg.value("x_lo", -1.0);
      spec.x_hi = reg.value("x_hi", 1.0);
      spec.w_prob = reg.value("w_prob", 0.3);
    }
    IrtGenResult res = gen_irt_data(spec);
    write_responses(res.rm, out_dir + "/responses.csv", "wide");
    if (spec.with_regression)
      write_metadata(res.md, out_dir + "/metadata.csv", out_dir + "/scores.csv");
    truth["n_models"] = spec.n_models;
    truth["items_per_bench"] = spec.items_per_bench;
    truth["a_general"] = std::vector<double>(spec.a_general.data(),
                                             spec.a_general.data() + spec.a_general.size());
    truth["a_specific"] = std::vector<double>(spec.a_specific.data(),
                                              spec.a_specific.data() + spec.a_specific.size());
    truth["b"] = std::vector<double>(spec.b.data(), spec.b.data() + spec.b.size());
    truth["with_regression"] = spec.with_regression;
  } else if (family == "gstudy") {
    GstudyGenSpec spec;
    spec.n_models = cfg.value("n_models", 500);
    spec.n_benches = cfg.value("benches", 6);
    if (cfg.contains("facets")) {
      spec.levels_a = cfg["facets"].value("a", 10);
      spec.levels_c = cfg["facets"].value("c", 20);
      spec.levels_d = cfg["facets"].value("d", 4);
    }
    spec.mu = cfg.value("mu", 50.0);
    spec.beta = cfg.value("beta", 0.0);
    spec.resid_var = cfg.value("resid_var", 1.0);
    if (cfg.contains("var_intercept"))
      spec.var_intercept = cfg["var_intercept"].get<std::map<std::string, double>>();
    if (cfg.contains("var_slope"))
      spec.var_slope = cfg["var_slope"].get<std::map<std::string, double>>();
    spec.seed = seed;
    EcosystemMetadata md = gen_gstudy_scores(spec);
    write_metadata(md, out_dir + "/metadata.csv", out_dir + "/scores.csv");
    truth["n_models"] = spec.n_models;
    truth["benches"] = spec.n_benches;
    truth["mu"] = spec.mu;
    truth["beta"] = spec.beta;
    truth["var_intercept"] = spec.var_intercept;
    truth["var_slope"] = spec.var_slope;
    truth["resid_var"] = spec.resid_var;
  } else {
    fail("E_CONFIG", "unknown simulate family '" + family + "'");
  }

  const std::string truth_text = truth.dump(2) + "\n";
  std::ofstream out(out_dir + "/truth.json", std::ios::binary);
  require(out.good(), "E_IO", "cannot write " + out_dir + "/truth.json");
  out << truth_text;
  return truth_text;
}

}  // namespace benchmap
