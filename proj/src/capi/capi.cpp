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

#include "benchmap/benchmap.h"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "core/analysis.hpp"
#include "core/common.hpp"
#include "core/data.hpp"
#include "core/gtheory.hpp"
#include "core/report.hpp"
#include "core/sim.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_code;

struct DatasetImpl {
  benchmap::ResponseMatrix rm;
  std::optional<benchmap::EcosystemMetadata> md;
  benchmap::IngestInfo responses_info;
  benchmap::IngestInfo metadata_info;
};

struct ReportImpl {
  benchmap::Report report;
};

DatasetImpl* unwrap(bm_dataset* d) { return reinterpret_cast<DatasetImpl*>(d); }
const DatasetImpl* unwrap(const bm_dataset* d) {
  return reinterpret_cast<const DatasetImpl*>(d);
}
const ReportImpl* unwrap(const bm_report* r) { return reinterpret_cast<const ReportImpl*>(r); }

bm_status status_for_code(const std::string& code) {
  static const std::set<std::string> parse = {"E_CSV_COLUMN",   "E_CSV_SHAPE",
                                              "E_CSV_EMPTY",    "E_PARSE_NUMBER",
                                              "E_HEADER",       "E_RESPONSE_VALUE",
                                              "E_DUPLICATE_PAIR", "E_LAYOUT"};
  static const std::set<std::string> numeric = {"E_NUMERIC",       "E_DIVERGED",
                                                "E_NON_PSD",       "E_RANK_DEFICIENT",
                                                "E_TETRA_FAILURES", "E_NOT_CONVERGED",
                                                "E_NO_VALID_ESTIMATES"};
  if (code == "E_IO") return BM_E_IO;
  if (code == "E_CONFIG" || code == "E_STRUCTURE") return BM_E_INVALID_ARGUMENT;
  if (code == "E_CAMPAIGN_FAILED") return BM_E_CAMPAIGN_FAILED;
  if (parse.count(code)) return BM_E_PARSE;
  if (numeric.count(code)) return BM_E_NUMERIC;
  return BM_E_VALIDATION;
}

template <typename Fn>
bm_status guard(Fn&& fn) {
  g_last_error.clear();
  g_last_code.clear();
  try {
    fn();
    return BM_OK;
  } catch (const benchmap::Error& e) {
    g_last_error = e.what();
    g_last_code = e.code();
    return status_for_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    g_last_code = "E_INTERNAL";
    return BM_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    g_last_code = "E_INTERNAL";
    return BM_E_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_config(const char* config_json) {
  if (config_json == nullptr || config_json[0] == '\0') return json::object();
  try {
    return json::parse(config_json);
  } catch (const std::exception& e) {
    benchmap::fail("E_CONFIG", std::string("config is not valid JSON: ") + e.what());
  }
}

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) benchmap::fail("E_CONFIG", where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key))
      benchmap::fail("E_CONFIG", "unknown config key '" + key + "' in " + where);
  }
}

benchmap::CampaignConfig campaign_config(const json& cfg, bool latreg) {
  benchmap::CampaignConfig config;
  std::set<std::string> allowed = {"replications", "items_per_bench", "seed",
                                   "holdout_fraction", "jobs"};
  if (latreg) {
    allowed.insert("mhrm");
    allowed.insert("plot_group_column");
  } else {
    allowed.insert("structures");
    allowed.insert("permute");
    allowed.insert("mi_pairs");
  }
  check_keys(cfg, allowed, latreg ? "latreg config" : "cfa config");
  config.replications = cfg.value("replications", 1);
  config.seed = cfg.value("seed", 1ULL);
  config.jobs = cfg.value("jobs", 0);
  config.holdout_fraction = cfg.value("holdout_fraction", 0.2);
  if (cfg.contains("items_per_bench")) {
    const auto& v = cfg["items_per_bench"];
    if (v.is_number_integer()) config.items_per_bench_default = v.get<int>();
    else config.items_per_bench = v.get<std::vector<int>>();
  }
  if (!latreg) {
    config.permutation_control = cfg.value("permute", false);
    config.mi_pairs = cfg.value("mi_pairs", 200);
    if (cfg.contains("structures")) {
      config.structures.clear();
      for (const auto& s : cfg["structures"])
        config.structures.push_back(benchmap::structure_from_string(s.get<std::string>()));
    }
  } else if (cfg.contains("mhrm")) {
    const auto& m = cfg["mhrm"];
    check_keys(m,
               {"cycles", "burnin", "gain_exponent", "proposal_sd", "target_acceptance",
                "mh_steps", "scoring_sweeps", "conv_tol", "conv_window", "seed"},
               "mhrm config");
    config.mhrm.cycles = m.value("cycles", config.mhrm.cycles);
    config.mhrm.burnin = m.value("burnin", config.mhrm.burnin);
    config.mhrm.gain_exponent = m.value("gain_exponent", config.mhrm.gain_exponent);
    config.mhrm.proposal_sd = m.value("proposal_sd", config.mhrm.proposal_sd);
    config.mhrm.target_acceptance =
        m.value("target_acceptance", config.mhrm.target_acceptance);
    config.mhrm.mh_steps = m.value("mh_steps", config.mhrm.mh_steps);
    config.mhrm.scoring_sweeps = m.value("scoring_sweeps", config.mhrm.scoring_sweeps);
    config.mhrm.conv_tol = m.value("conv_tol", config.mhrm.conv_tol);
    config.mhrm.conv_window = m.value("conv_window", config.mhrm.conv_window);
    config.mhrm.seed = m.value("seed", config.seed);
  }
  if (latreg && !cfg.contains("mhrm")) config.mhrm.seed = config.seed;
  return config;
}

}  // namespace

extern "C" {

const char* bm_version(void) { return "0.1.0"; }

const char* bm_status_name(bm_status status) {
  switch (status) {
    case BM_OK: return "ok";
    case BM_E_INVALID_ARGUMENT: return "invalid_argument";
    case BM_E_VALIDATION: return "validation";
    case BM_E_PARSE: return "parse";
    case BM_E_IO: return "io";
    case BM_E_NUMERIC: return "numeric";
    case BM_E_CAMPAIGN_FAILED: return "campaign_failed";
    case BM_E_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* bm_last_error(void) { return g_last_error.c_str(); }
const char* bm_last_error_code(void) { return g_last_code.c_str(); }

void bm_string_free(char* s) { std::free(s); }

bm_status bm_dataset_load(const char* responses_csv_path, const char* layout,
                          bm_dataset** out) {
  if (!responses_csv_path || !layout || !out) {
    g_last_error = "null argument";
    g_last_code = "E_CONFIG";
    return BM_E_INVALID_ARGUMENT;
  }
  return guard([&] {
    auto impl = std::make_unique<DatasetImpl>();
    impl->rm = benchmap::ingest_responses(responses_csv_path, layout, &impl->responses_info);
    *out = reinterpret_cast<bm_dataset*>(impl.release());
  });
}

bm_status bm_dataset_attach_metadata(bm_dataset* dataset, const char* metadata_csv_path,
                                     const char* scores_csv_path) {
  if (!dataset || !metadata_csv_path || !scores_csv_path) {
    g_last_error = "null argument";
    g_last_code = "E_CONFIG";
    return BM_E_INVALID_ARGUMENT;
  }
  return guard([&] {
    DatasetImpl* impl = unwrap(dataset);
    benchmap::EcosystemMetadata md =
        benchmap::ingest_metadata(metadata_csv_path, scores_csv_path, &impl->metadata_info);
    // Align metadata rows to the response matrix's model order.
    benchmap::EcosystemMetadata aligned;
    aligned.dropped_nonpositive_size = md.dropped_nonpositive_size;
    const int n = impl->rm.n_models();
    aligned.model_ids.resize(n);
    aligned.x.resize(n);
    aligned.w.resize(n, md.w.cols());
    for (auto& [name, col] : md.columns) aligned.columns[name].resize(n);
    std::vector<int> remap(md.n_models(), -1);
    for (int i = 0; i < n; ++i) {
      const int src = md.find_model(impl->rm.model_ids[i]);
      benchmap::require(src >= 0, "E_META_ALIGN",
                        "metadata is missing model '" + impl->rm.model_ids[i] + "'");
      remap[src] = i;
      aligned.model_ids[i] = md.model_ids[src];
      aligned.x(i) = md.x(src);
      aligned.w.row(i) = md.w.row(src);
      for (auto& [name, col] : md.columns) aligned.columns[name][i] = col[src];
    }
    for (const auto& obs : md.scores) {
      if (remap[obs.model] >= 0)
        aligned.scores.push_back({remap[obs.model], obs.bench, obs.value});
    }
    impl->md = std::move(aligned);
  });
}

bm_status bm_dataset_simulate(const char* genspec_json, bm_dataset** out, char** truth_json) {
  if (!genspec_json || !out) {
    g_last_error = "null argument";
    g_last_code = "E_CONFIG";
    return BM_E_INVALID_ARGUMENT;
  }
  return guard([&] {
    // Reuse the directory writer through a scratch dir-free path: generate in
    // memory via the same entry points the writer uses.
    const json cfg = parse_config(genspec_json);
    const std::string family = cfg.value("family", "cfa");
    auto impl = std::make_unique<DatasetImpl>();
    json truth;
    if (family == "gstudy") {
      benchmap::fail("E_CONFIG",
                     "gstudy simulations carry no response matrix; use "
                     "bm_simulate_to_dir and load the metadata files");
    }
    // Route through temporary text: the sim module owns genspec parsing.
    const std::string tmp =
        (std::filesystem::temp_directory_path() /
         ("benchmap_sim_" + std::to_string(reinterpret_cast<std::uintptr_t>(&impl))))
            .string();
    const std::string truth_text = benchmap::run_simulate(genspec_json, tmp);
    impl->rm = benchmap::ingest_responses(tmp + "/responses.csv", "wide",
                                          &impl->responses_info);
    if (std::filesystem::exists(tmp + "/metadata.csv")) {
      benchmap::EcosystemMetadata md = benchmap::ingest_metadata(
          tmp + "/metadata.csv", tmp + "/scores.csv", &impl->metadata_info);
      impl->md = std::move(md);
    }
    std::filesystem::remove_all(tmp);
    if (truth_json) *truth_json = dup_string(truth_text);
    *out = reinterpret_cast<bm_dataset*>(impl.release());
  });
}

bm_status bm_simulate_to_dir(const char* genspec_json, const char* out_dir,
                             char** truth_json) {
  if (!genspec_json || !out_dir) {
    g_last_error = "null argument";
    g_last_code = "E_CONFIG";
    return BM_E_INVALID_ARGUMENT;
  }
  return guard([&] {
    const std::string truth = benchmap::run_simulate(genspec_json, out_dir);
    if (truth_json) *truth_json = dup_string(truth);
  });
}

bm_status bm_dataset_summary(const bm_dataset* dataset, char** summary_json) {
  if (!dataset || !summary_json) {
    g_last_error = "null argument";
    g_last_code = "E_CONFIG";
    return BM_E_INVALID_ARGUMENT;
  }
  return guard([&] {
    const DatasetImpl* impl = unwrap(dataset);
    json j;
    j["models"] = impl->rm.n_models();
    j["items"] = impl->rm.n_items();
    j["benchmarks"] = impl->rm.bench_ids;
    j["items_per_bench"] = impl->rm.bench_item_counts();
    const auto zv = impl->rm.zero_variance_flags();
    j["zero_variance_items"] =
        static_cast<int>(std::count(zv.begin(), zv.end(), true));
    const auto miss = impl->rm.missingness_flags();
    j["items_with_missingness"] =
        static_cast<int>(std::count(miss.begin(), miss.end(), true));
    j["has_metadata"] = impl->md.has_value();
    if (impl->md) {
      j["metadata_models"] = impl->md->n_models();
      j["dropped_nonpositive_size"] = impl->md->dropped_nonpositive_size;
      j["score_rows"] = static_cast<int>(impl->md->scores.size());
    }
    *summary_json = dup_string(j.dump(2) + "\n");
  });
}

bm_status bm_dataset_write(const bm_dataset* dataset, const char* out_dir,
                           const char* layout) {
  if (!dataset || !out_dir || !layout) {
    g_last_error = "null argument";
    g_last_code = "E_CONFIG";
    return BM_E_INVALID_ARGUMENT;
  }
  return guard([&] {
    const DatasetImpl* impl = unwrap(dataset);
    std::filesystem::create_directories(out_dir);
    benchmap::write_responses(impl->rm, std::string(out_dir) + "/responses.csv", layout);
    if (impl->md) {
      benchmap::write_metadata(*impl->md, std::string(out_dir) + "/metadata.csv",
                               std::string(out_dir) + "/scores.csv");
    }
    benchmap::write_text_file(
        std::string(out_dir) + "/manifest.json",
        benchmap::ingest_manifest_json(impl->responses_info,
                                       impl->md ? &impl->metadata_info : nullptr, 0, false));
  });
}

void bm_dataset_free(bm_dataset* dataset) { delete unwrap(dataset); }

bm_status bm_run_cfa_campaign(const bm_dataset* dataset, const char* config_json,
                              bm_report** out) {
  if (!dataset || !out) {
    g_last_error = "null argument";
    g_last_code = "E_CONFIG";
    return BM_E_INVALID_ARGUMENT;
  }
  return guard([&] {
    const DatasetImpl* impl = unwrap(dataset);
    const benchmap::CampaignConfig config = campaign_config(parse_config(config_json), false);
    const benchmap::CfaCampaignResult result = run_cfa_campaign(impl->rm, config);
    auto rep = std::make_unique<ReportImpl>();
    rep->report = benchmap::report_cfa_campaign(result);
    *out = reinterpret_cast<bm_report*>(rep.release());
  });
}

bm_status bm_run_gstudy(const bm_dataset* dataset, const char* config_json, bm_report** out) {
  if (!dataset || !out) {
    g_last_error = "null argument";
    g_last_code = "E_CONFIG";
    return BM_E_INVALID_ARGUMENT;
  }
  return guard([&] {
    const DatasetImpl* impl = unwrap(dataset);
    benchmap::require(impl->md.has_value(), "E_META_MISSING",
                      "gstudy requires metadata with leaderboard scores");
    const json cfg = parse_config(config_json);
    check_keys(cfg, {"slopes", "facets", "n_b", "jobs"}, "gstudy config");
    benchmap::FacetCompositions comp;
    if (cfg.contains("facets")) {
      check_keys(cfg["facets"], {"a", "c", "d"}, "facets");
      comp.a = cfg["facets"].value("a", comp.a);
      comp.c = cfg["facets"].value("c", comp.c);
      comp.d = cfg["facets"].value("d", comp.d);
    }
    const bool slopes = cfg.value("slopes", false);
    const benchmap::FacetDesign design = benchmap::build_facet_design(*impl->md, comp);
    std::set<std::string> benches(design.b.begin(), design.b.end());
    const int n_b = cfg.value("n_b", static_cast<int>(benches.size()));

    const benchmap::MixedFit base = benchmap::gstudy_base(design);
    std::optional<benchmap::MixedFit> slope_fit;
    std::optional<benchmap::ScalingMetrics> metrics;
    if (slopes) {
      slope_fit = benchmap::gstudy_slopes(design);
      const double mean_x = design.x.mean();
      const double var_x =
          (design.x.array() - mean_x).square().sum() / design.x.size();
      metrics = benchmap::scaling_metrics(*slope_fit, var_x, mean_x);
    }
    const std::set<std::string> object_terms = {"A", "C", "D", "AC", "AD", "CD", "ACD"};
    const double g_rel = benchmap::g_coefficient(base, object_terms, n_b);

    auto rep = std::make_unique<ReportImpl>();
    rep->report = benchmap::report_gstudy(base, slope_fit ? &*slope_fit : nullptr,
                                          metrics ? &*metrics : nullptr, g_rel, n_b);
    *out = reinterpret_cast<bm_report*>(rep.release());
  });
}

bm_status bm_run_latreg_campaign(const bm_dataset* dataset, const char* config_json,
                                 bm_report** out) {
  if (!dataset || !out) {
    g_last_error = "null argument";
    g_last_code = "E_CONFIG";
    return BM_E_INVALID_ARGUMENT;
  }
  return guard([&] {
    const DatasetImpl* impl = unwrap(dataset);
    benchmap::require(impl->md.has_value(), "E_META_MISSING",
                      "latent regression requires metadata");
    const json cfg = parse_config(config_json);
    const benchmap::CampaignConfig config = campaign_config(cfg, true);
    const benchmap::LatRegCampaignResult result =
        run_latreg_campaign(impl->rm, *impl->md, config);

    std::optional<benchmap::ScalingPlotData> plot;
    if (result.theta_agg.size() > 0) {
      std::vector<double> g_scores(impl->rm.n_models());
      std::vector<double> xs(impl->rm.n_models());
      for (int i = 0; i < impl->rm.n_models(); ++i) {
        g_scores[i] = result.theta_agg(i, 0);
        xs[i] = impl->md->x(i);
      }
      const std::string group_col = cfg.value("plot_group_column", "type");
      std::vector<std::string> groups;
      if (impl->md->columns.count(group_col))
        groups = impl->md->columns.at(group_col);
      plot = benchmap::scaling_plot_data(g_scores, xs, groups, true);
    }
    auto rep = std::make_unique<ReportImpl>();
    rep->report = benchmap::report_latreg_campaign(result, plot ? &*plot : nullptr);
    *out = reinterpret_cast<bm_report*>(rep.release());
  });
}

bm_status bm_rank_compare(const double* baseline, const double* adjusted, size_t n,
                          char** report_json) {
  if (!baseline || !adjusted || !report_json) {
    g_last_error = "null argument";
    g_last_code = "E_CONFIG";
    return BM_E_INVALID_ARGUMENT;
  }
  return guard([&] {
    const std::vector<double> b(baseline, baseline + n);
    const std::vector<double> a(adjusted, adjusted + n);
    const benchmap::RankReport rep = benchmap::rank_compare(b, a);
    *report_json = dup_string(benchmap::rank_report_json(rep));
  });
}

const char* bm_report_json(const bm_report* report) {
  return report ? unwrap(report)->report.json.c_str() : "";
}

int bm_report_table_count(const bm_report* report) {
  return report ? static_cast<int>(unwrap(report)->report.tables.size()) : 0;
}

const char* bm_report_table_name(const bm_report* report, int index) {
  if (!report) return "";
  const auto& tables = unwrap(report)->report.tables;
  if (index < 0 || index >= static_cast<int>(tables.size())) return "";
  return tables[index].first.c_str();
}

const char* bm_report_table_csv(const bm_report* report, int index) {
  if (!report) return "";
  const auto& tables = unwrap(report)->report.tables;
  if (index < 0 || index >= static_cast<int>(tables.size())) return "";
  return tables[index].second.c_str();
}

bm_status bm_report_write(const bm_report* report, const char* out_dir) {
  if (!report || !out_dir) {
    g_last_error = "null argument";
    g_last_code = "E_CONFIG";
    return BM_E_INVALID_ARGUMENT;
  }
  return guard([&] { unwrap(report)->report.write(out_dir); });
}

void bm_report_free(bm_report* report) {
  delete reinterpret_cast<ReportImpl*>(report);
}

bm_status bm_merge_reports(const char* dir, char** merged_json) {
  if (!dir || !merged_json) {
    g_last_error = "null argument";
    g_last_code = "E_CONFIG";
    return BM_E_INVALID_ARGUMENT;
  }
  return guard([&] { *merged_json = dup_string(benchmap::merge_reports(dir)); });
}

}  // extern "C"
