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

// Command-line front end. All statistics run behind the C API in
// benchmap/benchmap.h; this file only wires flags, config files and logs.
//
// Exit codes: 0 success, 2 validation/config error, 3 campaign with > 20%
// failed replications, 1 anything else.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "benchmap/benchmap.h"

using nlohmann::json;

namespace {

void log_json(const std::string& level, const std::string& code, const std::string& msg) {
  json j;
  j["level"] = level;
  if (!code.empty()) j["code"] = code;
  j["message"] = msg;
  std::cerr << j.dump() << "\n";
}

int exit_code_for(bm_status status) {
  switch (status) {
    case BM_OK: return 0;
    case BM_E_INVALID_ARGUMENT:
    case BM_E_VALIDATION:
    case BM_E_PARSE: return 2;
    case BM_E_CAMPAIGN_FAILED: return 3;
    default: return 1;
  }
}

int fail_status(bm_status status) {
  log_json("error", bm_last_error_code(), bm_last_error());
  return exit_code_for(status);
}

struct Cleanup {
  bm_dataset* ds = nullptr;
  bm_report* rep = nullptr;
  ~Cleanup() {
    if (ds) bm_dataset_free(ds);
    if (rep) bm_report_free(rep);
  }
};

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) {
    log_json("error", "E_IO", "cannot open config file: " + path);
    std::exit(2);
  }
  try {
    return json::parse(in);
  } catch (const std::exception& e) {
    log_json("error", "E_CONFIG", std::string("config parse error: ") + e.what());
    std::exit(2);
  }
}

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("BENCHMAP_OUT"); env && env[0]) return env;
  return "benchmap_out";
}

void archive_config(const std::string& out_dir, const json& resolved) {
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir + "/resolved_config.json", std::ios::binary);
  out << resolved.dump(2) << "\n";
}

int write_report(bm_report* rep, const std::string& out_dir) {
  const bm_status st = bm_report_write(rep, out_dir.c_str());
  if (st != BM_OK) return fail_status(st);
  std::cout << "report written to " << out_dir << "\n";
  return 0;
}

// Minimal column reader for the rank subcommand (comma separated, no quoting
// needed for numeric columns).
bool read_column(const std::string& path, const std::string& column,
                 std::vector<double>& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) return false;
  std::string line;
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  int col = -1, idx = 0;
  std::stringstream header(line);
  std::string field;
  while (std::getline(header, field, ',')) {
    if (field == column) col = idx;
    ++idx;
  }
  if (col < 0) return false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream row(line);
    int i = 0;
    while (std::getline(row, field, ',')) {
      if (i == col) out.push_back(std::atof(field.c_str()));
      ++i;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"benchmap: psychometric measurement of AI benchmark ecosystems"};
  app.require_subcommand(1);

  std::string config_path, out_flag;
  unsigned long long seed = 0;
  bool seed_set = false;
  int jobs = 0;
  app.add_option("--config", config_path, "JSON config file")->expected(1);
  app.add_option("--seed", seed, "Override the config seed")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--jobs", jobs, "Worker pool size (0 = hardware)");
  app.add_option("--out", out_flag, "Output directory (or BENCHMAP_OUT env)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate and archive input files");
  std::string responses_path, layout = "wide", metadata_path, scores_path;
  ingest->add_option("--responses", responses_path, "Item response CSV");
  ingest->add_option("--layout", layout, "wide|long");
  ingest->add_option("--metadata", metadata_path, "Submission metadata CSV");
  ingest->add_option("--scores", scores_path, "Leaderboard score CSV (long)");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic data with truth.json");

  // cfa
  auto* cfa = app.add_subcommand("cfa", "Method 1: bootstrap CFA structure comparison");
  bool cfa_permute = false;
  int cfa_reps = -1;
  cfa->add_flag("--permute", cfa_permute, "Add the permutation control condition");
  cfa->add_option("--replications", cfa_reps, "Bootstrap replications");

  // gstudy
  auto* gstudy = app.add_subcommand("gstudy", "Method 2: crossed variance decomposition");
  bool gstudy_slopes_flag = false;
  std::string facet_a, facet_c, facet_d, facets_list;
  gstudy->add_flag("--slopes", gstudy_slopes_flag, "Random-slopes model with metrics");
  gstudy->add_option("--facets", facets_list, "Facet letters, e.g. A,B,C,D (informational)");
  gstudy->add_option("--facet-a", facet_a, "Architecture facet composition");
  gstudy->add_option("--facet-c", facet_c, "Contributor facet composition");
  gstudy->add_option("--facet-d", facet_d, "Deployment facet composition");

  // latreg
  auto* latreg = app.add_subcommand("latreg", "Method 3: bifactor IRT latent regression");
  int latreg_reps = -1;
  latreg->add_option("--replications", latreg_reps, "Bootstrap replications");

  // rank
  auto* rank = app.add_subcommand("rank", "Rank stability between two score columns");
  std::string rank_input, rank_baseline, rank_adjusted;
  rank->add_option("--input", rank_input, "CSV with both columns")->required();
  rank->add_option("--baseline", rank_baseline, "Baseline column name")->required();
  rank->add_option("--adjusted", rank_adjusted, "Adjusted column name")->required();

  // report
  auto* report = app.add_subcommand("report", "Merge JSON artifacts into summary.json");
  std::string report_dir;
  report->add_option("--dir", report_dir, "Directory of report JSON files")->required();

  CLI11_PARSE(app, argc, argv);

  json cfg = load_config_file(config_path);
  if (seed_set) cfg["seed"] = seed;
  if (jobs > 0) cfg["jobs"] = jobs;
  const std::string out_dir = resolve_out_dir(out_flag);

  if (ingest->parsed()) {
    if (responses_path.empty() && cfg.contains("ingest"))
      responses_path = cfg["ingest"].value("responses", "");
    if (responses_path.empty()) {
      log_json("error", "E_CONFIG", "ingest requires --responses");
      return 2;
    }
    Cleanup c;
    bm_status st = bm_dataset_load(responses_path.c_str(), layout.c_str(), &c.ds);
    if (st != BM_OK) return fail_status(st);
    if (!metadata_path.empty()) {
      st = bm_dataset_attach_metadata(c.ds, metadata_path.c_str(), scores_path.c_str());
      if (st != BM_OK) return fail_status(st);
    }
    char* summary = nullptr;
    st = bm_dataset_summary(c.ds, &summary);
    if (st != BM_OK) return fail_status(st);
    std::cout << summary;
    bm_string_free(summary);
    st = bm_dataset_write(c.ds, out_dir.c_str(), layout.c_str());
    if (st != BM_OK) return fail_status(st);
    archive_config(out_dir, cfg);
    return 0;
  }

  if (simulate->parsed()) {
    json genspec = cfg.contains("simulate") ? cfg["simulate"] : cfg;
    if (seed_set) genspec["seed"] = seed;
    char* truth = nullptr;
    const bm_status st =
        bm_simulate_to_dir(genspec.dump().c_str(), out_dir.c_str(), &truth);
    if (st != BM_OK) return fail_status(st);
    std::cout << "simulated dataset written to " << out_dir << "\n";
    bm_string_free(truth);
    archive_config(out_dir, cfg);
    return 0;
  }

  auto load_dataset = [&](bool need_metadata, Cleanup& c) -> int {
    if (!cfg.contains("ingest")) {
      log_json("error", "E_CONFIG", "config needs an 'ingest' section with input paths");
      return 2;
    }
    const json& ing = cfg["ingest"];
    const std::string resp = ing.value("responses", "");
    const std::string lay = ing.value("layout", "wide");
    if (resp.empty() && !need_metadata) {
      log_json("error", "E_CONFIG", "ingest.responses is required");
      return 2;
    }
    if (!resp.empty()) {
      bm_status st = bm_dataset_load(resp.c_str(), lay.c_str(), &c.ds);
      if (st != BM_OK) return fail_status(st);
    }
    const std::string meta = ing.value("metadata", "");
    const std::string scores = ing.value("scores", "");
    if (!meta.empty()) {
      if (!c.ds) {
        log_json("error", "E_CONFIG", "metadata requires a response matrix too");
        return 2;
      }
      bm_status st = bm_dataset_attach_metadata(c.ds, meta.c_str(), scores.c_str());
      if (st != BM_OK) return fail_status(st);
    } else if (need_metadata) {
      log_json("error", "E_META_MISSING", "this subcommand requires metadata");
      return 2;
    }
    return 0;
  };

  if (cfa->parsed()) {
    Cleanup c;
    if (int rc = load_dataset(false, c)) return rc;
    json sub = cfg.contains("campaign") ? cfg["campaign"] : json::object();
    if (cfa_permute) sub["permute"] = true;
    if (cfa_reps > 0) sub["replications"] = cfa_reps;
    if (cfg.contains("seed")) sub["seed"] = cfg["seed"];
    if (cfg.contains("jobs")) sub["jobs"] = cfg["jobs"];
    const bm_status st = bm_run_cfa_campaign(c.ds, sub.dump().c_str(), &c.rep);
    if (st != BM_OK) return fail_status(st);
    archive_config(out_dir, cfg);
    return write_report(c.rep, out_dir);
  }

  if (gstudy->parsed()) {
    Cleanup c;
    if (int rc = load_dataset(true, c)) return rc;
    json sub = cfg.contains("gstudy") ? cfg["gstudy"] : json::object();
    if (gstudy_slopes_flag) sub["slopes"] = true;
    if (!facet_a.empty()) sub["facets"]["a"] = facet_a;
    if (!facet_c.empty()) sub["facets"]["c"] = facet_c;
    if (!facet_d.empty()) sub["facets"]["d"] = facet_d;
    const bm_status st = bm_run_gstudy(c.ds, sub.dump().c_str(), &c.rep);
    if (st != BM_OK) return fail_status(st);
    archive_config(out_dir, cfg);
    return write_report(c.rep, out_dir);
  }

  if (latreg->parsed()) {
    Cleanup c;
    if (int rc = load_dataset(true, c)) return rc;
    json sub = cfg.contains("campaign") ? cfg["campaign"] : json::object();
    sub.erase("structures");
    sub.erase("permute");
    sub.erase("mi_pairs");
    if (cfg.contains("mhrm")) sub["mhrm"] = cfg["mhrm"];
    if (latreg_reps > 0) sub["replications"] = latreg_reps;
    if (cfg.contains("seed")) sub["seed"] = cfg["seed"];
    if (cfg.contains("jobs")) sub["jobs"] = cfg["jobs"];
    const bm_status st = bm_run_latreg_campaign(c.ds, sub.dump().c_str(), &c.rep);
    if (st != BM_OK) return fail_status(st);
    archive_config(out_dir, cfg);
    return write_report(c.rep, out_dir);
  }

  if (rank->parsed()) {
    std::vector<double> baseline, adjusted;
    if (!read_column(rank_input, rank_baseline, baseline) ||
        !read_column(rank_input, rank_adjusted, adjusted)) {
      log_json("error", "E_IO", "cannot read the requested columns from " + rank_input);
      return 2;
    }
    if (baseline.size() != adjusted.size()) {
      log_json("error", "E_VALIDATION", "column lengths differ");
      return 2;
    }
    char* out = nullptr;
    const bm_status st =
        bm_rank_compare(baseline.data(), adjusted.data(), baseline.size(), &out);
    if (st != BM_OK) return fail_status(st);
    std::filesystem::create_directories(out_dir);
    std::ofstream f(out_dir + "/rank_report.json", std::ios::binary);
    f << out;
    std::cout << out;
    bm_string_free(out);
    archive_config(out_dir, cfg);
    return 0;
  }

  if (report->parsed()) {
    char* merged = nullptr;
    const bm_status st = bm_merge_reports(report_dir.c_str(), &merged);
    if (st != BM_OK) return fail_status(st);
    std::filesystem::create_directories(out_dir);
    std::ofstream f(out_dir + "/summary.json", std::ios::binary);
    f << merged;
    std::cout << "summary written to " << out_dir << "/summary.json\n";
    bm_string_free(merged);
    return 0;
  }

  return 2;
}
