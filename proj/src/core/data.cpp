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

#include "core/data.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "core/common.hpp"
#include "core/csv.hpp"
#include "core/rng.hpp"

namespace benchmap {

std::vector<int> ResponseMatrix::bench_item_counts() const {
  std::vector<int> counts(bench_ids.size(), 0);
  for (int b : bench_of) counts[b]++;
  return counts;
}

std::vector<bool> ResponseMatrix::zero_variance_flags() const {
  std::vector<bool> flags(n_items(), false);
  for (int j = 0; j < n_items(); ++j) {
    bool saw0 = false, saw1 = false;
    for (int i = 0; i < n_models(); ++i) {
      const auto v = values(i, j);
      if (v == 0) saw0 = true;
      else if (v == 1) saw1 = true;
      if (saw0 && saw1) break;
    }
    flags[j] = !(saw0 && saw1);
  }
  return flags;
}

std::vector<bool> ResponseMatrix::missingness_flags() const {
  std::vector<bool> flags(n_items(), false);
  for (int j = 0; j < n_items(); ++j) {
    for (int i = 0; i < n_models(); ++i) {
      if (values(i, j) == kMissing) {
        flags[j] = true;
        break;
      }
    }
  }
  return flags;
}

ResponseMatrix ResponseMatrix::select_items(const std::vector<int>& item_indices) const {
  ResponseMatrix out;
  out.model_ids = model_ids;
  out.values.resize(n_models(), static_cast<int>(item_indices.size()));
  std::vector<int> bench_map(bench_ids.size(), -1);
  for (std::size_t c = 0; c < item_indices.size(); ++c) {
    const int j = item_indices[c];
    require(j >= 0 && j < n_items(), "E_ITEM_INDEX", "item index out of range");
    out.values.col(c) = values.col(j);
    out.item_ids.push_back(item_ids[j]);
    const int b = bench_of[j];
    if (bench_map[b] < 0) {
      bench_map[b] = static_cast<int>(out.bench_ids.size());
      out.bench_ids.push_back(bench_ids[b]);
    }
    out.bench_of.push_back(bench_map[b]);
  }
  return out;
}

void ResponseMatrix::validate() const {
  require(n_models() >= 2, "E_VALIDATION", "need at least 2 models");
  require(n_items() >= 2, "E_VALIDATION", "need at least 2 items");
  require(n_benches() >= 1, "E_VALIDATION", "need at least 1 benchmark");
  require(static_cast<int>(bench_of.size()) == n_items(), "E_VALIDATION",
          "bench_of size mismatch");
  for (int b : bench_of)
    require(b >= 0 && b < n_benches(), "E_VALIDATION", "bench index out of range");
  int total = 0;
  for (int c : bench_item_counts()) total += c;
  require(total == n_items(), "E_VALIDATION", "per-benchmark counts do not sum to p");
}

const std::vector<std::string>& EcosystemMetadata::deploy_flag_names() {
  static const std::vector<std::string> names = {
      "chat_template", "chat",       "domain_tune",        "merged",
      "pretrained",    "continuous_pretrain", "mixture_of_experts"};
  return names;
}

std::vector<std::string> EcosystemMetadata::facet_labels(const std::string& composition) const {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : composition) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  std::vector<const std::vector<std::string>*> cols;
  for (const auto& p : parts) {
    auto it = columns.find(p);
    require(it != columns.end(), "E_FACET_COLUMN", "unknown facet sub-column '" + p + "'");
    cols.push_back(&it->second);
  }
  std::vector<std::string> labels(model_ids.size());
  for (std::size_t i = 0; i < model_ids.size(); ++i) {
    std::string lab;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (k) lab += ':';
      lab += (*cols[k])[i];
    }
    labels[i] = lab;
  }
  return labels;
}

int EcosystemMetadata::find_model(const std::string& id) const {
  for (std::size_t i = 0; i < model_ids.size(); ++i) {
    if (model_ids[i] == id) return static_cast<int>(i);
  }
  return -1;
}

namespace {

std::int8_t parse_response(const std::string& s, const std::string& context) {
  if (s.empty()) return kMissing;
  if (s == "0") return 0;
  if (s == "1") return 1;
  fail("E_RESPONSE_VALUE", context + ": response must be 0, 1 or empty, got '" + s + "'");
}

int intern(std::vector<std::string>& table, std::unordered_map<std::string, int>& index,
           const std::string& key) {
  auto it = index.find(key);
  if (it != index.end()) return it->second;
  const int id = static_cast<int>(table.size());
  table.push_back(key);
  index.emplace(key, id);
  return id;
}

ResponseMatrix ingest_wide(const CsvTable& t, const std::string& path) {
  ResponseMatrix rm;
  require(!t.header.empty() && t.header[0] == "model_id", "E_HEADER",
          path + ": wide layout requires first column 'model_id'");
  std::unordered_map<std::string, int> bench_index;
  for (std::size_t c = 1; c < t.header.size(); ++c) {
    const std::string& name = t.header[c];
    const auto pos = name.find("__");
    require(pos != std::string::npos && pos > 0 && pos + 2 < name.size(), "E_HEADER",
            path + ": item column '" + name + "' is not of the form <bench>__<item>");
    const std::string bench = name.substr(0, pos);
    const std::string item = name.substr(pos + 2);
    rm.bench_of.push_back(intern(rm.bench_ids, bench_index, bench));
    rm.item_ids.push_back(item);
  }
  const int p = static_cast<int>(t.header.size()) - 1;
  rm.values.resize(static_cast<int>(t.n_rows()), p);
  std::unordered_set<std::string> seen_models;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const std::string& mid = t.cell(r, 0);
    require(seen_models.insert(mid).second, "E_DUPLICATE_PAIR",
            path + ": duplicate model row '" + mid + "'");
    rm.model_ids.push_back(mid);
    for (int c = 0; c < p; ++c) {
      rm.values(static_cast<int>(r), c) =
          parse_response(t.cell(r, c + 1), path + " row " + std::to_string(r + 2));
    }
  }
  return rm;
}

ResponseMatrix ingest_long(const CsvTable& t, const std::string& path) {
  const int c_model = t.column("model_id");
  const int c_bench = t.column("bench");
  const int c_item = t.column("item");
  const int c_resp = t.column("response");

  ResponseMatrix rm;
  std::unordered_map<std::string, int> model_index, bench_index, item_index;
  struct Cell {
    int model, item;
    std::int8_t value;
  };
  std::vector<Cell> cells;
  cells.reserve(t.n_rows());
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const std::string& mid = t.cell(r, c_model);
    const std::string& bench = t.cell(r, c_bench);
    const std::string& item = t.cell(r, c_item);
    const int mi = intern(rm.model_ids, model_index, mid);
    const std::string item_key = bench + "\x1f" + item;
    int ij;
    auto it = item_index.find(item_key);
    if (it == item_index.end()) {
      ij = static_cast<int>(rm.item_ids.size());
      item_index.emplace(item_key, ij);
      rm.item_ids.push_back(item);
      rm.bench_of.push_back(intern(rm.bench_ids, bench_index, bench));
    } else {
      ij = it->second;
    }
    cells.push_back({mi, ij, parse_response(t.cell(r, c_resp),
                                            path + " row " + std::to_string(r + 2))});
  }
  rm.values.setConstant(static_cast<int>(rm.model_ids.size()),
                        static_cast<int>(rm.item_ids.size()), kMissing);
  std::unordered_set<std::int64_t> seen;
  for (const auto& cell : cells) {
    const std::int64_t key =
        static_cast<std::int64_t>(cell.model) * rm.n_items() + cell.item;
    require(seen.insert(key).second, "E_DUPLICATE_PAIR",
            path + ": duplicate (model,item) pair (" + rm.model_ids[cell.model] + ", " +
                rm.bench_ids[rm.bench_of[cell.item]] + ", " + rm.item_ids[cell.item] + ")");
    rm.values(cell.model, cell.item) = cell.value;
  }
  return rm;
}

}  // namespace

ResponseMatrix ingest_responses(const std::string& path, const std::string& layout,
                                IngestInfo* info) {
  const CsvTable t = CsvTable::read_file(path);
  ResponseMatrix rm;
  if (layout == "wide") {
    rm = ingest_wide(t, path);
  } else if (layout == "long") {
    rm = ingest_long(t, path);
  } else {
    fail("E_LAYOUT", "unknown layout '" + layout + "' (expected wide or long)");
  }
  rm.validate();
  if (info) {
    info->source_path = path;
    info->n_rows_read = static_cast<int>(t.n_rows());
    info->n_rows_kept = rm.n_models();
    info->n_cols = rm.n_items();
    const auto zv = rm.zero_variance_flags();
    info->n_zero_variance = static_cast<int>(std::count(zv.begin(), zv.end(), true));
  }
  return rm;
}

EcosystemMetadata ingest_metadata(const std::string& meta_path, const std::string& scores_path,
                                  IngestInfo* info) {
  const CsvTable t = CsvTable::read_file(meta_path);
  static const std::vector<std::string> required = {
      "model_id",      "architecture", "generation", "author", "removed", "not_avail",
      "type",          "chat_template", "mo_e",      "merged", "precision", "nbpars"};
  std::vector<int> col(required.size());
  for (std::size_t i = 0; i < required.size(); ++i) col[i] = t.column(required[i]);

  EcosystemMetadata md;
  for (std::size_t i = 1; i + 1 < required.size(); ++i) md.columns[required[i]] = {};

  std::vector<double> xs;
  int dropped = 0;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const double nbpars =
        parse_double(t.cell(r, col[11]), meta_path + " nbpars row " + std::to_string(r + 2));
    if (nbpars <= 0.0) {
      ++dropped;
      continue;
    }
    md.model_ids.push_back(t.cell(r, col[0]));
    for (std::size_t i = 1; i + 1 < required.size(); ++i) {
      const std::string& v = t.cell(r, col[i]);
      require(!v.empty(), "E_FACET_EMPTY",
              meta_path + ": empty '" + required[i] + "' in row " + std::to_string(r + 2));
      md.columns[required[i]].push_back(v);
    }
    xs.push_back(std::log10(nbpars));
  }
  md.dropped_nonpositive_size = dropped;
  md.x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<int>(xs.size()));

  const int n = md.n_models();
  const auto& type_col = md.columns.at("type");
  auto flag01 = [&](const std::string& name, int i) {
    const std::string& v = md.columns.at(name)[i];
    return (v == "1" || v == "true" || v == "True") ? 1.0 : 0.0;
  };
  md.w.resize(n, static_cast<int>(EcosystemMetadata::deploy_flag_names().size()));
  for (int i = 0; i < n; ++i) {
    md.w(i, 0) = flag01("chat_template", i);
    md.w(i, 1) = type_col[i] == "chat" ? 1.0 : 0.0;
    md.w(i, 2) = type_col[i] == "domain_tune" ? 1.0 : 0.0;
    md.w(i, 3) = flag01("merged", i);
    md.w(i, 4) = type_col[i] == "pretrained" ? 1.0 : 0.0;
    md.w(i, 5) = type_col[i] == "continuous_pretrain" ? 1.0 : 0.0;
    md.w(i, 6) = flag01("mo_e", i);
  }

  const CsvTable st = CsvTable::read_file(scores_path);
  const int s_model = st.column("model_id");
  const int s_bench = st.column("bench");
  const int s_val = st.column("val");
  std::unordered_map<std::string, int> model_index;
  for (int i = 0; i < n; ++i) model_index.emplace(md.model_ids[i], i);
  for (std::size_t r = 0; r < st.n_rows(); ++r) {
    auto it = model_index.find(st.cell(r, s_model));
    if (it == model_index.end()) continue;  // score of a dropped/unknown model
    const double v =
        parse_double(st.cell(r, s_val), scores_path + " val row " + std::to_string(r + 2));
    require(std::isfinite(v), "E_SCORE_VALUE", scores_path + ": non-finite score");
    md.scores.push_back({it->second, st.cell(r, s_bench), v});
  }

  if (info) {
    info->source_path = meta_path;
    info->n_rows_read = static_cast<int>(t.n_rows());
    info->n_rows_kept = n;
    info->n_cols = static_cast<int>(t.n_cols());
    info->n_dropped = dropped;
  }
  return md;
}

void write_responses(const ResponseMatrix& rm, const std::string& path,
                     const std::string& layout) {
  CsvTable t;
  if (layout == "wide") {
    t.header.push_back("model_id");
    for (int j = 0; j < rm.n_items(); ++j)
      t.header.push_back(rm.bench_ids[rm.bench_of[j]] + "__" + rm.item_ids[j]);
    for (int i = 0; i < rm.n_models(); ++i) {
      std::vector<std::string> row;
      row.push_back(rm.model_ids[i]);
      for (int j = 0; j < rm.n_items(); ++j) {
        const auto v = rm.values(i, j);
        row.push_back(v == kMissing ? "" : (v ? "1" : "0"));
      }
      t.rows.push_back(std::move(row));
    }
  } else if (layout == "long") {
    t.header = {"model_id", "bench", "item", "response"};
    for (int i = 0; i < rm.n_models(); ++i) {
      for (int j = 0; j < rm.n_items(); ++j) {
        const auto v = rm.values(i, j);
        if (v == kMissing) continue;
        t.rows.push_back({rm.model_ids[i], rm.bench_ids[rm.bench_of[j]], rm.item_ids[j],
                          v ? "1" : "0"});
      }
    }
  } else {
    fail("E_LAYOUT", "unknown layout '" + layout + "'");
  }
  t.write_file(path);
}

void write_metadata(const EcosystemMetadata& md, const std::string& meta_path,
                    const std::string& scores_path) {
  CsvTable t;
  t.header = {"model_id",      "architecture", "generation", "author", "removed", "not_avail",
              "type",          "chat_template", "mo_e",      "merged", "precision", "nbpars"};
  for (int i = 0; i < md.n_models(); ++i) {
    std::vector<std::string> row;
    row.push_back(md.model_ids[i]);
    for (std::size_t c = 1; c + 1 < t.header.size(); ++c)
      row.push_back(md.columns.at(t.header[c])[i]);
    row.push_back(format_double(std::pow(10.0, md.x(i))));
    t.rows.push_back(std::move(row));
  }
  t.write_file(meta_path);

  CsvTable s;
  s.header = {"model_id", "bench", "val"};
  for (const auto& obs : md.scores)
    s.rows.push_back({md.model_ids[obs.model], obs.bench, format_double(obs.value)});
  s.write_file(scores_path);
}

std::vector<int> eligible_items(const ResponseMatrix& rm, bool exclude_missing,
                                bool exclude_zero_variance) {
  const auto miss = rm.missingness_flags();
  const auto zv = rm.zero_variance_flags();
  std::vector<int> pool;
  for (int j = 0; j < rm.n_items(); ++j) {
    if (exclude_missing && miss[j]) continue;
    if (exclude_zero_variance && zv[j]) continue;
    pool.push_back(j);
  }
  return pool;
}

ItemSubset sample_item_subset_from(const ResponseMatrix& rm, const std::vector<int>& pool,
                                   const std::vector<int>& r_k, std::uint64_t seed, bool permute,
                                   int replication) {
  require(static_cast<int>(r_k.size()) == rm.n_benches(), "E_VALIDATION",
          "r_k must have one entry per benchmark");
  std::vector<std::vector<int>> by_bench(rm.n_benches());
  for (int j : pool) by_bench[rm.bench_of[j]].push_back(j);

  Rng rng(seed);
  ItemSubset subset;
  subset.replication = replication;
  for (int b = 0; b < rm.n_benches(); ++b) {
    const int avail = static_cast<int>(by_bench[b].size());
    require(r_k[b] <= avail, "E_SUBSET_SIZE",
            "requested " + std::to_string(r_k[b]) + " items from benchmark '" +
                rm.bench_ids[b] + "' but only " + std::to_string(avail) + " are eligible");
    auto picks = rng.sample_without_replacement(avail, r_k[b]);
    std::sort(picks.begin(), picks.end());
    for (int idx : picks) subset.items.push_back(by_bench[b][idx]);
  }
  if (permute) {
    // Uniform shuffle of benchmark labels over the selected items; the
    // per-benchmark counts {r_k} are preserved exactly.
    std::vector<int> labels;
    for (int b = 0; b < rm.n_benches(); ++b)
      for (int r = 0; r < r_k[b]; ++r) labels.push_back(b);
    rng.shuffle(labels);
    subset.permuted_bench = labels;
  }
  return subset;
}

ItemSubset sample_item_subset(const ResponseMatrix& rm, const std::vector<int>& r_k,
                              std::uint64_t seed, bool permute, int replication) {
  std::vector<int> pool(rm.n_items());
  for (int j = 0; j < rm.n_items(); ++j) pool[j] = j;
  return sample_item_subset_from(rm, pool, r_k, seed, permute, replication);
}

}  // namespace benchmap
