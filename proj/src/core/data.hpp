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

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace benchmap {

constexpr std::int8_t kMissing = -1;

// Binary N x p response matrix with the item -> benchmark map. Immutable
// after construction; shared read-only across workers.
struct ResponseMatrix {
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic> values;  // 0/1/kMissing
  std::vector<std::string> model_ids;   // N
  std::vector<std::string> item_ids;    // p
  std::vector<int> bench_of;            // p, value in [0, K)
  std::vector<std::string> bench_ids;   // K

  int n_models() const { return static_cast<int>(values.rows()); }
  int n_items() const { return static_cast<int>(values.cols()); }
  int n_benches() const { return static_cast<int>(bench_ids.size()); }

  std::vector<int> bench_item_counts() const;
  /// Items whose non-missing responses are all equal (dropped by MH-RM consumers).
  std::vector<bool> zero_variance_flags() const;
  std::vector<bool> missingness_flags() const;

  /// Column subset preserving benchmark structure (benchmarks with no
  /// selected item are removed from the result's bench table).
  ResponseMatrix select_items(const std::vector<int>& item_indices) const;

  void validate() const;
};

struct ScoreObs {
  int model;          // row in the metadata table
  std::string bench;
  double value;
};

// Submission-level facet labels, the log-size covariate, deployment flags
// and per-benchmark leaderboard scores.
struct EcosystemMetadata {
  std::vector<std::string> model_ids;
  std::map<std::string, std::vector<std::string>> columns;  // raw sub-columns
  Eigen::VectorXd x;                                        // log10(#params in B)
  Eigen::MatrixXd w;                                        // N x kDeployFlagCount
  std::vector<ScoreObs> scores;
  int dropped_nonpositive_size = 0;

  static const std::vector<std::string>& deploy_flag_names();

  int n_models() const { return static_cast<int>(model_ids.size()); }

  /// Labels for one facet: sub-column names joined by ':', e.g.
  /// "author:removed:not_avail" -> per-row "ab:0:1".
  std::vector<std::string> facet_labels(const std::string& composition) const;

  /// Row index by model id, -1 when absent.
  int find_model(const std::string& id) const;
};

// Default facet compositions (A, B, C, D). B is the benchmark column of the
// long score table rather than a metadata composition.
struct FacetCompositions {
  std::string a = "architecture:generation";
  std::string c = "author:removed:not_avail";
  std::string d = "type:chat_template:mo_e:merged:precision";
};

// One bootstrap replication's item draw.
struct ItemSubset {
  int replication = 0;
  std::vector<int> items;           // global item indices, grouped by benchmark
  std::vector<int> permuted_bench;  // per selected item; empty when permute=false

  bool permuted() const { return !permuted_bench.empty(); }
};

struct IngestInfo {
  int n_rows_read = 0;
  int n_rows_kept = 0;
  int n_cols = 0;
  int n_dropped = 0;
  int n_zero_variance = 0;
  std::string source_path;
};

ResponseMatrix ingest_responses(const std::string& path, const std::string& layout,
                                IngestInfo* info = nullptr);
EcosystemMetadata ingest_metadata(const std::string& meta_path, const std::string& scores_path,
                                  IngestInfo* info = nullptr);

/// Writes the canonical CSV for a layout; ingest(write(rm)) == rm.
void write_responses(const ResponseMatrix& rm, const std::string& path,
                     const std::string& layout);
void write_metadata(const EcosystemMetadata& md, const std::string& meta_path,
                    const std::string& scores_path);

ItemSubset sample_item_subset(const ResponseMatrix& rm, const std::vector<int>& r_k,
                              std::uint64_t seed, bool permute, int replication = 0);

/// Restricts the subset's candidate pool; used to honor per-estimator item
/// exclusion rules before sampling.
std::vector<int> eligible_items(const ResponseMatrix& rm, bool exclude_missing,
                                bool exclude_zero_variance);
ItemSubset sample_item_subset_from(const ResponseMatrix& rm, const std::vector<int>& pool,
                                   const std::vector<int>& r_k, std::uint64_t seed, bool permute,
                                   int replication = 0);

}  // namespace benchmap
