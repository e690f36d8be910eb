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

#include <string>
#include <vector>

#include "core/analysis.hpp"
#include "core/gtheory.hpp"

namespace benchmap {

// A finished analysis artifact: one JSON summary plus named CSV tables.
// Serialization is deterministic (sorted keys, shortest-round-trip floats)
// so identical runs produce byte-identical files.
struct Report {
  std::string name;
  std::string json;  // canonical text, trailing newline
  std::vector<std::pair<std::string, std::string>> tables;  // (file name, CSV text)

  void write(const std::string& out_dir) const;
};

Report report_cfa_campaign(const CfaCampaignResult& result);
Report report_gstudy(const MixedFit& base_fit, const MixedFit* slope_fit,
                     const ScalingMetrics* metrics, double g_relative, int n_b);
Report report_latreg_campaign(const LatRegCampaignResult& result,
                              const ScalingPlotData* plot);
Report report_rank(const RankReport& rank);

std::string rank_report_json(const RankReport& rank);

/// Merges the JSON artifacts found in a directory into one summary document.
std::string merge_reports(const std::string& dir);

void write_text_file(const std::string& path, const std::string& text);
std::string ingest_manifest_json(const IngestInfo& responses, const IngestInfo* metadata,
                                 unsigned long long seed, bool has_seed);

}  // namespace benchmap
