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

/* benchmap C API: latent-structure measurement of AI benchmark ecosystems.
 *
 * All functions return bm_status; BM_OK on success. On failure,
 * bm_last_error() / bm_last_error_code() describe the problem (thread-local).
 * Objects are opaque handles freed with their bm_*_free function; strings
 * returned through char** are freed with bm_string_free.
 *
 * Configuration goes in as JSON text; results come out as reports holding a
 * JSON summary plus named CSV tables. Runs with the same config and seed
 * produce byte-identical report text.
 */

#ifndef BENCHMAP_H
#define BENCHMAP_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined _WIN32
#define BM_API __declspec(dllexport)
#else
#define BM_API __attribute__((visibility("default")))
#endif

typedef enum bm_status {
  BM_OK = 0,
  BM_E_INVALID_ARGUMENT = 1,
  BM_E_VALIDATION = 2,
  BM_E_PARSE = 3,
  BM_E_IO = 4,
  BM_E_NUMERIC = 5,
  BM_E_CAMPAIGN_FAILED = 6,
  BM_E_INTERNAL = 7
} bm_status;

typedef struct bm_dataset bm_dataset; /* responses + optional metadata */
typedef struct bm_report bm_report;   /* JSON summary + CSV tables */

BM_API const char* bm_version(void);
BM_API const char* bm_status_name(bm_status status);

/* Thread-local description of the most recent failure. */
BM_API const char* bm_last_error(void);
BM_API const char* bm_last_error_code(void); /* machine-readable E_* code */

BM_API void bm_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

/* layout is "wide" (<bench>__<item> columns) or "long"
 * (model_id,bench,item,response). Writes no files. */
BM_API bm_status bm_dataset_load(const char* responses_csv_path, const char* layout,
                                 bm_dataset** out);

/* Attach submission metadata and leaderboard scores (CSV paths). */
BM_API bm_status bm_dataset_attach_metadata(bm_dataset* dataset, const char* metadata_csv_path,
                                            const char* scores_csv_path);

/* Generate a synthetic dataset in memory from a genspec JSON document;
 * truth_json (optional) receives the ground-truth record. */
BM_API bm_status bm_dataset_simulate(const char* genspec_json, bm_dataset** out,
                                     char** truth_json);

/* Run the generator and write responses/metadata/scores CSVs plus truth.json
 * into out_dir (the files bm_dataset_load reads back). */
BM_API bm_status bm_simulate_to_dir(const char* genspec_json, const char* out_dir,
                                    char** truth_json);

/* JSON description: models, items, benchmarks, zero-variance items, drops. */
BM_API bm_status bm_dataset_summary(const bm_dataset* dataset, char** summary_json);

/* Write the canonical CSVs plus an ingest manifest into a directory. */
BM_API bm_status bm_dataset_write(const bm_dataset* dataset, const char* out_dir,
                                  const char* layout);

BM_API void bm_dataset_free(bm_dataset* dataset);

/* ---- analyses ----------------------------------------------------------- */

/* Method 1: item-set bootstrap over the six latent structures (DWLS).
 * config keys: replications, items_per_bench, seed, structures, permute,
 * holdout_fraction, mi_pairs, jobs. */
BM_API bm_status bm_run_cfa_campaign(const bm_dataset* dataset, const char* config_json,
                                     bm_report** out);

/* Method 2: crossed G-study variance decomposition.
 * config keys: slopes, facets {a,c,d}, n_b, jobs. */
BM_API bm_status bm_run_gstudy(const bm_dataset* dataset, const char* config_json,
                               bm_report** out);

/* Method 3: bifactor IRT + latent regression bootstrap (MH-RM).
 * config keys: replications, items_per_bench, seed, jobs and an "mhrm"
 * object (cycles, burnin, gain_exponent, proposal_sd, target_acceptance). */
BM_API bm_status bm_run_latreg_campaign(const bm_dataset* dataset, const char* config_json,
                                        bm_report** out);

/* Rank stability of two score vectors. */
BM_API bm_status bm_rank_compare(const double* baseline, const double* adjusted, size_t n,
                                 char** report_json);

/* ---- reports ------------------------------------------------------------ */

BM_API const char* bm_report_json(const bm_report* report);
BM_API int bm_report_table_count(const bm_report* report);
BM_API const char* bm_report_table_name(const bm_report* report, int index);
BM_API const char* bm_report_table_csv(const bm_report* report, int index);
BM_API bm_status bm_report_write(const bm_report* report, const char* out_dir);
BM_API void bm_report_free(bm_report* report);

/* Merge every *.json report in a directory into one summary document. */
BM_API bm_status bm_merge_reports(const char* dir, char** merged_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* BENCHMAP_H */
