// Copyright 2026 The tinyvox Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tinyvox/json_io.hpp"
#include "tinyvox/loss.hpp"
#include "tinyvox/sampling.hpp"
#include "tinyvox/schedule.hpp"

namespace tinyvox {

struct ValidationCadence {
  enum class Kind { every_k_steps, every_epoch };
  Kind kind = Kind::every_k_steps;
  std::int64_t k = 5000;  ///< used by every_k_steps

  bool operator==(const ValidationCadence&) const = default;
};

/// Forwarded to trainers; the toolkit does not implement these numerics.
struct RegularizationFlags {
  double layerdrop = 0.1;
  double dropout = 0.1;
  bool masking_enabled = true;

  bool operator==(const RegularizationFlags&) const = default;
};

enum class WeightsInit { pretrained, random };

/// Everything a trainer needs for one run. Serialized to JSON and handed to
/// the trainer process as its first argument.
struct RunConfig {
  std::string run_name;
  std::string dataset_manifest_path;
  std::string validation_trials_path;
  std::string dev_trials_path;  ///< optional; empty when the trainer has no dev set
  ScheduleSpec schedule;
  FreezeSpec freeze;
  LossParams loss;
  SamplingSpec sampling;
  MaskSpec masking;
  std::int64_t n_steps = 50000;
  std::uint64_t seed = 0;
  ValidationCadence validation_cadence;
  RegularizationFlags regularization;
  WeightsInit weights_init = WeightsInit::pretrained;
  std::string trainer_command;

  /// Paths non-empty, n_steps > 0 and equal to schedule.n_steps, cadence
  /// k > 0, and every nested spec valid. Throws OrchestratorError.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// The fine-tuning protocol the toolkit was built around: triangular2 over
/// 4 cycles down to 1e-8, 50k steps, margin 0.2 / scale 30, batches of 100
/// two-second chunks, index masking of 10% channels / 50% frames, 10%
/// LayerDrop and dropout, everything but the classifier frozen for the first
/// 12.5k steps and the feature extractor frozen throughout, validation every
/// 5k steps. Paths and trainer command are left empty.
RunConfig default_run_config();

void to_json(Json& j, const RunConfig& v);
void from_json(const Json& j, RunConfig& v);

enum class RunStatus { ok, failed };

struct RunReport {
  RunStatus status = RunStatus::failed;
  double best_validation_eer = 0.0;
  std::int64_t best_checkpoint_step = 0;
  double dev_eer = 0.0;
  std::vector<std::pair<std::int64_t, double>> history;
  std::optional<std::string> embeddings_path;
  /// Orchestrator-side notes on failures; not part of the trainer schema.
  std::string diagnostic;
  std::optional<int> exit_code;

  /// dev_eer, or +inf for failed runs.
  double selection_eer() const;
};

RunReport failed_report(std::string diagnostic);

/// Parses the trainer's report.json. Throws OrchestratorError when the
/// schema is violated: unknown status, missing fields, empty history on
/// success, or best_validation_eer differing from the history minimum.
RunReport parse_run_report(const Json& j);
void to_json(Json& j, const RunReport& v);

/// A trainer maps a config to a report. Exceptions thrown by a trainer are
/// turned into failed reports by the search drivers.
using Trainer = std::function<RunReport(const RunConfig&)>;

/// Runs one trainer process: writes run_dir/run_config.json, invokes
/// `<trainer_command> <run_config.json> <run_dir>`, and parses
/// run_dir/report.json. Every failure (bad config, missing inputs, non-zero
/// exit, timeout, missing or malformed report) yields a failed report.
RunReport run_trainer(const RunConfig& cfg, const std::string& run_dir,
                      std::chrono::milliseconds timeout = std::chrono::milliseconds{0});

struct ProcessTrainerOptions {
  std::string work_dir;
  std::chrono::milliseconds timeout{0};
};

/// Trainer running each config in work_dir/<run_name>-<config digest>.
Trainer process_trainer(ProcessTrainerOptions options);

/// 1e-2, 1e-3, ..., 1e-7.
std::vector<double> phase1_candidates();

/// {1.78, 3.16, 5.62} x {10^(j-1), 10^j}, ascending. Values are the
/// correctly rounded decimals (e.g. exactly the double nearest 5.62e-3).
std::vector<double> phase2_candidates(int best_exponent);

struct SearchEntry {
  double lr = 0.0;
  double dev_eer = 0.0;  ///< +inf for failed runs
  bool reused = false;   ///< phase-2 value already run in phase 1
  RunReport report;
};

struct SearchReport {
  std::vector<SearchEntry> phase1;
  std::vector<SearchEntry> phase2;
  int best_exponent = 0;
  double selected_lr = 0.0;
  double selected_dev_eer = 0.0;
};

struct SearchOptions {
  int max_concurrency = 1;
};

/// Two-phase learning-rate search. Every run shares base.seed; only
/// schedule.max_lr changes. Ties go to the smaller learning rate. Throws
/// OrchestratorError if every run fails.
SearchReport lr_search(const RunConfig& base, const Trainer& trainer, const SearchOptions& options = {});

struct MatrixCell {
  std::int64_t n_steps = 0;
  std::uint64_t seed = 0;
  RunReport report;
};

struct MatrixRow {
  std::int64_t n_steps = 0;
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  double mean_dev_eer = 0.0;  ///< NaN when no run succeeded
  double std_dev_eer = 0.0;   ///< sample (n-1) deviation; 0 for a single run
};

struct MatrixReport {
  std::vector<MatrixCell> cells;  ///< steps-major, seeds-minor
  std::vector<MatrixRow> rows;    ///< one per steps value
};

/// One run per (n_steps, seed); failures stay in their cells.
MatrixReport experiment_matrix(const RunConfig& base, const std::vector<std::int64_t>& steps_list,
                               const std::vector<std::uint64_t>& seeds_list, const Trainer& trainer,
                               const SearchOptions& options = {});

/// The eleven ablation variants of the base protocol, each with run_name
/// set: three schedules, four weights/freezing set-ups, four regularization
/// set-ups.
std::vector<RunConfig> ablation_suite(const RunConfig& base);

void to_json(Json& j, const SearchReport& v);
void to_json(Json& j, const MatrixReport& v);

/// Aligned text tables for --pretty output.
std::string format_search_table(const SearchReport& v);
std::string format_matrix_table(const MatrixReport& v);

}  // namespace tinyvox
