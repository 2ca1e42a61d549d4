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

#include "tinyvox/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "text_util.hpp"
#include "tinyvox/error.hpp"
#include "tinyvox/process.hpp"
#include "tinyvox/rng.hpp"

namespace tinyvox {

namespace fs = std::filesystem;
using json_detail::require;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string_view to_string(WeightsInit w) { return w == WeightsInit::pretrained ? "pretrained" : "random"; }

std::string_view to_string(RunStatus s) { return s == RunStatus::ok ? "ok" : "failed"; }

std::string lr_label(double lr) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2e", lr);
  return buf;
}

std::string prefixed(const std::string& base, const std::string& name) {
  return base.empty() ? name : base + "-" + name;
}

// Runs configs through the trainer, at most max_concurrency at a time.
// Results land at their config's index, so the output does not depend on
// completion order.
std::vector<RunReport> run_all(const std::vector<RunConfig>& configs, const Trainer& trainer, int max_concurrency) {
  std::vector<RunReport> reports(configs.size());
  auto run_one = [&](std::size_t i) {
    try {
      reports[i] = trainer(configs[i]);
    } catch (const std::exception& e) {
      reports[i] = failed_report(std::string("trainer error: ") + e.what());
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, max_concurrency));
  if (workers == 1 || configs.size() <= 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) run_one(i);
    return reports;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, configs.size()); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < configs.size(); i = next++) run_one(i);
    });
  }
  for (auto& t : pool) t.join();
  return reports;
}

// Index of the smallest eer; ties resolved toward the smaller lr.
std::optional<std::size_t> argmin_eer(const std::vector<SearchEntry>& entries) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!std::isfinite(entries[i].dev_eer)) continue;
    if (!best || entries[i].dev_eer < entries[*best].dev_eer ||
        (entries[i].dev_eer == entries[*best].dev_eer && entries[i].lr < entries[*best].lr)) {
      best = i;
    }
  }
  return best;
}

double parse_decimal(const std::string& s) { return *text::parse_double(s); }

}  // namespace

void RunConfig::validate() const {
  if (dataset_manifest_path.empty()) throw OrchestratorError("dataset_manifest_path must not be empty");
  if (validation_trials_path.empty()) throw OrchestratorError("validation_trials_path must not be empty");
  if (n_steps <= 0) throw OrchestratorError("n_steps must be positive");
  if (schedule.n_steps != n_steps) throw OrchestratorError("schedule.n_steps must equal n_steps");
  if (validation_cadence.kind == ValidationCadence::Kind::every_k_steps && validation_cadence.k <= 0) {
    throw OrchestratorError("validation cadence k must be positive");
  }
  if (!(regularization.layerdrop >= 0.0 && regularization.layerdrop <= 1.0) ||
      !(regularization.dropout >= 0.0 && regularization.dropout <= 1.0)) {
    throw OrchestratorError("layerdrop and dropout must lie in [0, 1]");
  }
  schedule.validate();
  freeze.validate();
  loss.validate();
  sampling.validate();
  masking.validate();
}

RunConfig default_run_config() {
  RunConfig c;
  c.schedule = ScheduleSpec{ScheduleKind::triangular2, 1e-4, 1e-8, 50000, 4};
  c.n_steps = 50000;
  c.freeze.freeze_all_until_step = 12500;
  c.freeze.always_trainable_groups = {"classifier"};
  c.freeze.groups_frozen_entire_run = {"feature_extractor"};
  c.loss = LossParams{0.2, 30.0};
  c.sampling = SamplingSpec{100, 2.0, 0};
  c.masking.mode = MaskMode::fraction;
  c.validation_cadence = {ValidationCadence::Kind::every_k_steps, 5000};
  c.regularization = {0.1, 0.1, true};
  c.weights_init = WeightsInit::pretrained;
  return c;
}

void to_json(Json& j, const RunConfig& v) {
  Json cadence{{"kind", v.validation_cadence.kind == ValidationCadence::Kind::every_k_steps ? "every_k_steps"
                                                                                             : "every_epoch"}};
  if (v.validation_cadence.kind == ValidationCadence::Kind::every_k_steps) cadence["k"] = v.validation_cadence.k;
  j = Json{{"run_name", v.run_name},
           {"dataset_manifest_path", v.dataset_manifest_path},
           {"validation_trials_path", v.validation_trials_path},
           {"dev_trials_path", v.dev_trials_path},
           {"schedule", v.schedule},
           {"freeze", v.freeze},
           {"loss", v.loss},
           {"sampling", v.sampling},
           {"masking", v.masking},
           {"n_steps", v.n_steps},
           {"seed", v.seed},
           {"validation_cadence", std::move(cadence)},
           {"regularization_flags",
            Json{{"layerdrop", v.regularization.layerdrop},
                 {"dropout", v.regularization.dropout},
                 {"masking_enabled", v.regularization.masking_enabled}}},
           {"weights_init", to_string(v.weights_init)},
           {"trainer_command", v.trainer_command}};
}

void from_json(const Json& j, RunConfig& v) {
  v.run_name = j.contains("run_name") ? require<std::string>(j, "run_name") : "";
  v.dev_trials_path = j.contains("dev_trials_path") ? require<std::string>(j, "dev_trials_path") : "";
  v.dataset_manifest_path = require<std::string>(j, "dataset_manifest_path");
  v.validation_trials_path = require<std::string>(j, "validation_trials_path");
  v.schedule = require<ScheduleSpec>(j, "schedule");
  v.freeze = require<FreezeSpec>(j, "freeze");
  v.loss = require<LossParams>(j, "loss");
  v.sampling = require<SamplingSpec>(j, "sampling");
  v.masking = require<MaskSpec>(j, "masking");
  v.n_steps = require<std::int64_t>(j, "n_steps");
  v.seed = require<std::uint64_t>(j, "seed");

  const auto cadence = require<Json>(j, "validation_cadence");
  const auto kind = require<std::string>(cadence, "kind");
  if (kind == "every_k_steps") {
    v.validation_cadence = {ValidationCadence::Kind::every_k_steps, require<std::int64_t>(cadence, "k")};
  } else if (kind == "every_epoch") {
    v.validation_cadence = {ValidationCadence::Kind::every_epoch, 0};
  } else {
    throw OrchestratorError("unknown validation cadence '" + kind + "'");
  }

  const auto reg = require<Json>(j, "regularization_flags");
  v.regularization.layerdrop = require<double>(reg, "layerdrop");
  v.regularization.dropout = require<double>(reg, "dropout");
  v.regularization.masking_enabled = require<bool>(reg, "masking_enabled");

  const auto weights = require<std::string>(j, "weights_init");
  if (weights == "pretrained") {
    v.weights_init = WeightsInit::pretrained;
  } else if (weights == "random") {
    v.weights_init = WeightsInit::random;
  } else {
    throw OrchestratorError("unknown weights_init '" + weights + "'");
  }
  v.trainer_command = require<std::string>(j, "trainer_command");
}

double RunReport::selection_eer() const { return status == RunStatus::ok ? dev_eer : kInf; }

RunReport failed_report(std::string diagnostic) {
  RunReport r;
  r.status = RunStatus::failed;
  r.diagnostic = std::move(diagnostic);
  return r;
}

RunReport parse_run_report(const Json& j) {
  RunReport r;
  const auto status = require<std::string>(j, "status");
  if (status == "failed") {
    r.status = RunStatus::failed;
    r.diagnostic = "trainer reported failure";
    if (j.contains("error") && j["error"].is_string()) r.diagnostic += ": " + j["error"].get<std::string>();
    return r;
  }
  if (status != "ok") throw OrchestratorError("unknown report status '" + status + "'");
  r.status = RunStatus::ok;
  r.best_validation_eer = require<double>(j, "best_validation_eer");
  r.best_checkpoint_step = require<std::int64_t>(j, "best_checkpoint_step");
  r.dev_eer = require<double>(j, "dev_eer");
  const auto history = require<Json>(j, "history");
  if (!history.is_array() || history.empty()) throw OrchestratorError("history must be a non-empty array");
  for (const auto& entry : history) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_integer() || !entry[1].is_number()) {
      throw OrchestratorError("history entries must be [step, eer] pairs");
    }
    r.history.emplace_back(entry[0].get<std::int64_t>(), entry[1].get<double>());
  }
  auto in_unit = [](double e) { return std::isfinite(e) && e >= 0.0 && e <= 1.0; };
  if (!in_unit(r.dev_eer) || !in_unit(r.best_validation_eer)) throw OrchestratorError("EER values must lie in [0, 1]");
  double lowest = kInf;
  for (const auto& [step, eer] : r.history) {
    if (!in_unit(eer)) throw OrchestratorError("history EER values must lie in [0, 1]");
    lowest = std::min(lowest, eer);
  }
  if (std::abs(lowest - r.best_validation_eer) > 1e-12) {
    throw OrchestratorError("best_validation_eer is not the minimum of the history");
  }
  const bool step_known = std::any_of(r.history.begin(), r.history.end(),
                                      [&](const auto& h) { return h.first == r.best_checkpoint_step; });
  if (!step_known) throw OrchestratorError("best_checkpoint_step does not appear in the history");
  if (j.contains("embeddings_path") && !j["embeddings_path"].is_null()) {
    r.embeddings_path = require<std::string>(j, "embeddings_path");
  }
  return r;
}

void to_json(Json& j, const RunReport& v) {
  j = Json{{"status", to_string(v.status)}};
  if (v.status == RunStatus::ok) {
    Json history = Json::array();
    for (const auto& [step, eer] : v.history) history.push_back(Json::array({step, eer}));
    j["best_validation_eer"] = v.best_validation_eer;
    j["best_checkpoint_step"] = v.best_checkpoint_step;
    j["dev_eer"] = v.dev_eer;
    j["history"] = std::move(history);
    if (v.embeddings_path) j["embeddings_path"] = *v.embeddings_path;
  } else {
    j["diagnostic"] = v.diagnostic;
    if (v.exit_code) j["exit_code"] = *v.exit_code;
  }
}

RunReport run_trainer(const RunConfig& cfg, const std::string& run_dir, std::chrono::milliseconds timeout) {
  try {
    cfg.validate();
  } catch (const Error& e) {
    return failed_report(std::string("invalid run config: ") + e.what());
  }
  if (cfg.trainer_command.empty()) return failed_report("no trainer command configured");
  for (const auto* path : {&cfg.dataset_manifest_path, &cfg.validation_trials_path, &cfg.dev_trials_path}) {
    if (!path->empty() && !fs::exists(*path)) return failed_report("missing input file '" + *path + "'");
  }

  std::error_code ec;
  fs::create_directories(run_dir, ec);
  if (ec) return failed_report("cannot create run directory '" + run_dir + "'");
  const auto config_path = (fs::path(run_dir) / "run_config.json").string();
  const auto report_path = fs::path(run_dir) / "report.json";
  fs::remove(report_path, ec);
  {
    std::ofstream out(config_path, std::ios::binary);
    out << Json(cfg).dump(2) << '\n';
    if (!out) return failed_report("cannot write '" + config_path + "'");
  }

  ProcessResult proc;
  try {
    proc = run_shell_command(cfg.trainer_command, {config_path, run_dir}, timeout,
                             (fs::path(run_dir) / "trainer.log").string());
  } catch (const Error& e) {
    return failed_report(e.what());
  }
  if (proc.timed_out) return failed_report("trainer timed out after " + std::to_string(timeout.count()) + " ms");
  if (proc.term_signal != 0) return failed_report("trainer killed by signal " + std::to_string(proc.term_signal));
  if (proc.exit_code != 0) {
    auto r = failed_report("trainer exited with code " + std::to_string(proc.exit_code));
    r.exit_code = proc.exit_code;
    return r;
  }

  std::ifstream in(report_path, std::ios::binary);
  if (!in) return failed_report("missing report file '" + report_path.string() + "'");
  try {
    auto r = parse_run_report(Json::parse(in));
    r.exit_code = 0;
    return r;
  } catch (const std::exception& e) {
    return failed_report(std::string("malformed report: ") + e.what());
  }
}

Trainer process_trainer(ProcessTrainerOptions options) {
  return [options](const RunConfig& cfg) {
    const auto name = cfg.run_name.empty() ? std::string("run") : cfg.run_name;
    const auto dir = fs::path(options.work_dir) / (name + "-" + hex_digest(fnv1a64(Json(cfg).dump())));
    return run_trainer(cfg, dir.string(), options.timeout);
  };
}

std::vector<double> phase1_candidates() {
  std::vector<double> out;
  for (int i = 2; i <= 7; ++i) out.push_back(parse_decimal("1e-" + std::to_string(i)));
  return out;
}

std::vector<double> phase2_candidates(int best_exponent) {
  std::vector<double> out;
  for (int e : {best_exponent - 1, best_exponent}) {
    for (const char* mantissa : {"1.78", "3.16", "5.62"}) {
      out.push_back(parse_decimal(std::string(mantissa) + "e" + std::to_string(e)));
    }
  }
  return out;
}

SearchReport lr_search(const RunConfig& base, const Trainer& trainer, const SearchOptions& options) {
  base.validate();
  auto configs_for = [&](const std::vector<double>& lrs, const char* phase) {
    std::vector<RunConfig> configs;
    for (double lr : lrs) {
      RunConfig c = base;
      c.schedule.max_lr = lr;
      c.run_name = prefixed(base.run_name, std::string("lr-search-") + phase + "-" + lr_label(lr));
      configs.push_back(std::move(c));
    }
    return configs;
  };

  SearchReport report;
  const auto p1 = phase1_candidates();
  const auto p1_reports = run_all(configs_for(p1, "p1"), trainer, options.max_concurrency);
  for (std::size_t i = 0; i < p1.size(); ++i) {
    report.phase1.push_back({p1[i], p1_reports[i].selection_eer(), false, p1_reports[i]});
  }
  const auto best1 = argmin_eer(report.phase1);
  if (!best1) throw OrchestratorError("all learning-rate search runs failed in phase 1");
  report.best_exponent = -2 - static_cast<int>(*best1);

  std::vector<double> to_run;
  for (double lr : phase2_candidates(report.best_exponent)) {
    auto same = std::find_if(report.phase1.begin(), report.phase1.end(), [lr](const SearchEntry& e) {
      return std::abs(e.lr - lr) <= 1e-12 * std::abs(lr);
    });
    if (same != report.phase1.end()) {
      report.phase2.push_back({lr, same->dev_eer, true, same->report});
    } else {
      report.phase2.push_back({lr, kInf, false, {}});
      to_run.push_back(lr);
    }
  }
  const auto p2_reports = run_all(configs_for(to_run, "p2"), trainer, options.max_concurrency);
  std::size_t next = 0;
  for (auto& entry : report.phase2) {
    if (entry.reused) continue;
    entry.report = p2_reports[next++];
    entry.dev_eer = entry.report.selection_eer();
  }

  std::vector<SearchEntry> all = report.phase1;
  for (const auto& e : report.phase2) {
    if (!e.reused) all.push_back(e);
  }
  const auto best = argmin_eer(all);
  report.selected_lr = all[*best].lr;
  report.selected_dev_eer = all[*best].dev_eer;
  return report;
}

MatrixReport experiment_matrix(const RunConfig& base, const std::vector<std::int64_t>& steps_list,
                               const std::vector<std::uint64_t>& seeds_list, const Trainer& trainer,
                               const SearchOptions& options) {
  if (steps_list.empty() || seeds_list.empty()) throw OrchestratorError("steps and seeds lists must be non-empty");
  MatrixReport report;
  std::vector<RunConfig> configs;
  for (auto steps : steps_list) {
    for (auto seed : seeds_list) {
      RunConfig c = base;
      c.n_steps = steps;
      c.schedule.n_steps = steps;
      c.seed = seed;
      c.sampling.seed = seed;
      c.run_name = prefixed(base.run_name, "steps" + std::to_string(steps) + "-seed" + std::to_string(seed));
      c.validate();
      configs.push_back(std::move(c));
      report.cells.push_back({steps, seed, {}});
    }
  }
  const auto reports = run_all(configs, trainer, options.max_concurrency);
  for (std::size_t i = 0; i < reports.size(); ++i) report.cells[i].report = reports[i];

  for (std::size_t s = 0; s < steps_list.size(); ++s) {
    MatrixRow row;
    row.n_steps = steps_list[s];
    std::vector<double> eers;
    for (std::size_t k = 0; k < seeds_list.size(); ++k) {
      const auto& r = report.cells[s * seeds_list.size() + k].report;
      if (r.status == RunStatus::ok) {
        eers.push_back(r.dev_eer);
      } else {
        ++row.n_failed;
      }
    }
    row.n_ok = eers.size();
    if (eers.empty()) {
      row.mean_dev_eer = row.std_dev_eer = std::numeric_limits<double>::quiet_NaN();
    } else {
      double sum = 0.0;
      for (double e : eers) sum += e;
      row.mean_dev_eer = sum / static_cast<double>(eers.size());
      double sq = 0.0;
      for (double e : eers) sq += (e - row.mean_dev_eer) * (e - row.mean_dev_eer);
      row.std_dev_eer = eers.size() > 1 ? std::sqrt(sq / static_cast<double>(eers.size() - 1)) : 0.0;
    }
    report.rows.push_back(row);
  }
  return report;
}

std::vector<RunConfig> ablation_suite(const RunConfig& base) {
  base.validate();
  std::vector<RunConfig> out;
  auto variant = [&](const std::string& name) -> RunConfig& {
    out.push_back(base);
    out.back().run_name = prefixed(base.run_name, name);
    return out.back();
  };

  variant("schedule-constant").schedule.kind = ScheduleKind::constant;
  variant("schedule-exp-decay").schedule.kind = ScheduleKind::exp_decay;
  {
    auto& c = variant("schedule-one-cycle");
    c.schedule.kind = ScheduleKind::one_cycle;
    c.schedule.n_cycles = 1;
  }

  const int cycles = base.schedule.kind == ScheduleKind::one_cycle ? 1 : base.schedule.n_cycles;
  const std::int64_t first_cycle = base.schedule.n_steps / cycles;
  const auto trainable =
      base.freeze.always_trainable_groups.empty() ? std::set<std::string>{"classifier"} : base.freeze.always_trainable_groups;
  const auto cnn = base.freeze.groups_frozen_entire_run.empty() ? std::set<std::string>{"feature_extractor"}
                                                                : base.freeze.groups_frozen_entire_run;

  variant("weights-random-init").weights_init = WeightsInit::random;
  {
    auto& c = variant("weights-pretrained-no-freeze");
    c.weights_init = WeightsInit::pretrained;
    c.freeze = FreezeSpec{0, trainable, {}};
  }
  {
    auto& c = variant("weights-pretrained-freeze-cnn");
    c.weights_init = WeightsInit::pretrained;
    c.freeze = FreezeSpec{0, trainable, cnn};
  }
  {
    auto& c = variant("weights-pretrained-freeze-first-cycle");
    c.weights_init = WeightsInit::pretrained;
    c.freeze = FreezeSpec{first_cycle, trainable, {}};
  }

  const double layerdrop = base.regularization.layerdrop > 0.0 ? base.regularization.layerdrop : 0.1;
  const double dropout = base.regularization.dropout > 0.0 ? base.regularization.dropout : 0.1;
  variant("regularization-none").regularization = {0.0, 0.0, false};
  variant("regularization-dropout-only").regularization = {0.0, dropout, false};
  variant("regularization-layerdrop-only").regularization = {layerdrop, 0.0, false};
  variant("regularization-masking-only").regularization = {0.0, 0.0, true};
  return out;
}

void to_json(Json& j, const SearchReport& v) {
  auto entries = [](const std::vector<SearchEntry>& list) {
    Json a = Json::array();
    for (const auto& e : list) {
      a.push_back(Json{{"lr", e.lr}, {"dev_eer", nullable_number(e.dev_eer)}, {"reused", e.reused}, {"report", e.report}});
    }
    return a;
  };
  j = Json{{"phase1", entries(v.phase1)},
           {"phase2", entries(v.phase2)},
           {"best_exponent", v.best_exponent},
           {"selected_lr", v.selected_lr},
           {"selected_dev_eer", nullable_number(v.selected_dev_eer)}};
}

void to_json(Json& j, const MatrixReport& v) {
  Json cells = Json::array();
  for (const auto& c : v.cells) cells.push_back(Json{{"n_steps", c.n_steps}, {"seed", c.seed}, {"report", c.report}});
  Json rows = Json::array();
  for (const auto& r : v.rows) {
    rows.push_back(Json{{"n_steps", r.n_steps},
                        {"n_ok", r.n_ok},
                        {"n_failed", r.n_failed},
                        {"mean_dev_eer", nullable_number(r.mean_dev_eer)},
                        {"std_dev_eer", nullable_number(r.std_dev_eer)}});
  }
  j = Json{{"cells", std::move(cells)}, {"rows", std::move(rows)}};
}

namespace {

std::string percent(double eer) {
  if (!std::isfinite(eer)) return "failed";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * eer);
  return buf;
}

}  // namespace

std::string format_search_table(const SearchReport& v) {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof(line), "%-6s %-10s %12s\n", "phase", "lr", "dev EER (%)");
  os << line;
  auto emit = [&](int phase, const SearchEntry& e) {
    std::snprintf(line, sizeof(line), "%-6d %-10s %12s%s\n", phase, lr_label(e.lr).c_str(), percent(e.dev_eer).c_str(),
                  e.reused ? "  (reused)" : "");
    os << line;
  };
  for (const auto& e : v.phase1) emit(1, e);
  for (const auto& e : v.phase2) emit(2, e);
  os << "selected lr " << lr_label(v.selected_lr) << ", dev EER " << percent(v.selected_dev_eer) << " %\n";
  return os.str();
}

std::string format_matrix_table(const MatrixReport& v) {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof(line), "%-10s %10s %8s %8s\n", "steps", "mean (%)", "std", "runs");
  os << line;
  for (const auto& r : v.rows) {
    const auto runs = std::to_string(r.n_ok) + "/" + std::to_string(r.n_ok + r.n_failed);
    std::snprintf(line, sizeof(line), "%-10lld %10s %8s %8s\n", static_cast<long long>(r.n_steps),
                  percent(r.mean_dev_eer).c_str(), percent(r.std_dev_eer).c_str(), runs.c_str());
    os << line;
  }
  return os.str();
}

}  // namespace tinyvox
