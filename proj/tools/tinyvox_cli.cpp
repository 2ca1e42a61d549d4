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

// Command-line front end. Every subcommand prints JSON on stdout (tables with
// --pretty) and reports failures as a single JSON line on stderr.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tinyvox/error.hpp"
#include "tinyvox/json_io.hpp"
#include "tinyvox/loss.hpp"
#include "tinyvox/manifest.hpp"
#include "tinyvox/orchestrator.hpp"
#include "tinyvox/sampling.hpp"
#include "tinyvox/schedule.hpp"
#include "tinyvox/scoring.hpp"
#include "tinyvox/subsetting.hpp"
#include "tinyvox/trials.hpp"

namespace fs = std::filesystem;
using namespace tinyvox;

namespace {

/// Non-zero exit requested by a command that still produced regular output.
struct ExitStatus {
  int code;
};

bool g_pretty = false;

void emit(const Json& j) { std::cout << (g_pretty ? j.dump(2) : j.dump()) << '\n'; }

std::string one_decimal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

void print_stats_table(const DatasetStats& s) {
  std::printf("%-14s %10s %10s %12s %22s %22s\n", "", "duration(h)", "speakers", "utterances",
              "sessions/spk mean/min/max", "utt/session mean/min/max");
  std::printf("%-14s %10s %10zu %12zu %12s/%zu/%zu %14s/%zu/%zu\n", "", std::to_string(std::lround(s.duration_hours)).c_str(),
              s.n_speakers, s.n_utterances, one_decimal(s.sessions_per_speaker.mean).c_str(),
              s.sessions_per_speaker.min, s.sessions_per_speaker.max, one_decimal(s.utterances_per_session.mean).c_str(),
              s.utterances_per_session.min, s.utterances_per_session.max);
  std::printf("sessions: %zu\n", s.n_sessions);
}

std::string provenance_path(const std::string& manifest_path) { return manifest_path + ".provenance.json"; }

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) throw Error("cannot write '" + path + "'");
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error("invalid JSON in '" + path + "': " + e.what());
  }
}

RunConfig load_run_config(const std::string& path, const std::string& trainer_flag) {
  RunConfig cfg = read_json_file(path).get<RunConfig>();
  if (!trainer_flag.empty()) {
    cfg.trainer_command = trainer_flag;
  } else if (cfg.trainer_command.empty()) {
    if (const char* env = std::getenv("TINYVOX_TRAINER")) cfg.trainer_command = env;
  }
  return cfg;
}

struct TrainerFlags {
  std::string config;
  std::string trainer_command;
  std::string work_dir = "runs";
  double timeout_s = 0.0;
  int jobs = 1;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config, "Base RunConfig JSON")->required()->check(CLI::ExistingFile);
    cmd->add_option("--trainer-command", trainer_command,
                    "Trainer executable; defaults to the config's value, then $TINYVOX_TRAINER");
    cmd->add_option("--work-dir", work_dir, "Directory receiving one sub-directory per run")->capture_default_str();
    cmd->add_option("--timeout", timeout_s, "Per-run wall-clock limit in seconds (0 = none)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--jobs", jobs, "Maximum concurrent trainer processes")->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  Trainer trainer() const {
    return process_trainer({work_dir, std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(timeout_s * 1000)))});
  }
};

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const auto v = std::stoll(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<T>(v));
    } catch (const std::exception&) {
      throw Error(std::string("invalid ") + what + " list entry '" + item + "'");
    }
  }
  if (out.empty()) throw Error(std::string("empty ") + what + " list");
  return out;
}

std::set<std::string> parse_groups(const std::vector<std::string>& items) { return {items.begin(), items.end()}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tinyvox: dataset subsetting, trials, scoring, schedules and run orchestration for speaker verification"};
  app.require_subcommand(1);
  app.add_flag("--pretty", g_pretty, "Human-readable output instead of compact JSON");

  std::function<void()> action;

  // stats
  std::string manifest_path;
  auto* stats = app.add_subcommand("stats", "Dataset statistics of a manifest");
  stats->add_option("--manifest", manifest_path, "Manifest (.csv or .jsonl)")->required();
  stats->callback([&] {
    action = [&] {
      const auto s = manifest_stats(load_manifest_file(manifest_path));
      if (g_pretty) {
        print_stats_table(s);
      } else {
        emit(Json(s));
      }
    };
  });

  // carve-val
  CarveParams carve;
  std::string train_out, val_out;
  auto* carve_cmd = app.add_subcommand("carve-val", "Move random sessions of every speaker to a validation split");
  carve_cmd->add_option("--manifest", manifest_path, "Source manifest")->required();
  carve_cmd->add_option("--seed", carve.seed, "Random seed")->required();
  carve_cmd->add_option("--threshold", carve.retain_fraction_threshold,
                        "Stop once a speaker retains less than this fraction")
      ->capture_default_str();
  carve_cmd->add_option("--train-out", train_out, "Output train manifest")->required();
  carve_cmd->add_option("--val-out", val_out, "Output validation manifest")->required();
  carve_cmd->callback([&] {
    action = [&] {
      const auto source = load_manifest_file(manifest_path);
      const auto result = carve_validation(source, carve);
      write_manifest_file(train_out, result.train);
      write_manifest_file(val_out, result.validation);
      const auto prov = carve_provenance(carve, source, result);
      write_json_file(provenance_path(train_out), prov);
      write_json_file(provenance_path(val_out), prov);
      emit(Json{{"train", manifest_stats(result.train)},
                {"validation", manifest_stats(result.validation)},
                {"provenance", prov}});
    };
  });

  // subset
  SubsetParams subset_params;
  std::string subset_out;
  std::size_t cap = 50000;
  bool no_cap = false;
  auto* subset = app.add_subcommand("subset", "Build a tiny training subset");
  subset->require_subcommand(1);
  for (auto kind : {SubsetKind::few_speakers, SubsetKind::few_sessions, SubsetKind::many_sessions}) {
    auto* cmd = subset->add_subcommand(std::string(to_string(kind)), "Build the " + std::string(to_string(kind)) + " subset");
    cmd->add_option("--manifest", manifest_path, "Train manifest")->required();
    cmd->add_option("--out", subset_out, "Output manifest; provenance goes to <out>.provenance.json")->required();
    if (kind == SubsetKind::few_speakers) {
      cmd->add_option("--per-gender", subset_params.per_gender_speakers, "Speakers per gender")->capture_default_str();
    } else {
      cmd->add_option("--k", subset_params.utterances_per_speaker, "Utterances per speaker")->capture_default_str();
    }
    cmd->add_option("--cap", cap, "Maximum utterances in the subset")->capture_default_str();
    cmd->add_flag("--no-cap", no_cap, "Do not enforce an utterance cap");
    cmd->callback([&, kind] {
      action = [&, kind] {
        subset_params.utterance_cap = no_cap ? std::nullopt : std::optional<std::size_t>(cap);
        const auto source = load_manifest_file(manifest_path);
        const auto result = build_subset(kind, source, subset_params);
        write_manifest_file(subset_out, result);
        const auto prov = subset_provenance(kind, subset_params, source, result);
        write_json_file(provenance_path(subset_out), prov);
        if (g_pretty) {
          print_stats_table(manifest_stats(result));
        } else {
          emit(Json{{"output", subset_out}, {"stats", manifest_stats(result)}, {"provenance", prov}});
        }
      };
    });
  }

  // trials
  std::string trials_path, trials_out;
  std::size_t n_target = 0, n_nontarget = 0;
  std::uint64_t seed = 0;
  bool cross_session = false;
  auto* trials = app.add_subcommand("trials", "Generate or validate verification trial lists");
  trials->require_subcommand(1);
  auto* trials_gen = trials->add_subcommand("generate", "Sample target and same-gender nontarget trials");
  trials_gen->add_option("--manifest", manifest_path, "Manifest")->required();
  trials_gen->add_option("--n-target", n_target, "Number of target trials")->required();
  trials_gen->add_option("--n-nontarget", n_nontarget, "Number of nontarget trials")->required();
  trials_gen->add_option("--seed", seed, "Random seed")->required();
  trials_gen->add_option("--out", trials_out, "Output trial list")->required();
  trials_gen->add_flag("--cross-session-targets-only", cross_session, "Targets only from different sessions");
  trials_gen->callback([&] {
    action = [&] {
      const auto m = load_manifest_file(manifest_path);
      const auto t = generate_trials(m, n_target, n_nontarget, seed, TrialOptions{cross_session});
      write_trials_file(trials_out, t);
      emit(Json{{"output", trials_out},
                {"n_target", t.n_target()},
                {"n_nontarget", t.n_nontarget()},
                {"seed", seed},
                {"manifest_digest", hex_digest(manifest_digest(m))}});
    };
  });
  auto* trials_val = trials->add_subcommand("validate", "Check a trial list against a manifest");
  trials_val->add_option("--manifest", manifest_path, "Manifest")->required();
  trials_val->add_option("--trials", trials_path, "Trial list")->required();
  trials_val->callback([&] {
    action = [&] {
      const auto issues = validate_trials(read_trials_file(trials_path), load_manifest_file(manifest_path));
      Json list = Json::array();
      for (const auto& i : issues) list.push_back(Json{{"index", i.index}, {"message", i.message}});
      emit(Json{{"valid", issues.empty()}, {"issues", std::move(list)}});
      if (!issues.empty()) throw ExitStatus{1};
    };
  });

  // score
  std::string embeddings_path, scores_path;
  auto* score = app.add_subcommand("score", "Cosine-score a trial list");
  score->add_option("--embeddings", embeddings_path, "Embedding file (text or EMB1 binary)")->required();
  score->add_option("--trials", trials_path, "Trial list")->required();
  score->add_option("--out", scores_path, "Output score file")->required();
  score->callback([&] {
    action = [&] {
      const auto scored = score_trials(read_embeddings_file(embeddings_path), read_trials_file(trials_path));
      std::ofstream out(scores_path, std::ios::binary);
      write_scores(out, scored);
      if (!out) throw Error("cannot write '" + scores_path + "'");
      Json j{{"output", scores_path}, {"n_scored", scored.size()}};
      if (!scored.empty()) {
        try {
          j["eer"] = compute_eer(scored);
        } catch (const ScoringError&) {
          j["eer"] = nullptr;  // single-class list
        }
      }
      emit(j);
    };
  });

  // eer
  auto* eer = app.add_subcommand("eer", "Equal error rate of a score file");
  eer->add_option("--scores", scores_path, "Score file (<a> <b> <score>)")->required();
  eer->add_option("--trials", trials_path, "Trial list supplying the labels")->required();
  eer->callback([&] {
    action = [&] {
      const auto t = read_trials_file(trials_path);
      std::ifstream in(scores_path, std::ios::binary);
      if (!in) throw Error("cannot open '" + scores_path + "'");
      const auto r = compute_eer(read_scores(in, t));
      if (g_pretty) {
        std::printf("EER %.4f %%  threshold %.6f  (%zu target / %zu nontarget)\n", 100.0 * r.eer, r.threshold,
                    r.n_target, r.n_nontarget);
      } else {
        emit(Json(r));
      }
    };
  });

  // lr-curve
  ScheduleSpec sched;
  std::string kind_text = "triangular2";
  std::int64_t stride = 1;
  std::string curve_out;
  auto* curve = app.add_subcommand("lr-curve", "Export a learning-rate curve as step,lr CSV");
  curve->add_option("--kind", kind_text, "triangular2 | constant | exp_decay | one_cycle")->capture_default_str();
  curve->add_option("--max-lr", sched.max_lr, "Peak learning rate")->required();
  curve->add_option("--min-lr", sched.min_lr, "Floor learning rate")->capture_default_str();
  curve->add_option("--steps", sched.n_steps, "Number of steps")->required();
  curve->add_option("--cycles", sched.n_cycles, "Cycles (triangular2)")->capture_default_str();
  curve->add_option("--stride", stride, "Sampling stride")->capture_default_str();
  curve->add_option("--out", curve_out, "Write the CSV here instead of stdout");
  curve->callback([&] {
    action = [&] {
      const auto kind = parse_schedule_kind(kind_text);
      if (!kind) throw Error("unknown schedule kind '" + kind_text + "'");
      sched.kind = *kind;
      if (sched.kind == ScheduleKind::one_cycle) sched.n_cycles = 1;
      const auto points = export_curve(sched, stride);
      if (curve_out.empty()) {
        write_curve_csv(std::cout, points);
      } else {
        std::ofstream out(curve_out, std::ios::binary);
        write_curve_csv(out, points);
        if (!out) throw Error("cannot write '" + curve_out + "'");
        emit(Json{{"output", curve_out}, {"points", points.size()}});
      }
    };
  });

  // freeze-timeline
  FreezeSpec freeze{12500, {"classifier"}, {"feature_extractor"}};
  std::vector<std::string> trainable_list{"classifier"}, frozen_list{"feature_extractor"},
      group_list{"feature_extractor", "encoder", "classifier"};
  std::int64_t timeline_steps = 50000;
  auto* timeline = app.add_subcommand("freeze-timeline", "Trainable parameter groups over a run");
  timeline->add_option("--freeze-until", freeze.freeze_all_until_step, "Step at which the initial freeze ends")
      ->capture_default_str();
  timeline->add_option("--trainable", trainable_list, "Groups trainable from step 0")->capture_default_str();
  timeline->add_option("--frozen", frozen_list, "Groups frozen for the whole run")->capture_default_str();
  timeline->add_option("--groups", group_list, "All parameter groups")->capture_default_str();
  timeline->add_option("--steps", timeline_steps, "Run length")->capture_default_str();
  timeline->callback([&] {
    action = [&] {
      freeze.always_trainable_groups = parse_groups(trainable_list);
      freeze.groups_frozen_entire_run = parse_groups(frozen_list);
      freeze.validate();
      if (timeline_steps <= 0) throw Error("--steps must be positive");
      const auto groups = parse_groups(group_list);
      Json segments = Json::array();
      std::int64_t start = 0;
      for (const auto boundary : {std::min(freeze.freeze_all_until_step, timeline_steps), timeline_steps}) {
        if (boundary <= start) continue;
        segments.push_back(Json{{"from_step", start},
                                {"to_step", boundary - 1},
                                {"trainable", trainable_groups_at(freeze, start, groups)}});
        start = boundary;
      }
      emit(Json{{"freeze", freeze}, {"groups", groups}, {"segments", std::move(segments)}});
    };
  });

  // batch-plan
  SamplingSpec sampling;
  std::uint64_t first_step = 0;
  int count = 1;
  auto* batch = app.add_subcommand("batch-plan", "Utterances and chunk offsets of training batches");
  batch->add_option("--manifest", manifest_path, "Training manifest")->required();
  batch->add_option("--seed", sampling.seed, "Random seed")->required();
  batch->add_option("--step", first_step, "First step")->capture_default_str();
  batch->add_option("--count", count, "Number of consecutive steps")->check(CLI::PositiveNumber)->capture_default_str();
  batch->add_option("--batch-size", sampling.batch_size, "Chunks per batch")->capture_default_str();
  batch->add_option("--chunk-seconds", sampling.chunk_seconds, "Chunk length")->capture_default_str();
  batch->callback([&] {
    action = [&] {
      const auto m = load_manifest_file(manifest_path);
      Json plans = Json::array();
      for (int i = 0; i < count; ++i) plans.push_back(batch_plan(m, sampling, first_step + static_cast<std::uint64_t>(i)));
      emit(Json{{"sampling", sampling}, {"plans", std::move(plans)}});
    };
  });

  // mask-plan
  MaskSpec mask;
  std::string mode_text = "specaugment";
  std::int64_t frames = 0, channels = 0;
  auto* maskc = app.add_subcommand("mask-plan", "Time and channel masks for a feature map");
  maskc->add_option("--mode", mode_text, "specaugment | fraction")->capture_default_str();
  maskc->add_option("--frames", frames, "Time frames")->required();
  maskc->add_option("--channels", channels, "Channels")->required();
  maskc->add_option("--seed", seed, "Random seed")->required();
  maskc->add_option("--step", first_step, "First step")->capture_default_str();
  maskc->add_option("--count", count, "Number of consecutive steps")->check(CLI::PositiveNumber)->capture_default_str();
  maskc->add_option("--channel-fraction", mask.channel_fraction, "fraction mode")->capture_default_str();
  maskc->add_option("--time-fraction", mask.time_fraction, "fraction mode")->capture_default_str();
  maskc->callback([&] {
    action = [&] {
      const auto mode = parse_mask_mode(mode_text);
      if (!mode) throw Error("unknown mask mode '" + mode_text + "'");
      mask.mode = *mode;
      Json plans = Json::array();
      for (int i = 0; i < count; ++i) {
        plans.push_back(mask_plan(mask, frames, channels, seed, first_step + static_cast<std::uint64_t>(i)));
      }
      emit(Json{{"masking", mask}, {"seed", seed}, {"plans", std::move(plans)}});
    };
  });

  // loss self-test
  LossParams loss;
  int instances = 200;
  auto* loss_cmd = app.add_subcommand("loss", "AAM-softmax numerics");
  loss_cmd->require_subcommand(1);
  auto* selftest = loss_cmd->add_subcommand("self-test", "Analytic gradient vs central finite differences");
  selftest->add_option("--instances", instances, "Random instances")->check(CLI::PositiveNumber)->capture_default_str();
  selftest->add_option("--seed", seed, "Random seed")->required();
  selftest->add_option("--margin", loss.margin, "Angular margin")->capture_default_str();
  selftest->add_option("--scale", loss.scale, "Logit scale")->capture_default_str();
  selftest->callback([&] {
    action = [&] {
      const auto r = gradient_self_test(instances, seed, loss);
      emit(Json(r));
      if (!r.passed) throw ExitStatus{1};
    };
  });

  // search / matrix / ablations
  TrainerFlags search_flags;
  auto* search = app.add_subcommand("search", "Two-phase learning-rate grid search");
  search_flags.add_to(search);
  search->callback([&] {
    action = [&] {
      const auto cfg = load_run_config(search_flags.config, search_flags.trainer_command);
      const auto r = lr_search(cfg, search_flags.trainer(), SearchOptions{search_flags.jobs});
      if (g_pretty) {
        std::cout << format_search_table(r);
      } else {
        emit(Json(r));
      }
    };
  });

  TrainerFlags matrix_flags;
  std::string steps_text = "25000,50000,100000,400000", seeds_text = "1,2,3";
  auto* matrix = app.add_subcommand("matrix", "Runs over n_steps x seeds with mean/std aggregation");
  matrix_flags.add_to(matrix);
  matrix->add_option("--steps", steps_text, "Comma-separated n_steps values")->capture_default_str();
  matrix->add_option("--seeds", seeds_text, "Comma-separated seeds")->capture_default_str();
  matrix->callback([&] {
    action = [&] {
      const auto cfg = load_run_config(matrix_flags.config, matrix_flags.trainer_command);
      const auto r = experiment_matrix(cfg, parse_list<std::int64_t>(steps_text, "steps"),
                                       parse_list<std::uint64_t>(seeds_text, "seeds"), matrix_flags.trainer(),
                                       SearchOptions{matrix_flags.jobs});
      if (g_pretty) {
        std::cout << format_matrix_table(r);
      } else {
        emit(Json(r));
      }
    };
  });

  std::string ablation_config, ablation_dir;
  auto* ablations = app.add_subcommand("ablations", "Emit the ablation variants of a base RunConfig");
  ablations->add_option("--config", ablation_config, "Base RunConfig JSON")->required()->check(CLI::ExistingFile);
  ablations->add_option("--out-dir", ablation_dir, "Write each variant to <out-dir>/<run_name>.json");
  ablations->callback([&] {
    action = [&] {
      const auto variants = ablation_suite(read_json_file(ablation_config).get<RunConfig>());
      if (!ablation_dir.empty()) {
        fs::create_directories(ablation_dir);
        for (const auto& v : variants) write_json_file((fs::path(ablation_dir) / (v.run_name + ".json")).string(), Json(v));
      }
      emit(Json(variants));
    };
  });

  auto* tmpl = app.add_subcommand("config-template", "Print the default RunConfig");
  tmpl->callback([&] { action = [&] { std::cout << Json(default_run_config()).dump(2) << '\n'; }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << Json{{"error", e.what()}, {"kind", "usage"}}.dump() << '\n';
    return 2;
  }

  try {
    action();
  } catch (const ExitStatus& s) {
    return s.code;
  } catch (const std::exception& e) {
    std::cerr << Json{{"error", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
