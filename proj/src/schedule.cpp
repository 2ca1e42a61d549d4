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

#include "tinyvox/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "text_util.hpp"
#include "tinyvox/error.hpp"

namespace tinyvox {

namespace {

int effective_cycles(const ScheduleSpec& s) { return s.kind == ScheduleKind::one_cycle ? 1 : s.n_cycles; }

double cyclic_lr(const ScheduleSpec& s, std::int64_t step) {
  const std::int64_t cycles = effective_cycles(s);
  const std::int64_t cycle_length = s.n_steps / cycles;
  const std::int64_t cycle = std::min(step / cycle_length, cycles - 1);
  const std::int64_t start = cycle * cycle_length;
  const std::int64_t length = cycle == cycles - 1 ? s.n_steps - start : cycle_length;
  const std::int64_t pos = step - start;
  const std::int64_t mid = length / 2;

  const double peak = std::max(std::ldexp(s.max_lr, -static_cast<int>(cycle)), s.min_lr);
  if (pos == 0) return s.min_lr;
  if (pos == mid) return peak;
  const double span = peak - s.min_lr;
  const double lr = pos < mid ? s.min_lr + span * (static_cast<double>(pos) / static_cast<double>(mid))
                              : peak - span * (static_cast<double>(pos - mid) / static_cast<double>(length - mid));
  return std::clamp(lr, s.min_lr, peak);
}

}  // namespace

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::triangular2:
      return "triangular2";
    case ScheduleKind::constant:
      return "constant";
    case ScheduleKind::exp_decay:
      return "exp_decay";
    case ScheduleKind::one_cycle:
      return "one_cycle";
  }
  return "";
}

std::optional<ScheduleKind> parse_schedule_kind(std::string_view text) {
  for (auto k : {ScheduleKind::triangular2, ScheduleKind::constant, ScheduleKind::exp_decay, ScheduleKind::one_cycle}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

void ScheduleSpec::validate() const {
  if (!(min_lr > 0.0) || !std::isfinite(max_lr)) throw ScheduleError("learning rates must be positive and finite");
  if (!(min_lr <= max_lr)) throw ScheduleError("min_lr must not exceed max_lr");
  if (n_steps <= 0) throw ScheduleError("n_steps must be positive");
  if (n_cycles <= 0) throw ScheduleError("n_cycles must be positive");
  if (kind == ScheduleKind::triangular2 || kind == ScheduleKind::one_cycle) {
    if (n_steps / effective_cycles(*this) < 2) throw ScheduleError("every cycle must span at least 2 steps");
  }
}

double lr_at(const ScheduleSpec& s, std::int64_t step) {
  s.validate();
  if (step < 0 || step >= s.n_steps) {
    throw ScheduleError("step " + std::to_string(step) + " outside [0, " + std::to_string(s.n_steps) + ")");
  }
  switch (s.kind) {
    case ScheduleKind::constant:
      return s.max_lr;
    case ScheduleKind::exp_decay: {
      if (step == 0) return s.max_lr;
      if (step == s.n_steps - 1) return s.min_lr;
      const double t = static_cast<double>(step) / static_cast<double>(s.n_steps - 1);
      return std::clamp(s.max_lr * std::pow(s.min_lr / s.max_lr, t), s.min_lr, s.max_lr);
    }
    case ScheduleKind::triangular2:
    case ScheduleKind::one_cycle:
      return cyclic_lr(s, step);
  }
  throw ScheduleError("unknown schedule kind");
}

std::vector<CurvePoint> export_curve(const ScheduleSpec& s, std::int64_t stride) {
  if (stride < 1) throw ScheduleError("stride must be at least 1");
  s.validate();
  std::vector<CurvePoint> out;
  for (std::int64_t step = 0; step < s.n_steps; step += stride) out.push_back({step, lr_at(s, step)});
  if (out.back().step != s.n_steps - 1) out.push_back({s.n_steps - 1, lr_at(s, s.n_steps - 1)});
  return out;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "step,lr\n";
  for (const auto& p : curve) out << p.step << ',' << text::format_double(p.lr) << '\n';
}

void FreezeSpec::validate() const {
  if (freeze_all_until_step < 0) throw ScheduleError("freeze_all_until_step must be non-negative");
  for (const auto& g : always_trainable_groups) {
    if (groups_frozen_entire_run.count(g)) {
      throw ScheduleError("group '" + g + "' is both always trainable and frozen for the entire run");
    }
  }
}

std::set<std::string> trainable_groups_at(const FreezeSpec& f, std::int64_t step,
                                          const std::set<std::string>& all_groups) {
  f.validate();
  for (const auto* groups : {&f.always_trainable_groups, &f.groups_frozen_entire_run}) {
    for (const auto& g : *groups) {
      if (!all_groups.count(g)) throw ScheduleError("unknown group label '" + g + "'");
    }
  }
  if (step < f.freeze_all_until_step) return f.always_trainable_groups;
  std::set<std::string> out;
  for (const auto& g : all_groups) {
    if (!f.groups_frozen_entire_run.count(g)) out.insert(g);
  }
  return out;
}

}  // namespace tinyvox
