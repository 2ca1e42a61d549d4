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

#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tinyvox {

enum class ScheduleKind { triangular2, constant, exp_decay, one_cycle };

std::string_view to_string(ScheduleKind kind);
std::optional<ScheduleKind> parse_schedule_kind(std::string_view text);

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::triangular2;
  double max_lr = 1e-3;
  double min_lr = 1e-8;
  std::int64_t n_steps = 50000;
  int n_cycles = 4;  ///< triangular2 only; one_cycle always uses 1

  /// Throws ScheduleError unless 0 < min_lr <= max_lr, n_steps > 0,
  /// n_cycles > 0 and (for the cyclic kinds) every cycle spans >= 2 steps.
  void validate() const;
  bool operator==(const ScheduleSpec&) const = default;
};

/// Learning rate at step in [0, n_steps).
///
/// triangular2: cycle_length = n_steps / n_cycles (the last cycle takes the
/// remainder); cycle i peaks at max(max_lr / 2^i, min_lr) at its
/// floor(length / 2)-th step and is linear in between, starting and ending
/// at min_lr. exp_decay: max_lr * (min_lr / max_lr)^(step / (n_steps - 1)).
double lr_at(const ScheduleSpec& s, std::int64_t step);

struct CurvePoint {
  std::int64_t step;
  double lr;
};

/// Steps 0, stride, 2*stride, ... and always the last step.
std::vector<CurvePoint> export_curve(const ScheduleSpec& s, std::int64_t stride);
/// `step,lr` CSV with a header.
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

struct FreezeSpec {
  std::int64_t freeze_all_until_step = 0;
  std::set<std::string> always_trainable_groups;
  std::set<std::string> groups_frozen_entire_run;

  void validate() const;
  bool operator==(const FreezeSpec&) const = default;
};

/// Before freeze_all_until_step only the always-trainable groups train;
/// afterwards everything except the groups frozen for the entire run.
std::set<std::string> trainable_groups_at(const FreezeSpec& f, std::int64_t step,
                                          const std::set<std::string>& all_groups);

}  // namespace tinyvox
