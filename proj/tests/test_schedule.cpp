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

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "tinyvox/error.hpp"
#include "tinyvox/rng.hpp"
#include "tinyvox/schedule.hpp"

using namespace tinyvox;

namespace {

ScheduleSpec tri(double max_lr, std::int64_t steps, int cycles, double min_lr = 1e-8) {
  return {ScheduleKind::triangular2, max_lr, min_lr, steps, cycles};
}

// Second differences vanish on [a, b].
bool linear_on(const ScheduleSpec& s, std::int64_t a, std::int64_t b) {
  for (std::int64_t t = a + 1; t < b; ++t) {
    const double d2 = lr_at(s, t + 1) - 2 * lr_at(s, t) + lr_at(s, t - 1);
    if (std::abs(d2) > 1e-12 * s.max_lr) return false;
  }
  return true;
}

const std::set<std::string> kGroups{"feature_extractor", "encoder", "classifier"};

}  // namespace

TEST_SUITE("schedule") {

TEST_CASE("triangular2 examples") {
  const auto s = tri(1e-3, 400, 4);
  CHECK(lr_at(s, 0) == 1e-8);
  CHECK(lr_at(s, 50) == 1e-3);
  CHECK(lr_at(s, 150) == 5e-4);
  CHECK(lr_at(s, 250) == 2.5e-4);
  CHECK(lr_at(s, 350) == 1.25e-4);
  for (std::int64_t b : {0, 100, 200, 300}) CHECK(lr_at(s, b) == 1e-8);
  CHECK(lr_at(s, 25) == doctest::Approx(1e-8 + (1e-3 - 1e-8) / 2).epsilon(1e-14));
}

TEST_CASE("triangular2 matches the closed form when cycles divide the run") {
  for (auto [steps, cycles] : {std::pair<std::int64_t, int>{400, 4}, {50000, 4}, {1000, 1}, {90, 3}, {64, 8}}) {
    const auto s = tri(3e-3, steps, cycles);
    for (std::int64_t t = 0; t < steps; t += std::max<std::int64_t>(1, steps / 2000)) {
      const double ref = oracle::triangular2_closed_form(3e-3, 1e-8, steps, cycles, t);
      CHECK(std::abs(lr_at(s, t) - ref) <= 1e-15 + 1e-12 * ref);
    }
  }
}

TEST_CASE("triangular2 cycle invariants") {
  Rng rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const int cycles = 1 + static_cast<int>(rng.below(6));
    const std::int64_t steps = cycles * 2 + static_cast<std::int64_t>(rng.below(500));
    const double max_lr = std::pow(10.0, -1.0 - 6.0 * rng.uniform01());
    const double min_lr = trial % 4 == 0 ? max_lr / 8 : 1e-8;
    const auto s = tri(max_lr, steps, cycles, min_lr);
    const std::int64_t len = steps / cycles;
    double prev_peak = 0;
    for (int c = 0; c < cycles; ++c) {
      const std::int64_t start = c * len;
      const std::int64_t end = c == cycles - 1 ? steps : start + len;
      const std::int64_t mid = start + (end - start) / 2;
      double hi = 0, lo = 1;
      for (std::int64_t t = start; t < end; ++t) {
        hi = std::max(hi, lr_at(s, t));
        lo = std::min(lo, lr_at(s, t));
      }
      const double peak = std::max(std::ldexp(max_lr, -c), min_lr);
      CHECK(hi == peak);
      CHECK(lr_at(s, mid) == peak);
      CHECK(lo == min_lr);
      if (c > 0) CHECK(peak == std::max(prev_peak / 2, min_lr));
      prev_peak = peak;
      CHECK(linear_on(s, start, mid));
      CHECK(linear_on(s, mid, std::min(end, steps - 1)));
    }
  }
}

TEST_CASE("non-divisible runs give the remainder to the last cycle") {
  const auto s = tri(1e-3, 403, 4);
  CHECK(lr_at(s, 300) == 1e-8);
  CHECK(lr_at(s, 300 + 51) == 1.25e-4);  // last cycle has 103 steps, mid at 51
  CHECK(lr_at(s, 100) == 1e-8);
  CHECK(lr_at(s, 50) == 1e-3);
}

TEST_CASE("every kind stays within [min_lr, max_lr]") {
  for (auto kind : {ScheduleKind::triangular2, ScheduleKind::constant, ScheduleKind::exp_decay, ScheduleKind::one_cycle}) {
    const ScheduleSpec s{kind, 2e-3, 1e-7, 777, 4};
    for (std::int64_t t = 0; t < s.n_steps; ++t) {
      CHECK(lr_at(s, t) >= s.min_lr);
      CHECK(lr_at(s, t) <= s.max_lr);
    }
  }
}

TEST_CASE("constant, exp_decay and one_cycle") {
  const ScheduleSpec c{ScheduleKind::constant, 1e-3, 1e-8, 10, 4};
  CHECK(lr_at(c, 7) == 1e-3);

  const ScheduleSpec e2{ScheduleKind::exp_decay, 1e-3, 1e-8, 2, 4};
  CHECK(lr_at(e2, 0) == 1e-3);
  CHECK(lr_at(e2, 1) == 1e-8);
  const ScheduleSpec e{ScheduleKind::exp_decay, 1e-3, 1e-8, 1001, 4};
  CHECK(lr_at(e, 0) == 1e-3);
  CHECK(lr_at(e, 1000) == 1e-8);
  CHECK(lr_at(e, 500) == doctest::Approx(std::sqrt(1e-3 * 1e-8)).epsilon(1e-12));
  for (std::int64_t t = 1; t < 1001; ++t) CHECK(lr_at(e, t) < lr_at(e, t - 1));

  const ScheduleSpec one{ScheduleKind::one_cycle, 1e-3, 1e-8, 400, 4};
  CHECK(lr_at(one, 200) == 1e-3);
  CHECK(lr_at(one, 0) == 1e-8);
  CHECK(lr_at(one, 100) == doctest::Approx(1e-8 + (1e-3 - 1e-8) / 2).epsilon(1e-14));
}

TEST_CASE("validation and range errors") {
  CHECK_THROWS_AS(lr_at(tri(1e-3, 400, 4), 400), ScheduleError);
  CHECK_THROWS_AS(lr_at(tri(1e-3, 400, 4), -1), ScheduleError);
  CHECK_THROWS_AS(tri(1e-9, 400, 4).validate(), ScheduleError);
  CHECK_THROWS_AS(tri(1e-3, 0, 4).validate(), ScheduleError);
  CHECK_THROWS_AS(tri(1e-3, 7, 4).validate(), ScheduleError);
  CHECK_THROWS_AS(tri(1e-3, 400, 0).validate(), ScheduleError);
  CHECK_THROWS_AS(tri(1e-3, 400, 4, 0.0).validate(), ScheduleError);
  CHECK_NOTHROW(tri(1e-3, 8, 4).validate());
  CHECK(parse_schedule_kind("exp_decay") == ScheduleKind::exp_decay);
  CHECK_FALSE(parse_schedule_kind("cosine").has_value());
}

TEST_CASE("curve export") {
  const auto s = tri(1e-3, 400, 4);
  const auto pts = export_curve(s, 10);
  CHECK(pts.size() == 41);
  CHECK(pts.back().step == 399);
  for (const auto& p : pts) CHECK(p.lr == lr_at(s, p.step));
  CHECK(export_curve(s, 1).size() == 400);
  CHECK(export_curve(s, 399).size() == 2);
  CHECK_THROWS_AS(export_curve(s, 0), ScheduleError);
  std::ostringstream csv;
  write_curve_csv(csv, export_curve(tri(1e-3, 400, 4), 50));
  CHECK(csv.str().rfind("step,lr\n0,1e-08\n50,0.001\n100,1e-08\n150,5e-04\n", 0) == 0);
}

TEST_CASE("freezing timeline") {
  const FreezeSpec f{12500, {"classifier"}, {"feature_extractor"}};
  CHECK(trainable_groups_at(f, 0, kGroups) == std::set<std::string>{"classifier"});
  CHECK(trainable_groups_at(f, 12499, kGroups) == std::set<std::string>{"classifier"});
  CHECK(trainable_groups_at(f, 12500, kGroups) == std::set<std::string>{"classifier", "encoder"});
  const FreezeSpec none{0, {}, {}};
  for (std::int64_t t : {0, 1, 100000}) CHECK(trainable_groups_at(none, t, kGroups) == kGroups);

  CHECK_THROWS_AS(trainable_groups_at(FreezeSpec{0, {"head"}, {}}, 0, kGroups), ScheduleError);
  CHECK_THROWS_AS(trainable_groups_at(FreezeSpec{0, {}, {"cnn"}}, 0, kGroups), ScheduleError);
  CHECK_THROWS_AS(FreezeSpec({0, {"classifier"}, {"classifier"}}).validate(), ScheduleError);
  CHECK_THROWS_AS(FreezeSpec({-1, {}, {}}).validate(), ScheduleError);
}

TEST_CASE("trainable set only grows at the freeze boundary") {
  Rng rng(3);
  const std::vector<std::string> names(kGroups.begin(), kGroups.end());
  for (int t = 0; t < 200; ++t) {
    FreezeSpec f;
    f.freeze_all_until_step = static_cast<std::int64_t>(rng.below(100));
    for (const auto& g : names) {
      const auto r = rng.below(3);
      if (r == 0) f.always_trainable_groups.insert(g);
      if (r == 1) f.groups_frozen_entire_run.insert(g);
    }
    const auto before = trainable_groups_at(f, 0, kGroups);
    const auto after = trainable_groups_at(f, f.freeze_all_until_step, kGroups);
    if (f.freeze_all_until_step > 0) {
      for (const auto& g : before) CHECK(after.count(g));
    }
  }
}

}  // TEST_SUITE
