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

#include "tinyvox/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tinyvox/error.hpp"
#include "tinyvox/rng.hpp"

namespace tinyvox {

namespace {

std::vector<MaskSpan> random_spans(Rng& rng, int count_min, int count_max, std::int64_t length,
                                   std::int64_t dim) {
  const auto count = rng.between(count_min, count_max);
  std::vector<MaskSpan> spans;
  spans.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) spans.push_back({rng.between(0, dim - length), length});
  return spans;
}

// Partial Fisher-Yates: the first k entries of a shuffled [0, dim).
std::vector<MaskSpan> random_indices(Rng& rng, double fraction, std::int64_t dim) {
  const auto k = static_cast<std::int64_t>(std::llround(fraction * static_cast<double>(dim)));
  std::vector<std::int64_t> pool(static_cast<std::size_t>(dim));
  std::iota(pool.begin(), pool.end(), 0);
  for (std::int64_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(dim - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  std::vector<MaskSpan> spans;
  spans.reserve(pool.size());
  for (auto idx : pool) spans.push_back({idx, 1});
  return spans;
}

}  // namespace

void SamplingSpec::validate() const {
  if (batch_size <= 0) throw SamplingError("batch_size must be positive");
  if (!(chunk_seconds > 0.0) || !std::isfinite(chunk_seconds)) throw SamplingError("chunk_seconds must be positive");
}

BatchPlan batch_plan(const Manifest& m, const SamplingSpec& s, std::uint64_t step) {
  s.validate();
  if (m.empty()) throw SamplingError("cannot sample a batch from an empty manifest");
  auto rng = Rng::keyed(s.seed, step, "batch-plan");
  BatchPlan plan;
  plan.step = step;
  plan.items.reserve(static_cast<std::size_t>(s.batch_size));
  for (int i = 0; i < s.batch_size; ++i) {
    const auto& r = m.records()[static_cast<std::size_t>(rng.below(m.size()))];
    const double slack = r.duration_seconds - s.chunk_seconds;
    const double u = rng.uniform01();
    if (slack < 0.0) {
      plan.items.push_back({r.utterance_id, 0.0, true});
    } else {
      plan.items.push_back({r.utterance_id, std::min(u * slack, slack), false});
    }
  }
  return plan;
}

std::string_view to_string(MaskMode mode) { return mode == MaskMode::specaugment ? "specaugment" : "fraction"; }

std::optional<MaskMode> parse_mask_mode(std::string_view text) {
  if (text == "specaugment") return MaskMode::specaugment;
  if (text == "fraction") return MaskMode::fraction;
  return std::nullopt;
}

void MaskSpec::validate() const {
  if (time_mask_count_min < 0 || time_mask_count_min > time_mask_count_max) {
    throw SamplingError("time mask count range is empty");
  }
  if (channel_mask_count_min < 0 || channel_mask_count_min > channel_mask_count_max) {
    throw SamplingError("channel mask count range is empty");
  }
  if (time_mask_length <= 0 || channel_mask_length <= 0) throw SamplingError("mask lengths must be positive");
  if (!(channel_fraction >= 0.0 && channel_fraction <= 1.0) || !(time_fraction >= 0.0 && time_fraction <= 1.0)) {
    throw SamplingError("mask fractions must lie in [0, 1]");
  }
}

MaskPlan mask_plan(const MaskSpec& spec, std::int64_t frames, std::int64_t channels, std::uint64_t seed,
                   std::uint64_t step) {
  spec.validate();
  if (frames <= 0 || channels <= 0) throw SamplingError("mask shape must be positive");
  MaskPlan plan;
  plan.mode = spec.mode;
  plan.frames = frames;
  plan.channels = channels;
  auto rng = Rng::keyed(seed, step, "mask-plan");
  if (spec.mode == MaskMode::specaugment) {
    if (spec.time_mask_length > frames) {
      throw SamplingError("time mask length " + std::to_string(spec.time_mask_length) + " exceeds " +
                          std::to_string(frames) + " frames");
    }
    if (spec.channel_mask_length > channels) {
      throw SamplingError("channel mask length " + std::to_string(spec.channel_mask_length) + " exceeds " +
                          std::to_string(channels) + " channels");
    }
    plan.time_masks = random_spans(rng, spec.time_mask_count_min, spec.time_mask_count_max, spec.time_mask_length,
                                   frames);
    plan.channel_masks = random_spans(rng, spec.channel_mask_count_min, spec.channel_mask_count_max,
                                      spec.channel_mask_length, channels);
  } else {
    plan.time_masks = random_indices(rng, spec.time_fraction, frames);
    plan.channel_masks = random_indices(rng, spec.channel_fraction, channels);
  }
  return plan;
}

}  // namespace tinyvox
