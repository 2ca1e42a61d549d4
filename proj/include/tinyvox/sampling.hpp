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
#include <string>
#include <string_view>
#include <vector>

#include "tinyvox/manifest.hpp"

namespace tinyvox {

struct SamplingSpec {
  int batch_size = 100;
  double chunk_seconds = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SamplingSpec&) const = default;
};

struct BatchItem {
  std::string utterance_id;
  double offset_seconds = 0.0;
  /// The utterance is shorter than the chunk; the trainer repeats it to fill.
  bool repeat_pad = false;

  bool operator==(const BatchItem&) const = default;
};

struct BatchPlan {
  std::uint64_t step = 0;
  std::vector<BatchItem> items;

  bool operator==(const BatchPlan&) const = default;
};

/// batch_size utterances drawn uniformly with replacement (manifest record
/// order), each with a chunk offset uniform in [0, duration - chunk].
/// Deterministic in (seed, step).
BatchPlan batch_plan(const Manifest& m, const SamplingSpec& s, std::uint64_t step);

enum class MaskMode { specaugment, fraction };

std::string_view to_string(MaskMode mode);
std::optional<MaskMode> parse_mask_mode(std::string_view text);

struct MaskSpec {
  MaskMode mode = MaskMode::specaugment;
  int time_mask_count_min = 5;
  int time_mask_count_max = 10;
  int time_mask_length = 10;
  int channel_mask_count_min = 1;
  int channel_mask_count_max = 3;
  int channel_mask_length = 4;
  double channel_fraction = 0.10;
  double time_fraction = 0.50;

  void validate() const;
  bool operator==(const MaskSpec&) const = default;
};

struct MaskSpan {
  std::int64_t start = 0;
  std::int64_t length = 0;

  bool operator==(const MaskSpan&) const = default;
};

/// Masked regions of a (frames x channels) feature map. In fraction mode
/// every span has length 1 and spans are sorted by index.
struct MaskPlan {
  MaskMode mode = MaskMode::specaugment;
  std::int64_t frames = 0;
  std::int64_t channels = 0;
  std::vector<MaskSpan> time_masks;
  std::vector<MaskSpan> channel_masks;

  bool operator==(const MaskPlan&) const = default;
};

/// specaugment: mask counts uniform over the inclusive ranges, starts
/// uniform, overlap allowed. fraction: exactly round(fraction * dim)
/// distinct indices per axis. Deterministic in (seed, step).
MaskPlan mask_plan(const MaskSpec& spec, std::int64_t frames, std::int64_t channels, std::uint64_t seed,
                   std::uint64_t step);

}  // namespace tinyvox
