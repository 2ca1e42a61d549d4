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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "tinyvox/manifest.hpp"

namespace tinyvox {

struct CarveParams {
  /// Sessions move to validation until the retained fraction of a speaker's
  /// utterances is strictly below this value.
  double retain_fraction_threshold = 0.99;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CarveResult {
  Manifest train;
  Manifest validation;
};

/// Moves randomly drawn sessions of every speaker to a validation split.
///
/// Speakers are visited in ascending id order. Each speaker's sessions
/// (ascending id) are shuffled with Rng::keyed(seed, fnv1a64(speaker_id),
/// "carve-validation") and moved one at a time until
/// retained / total < threshold. Throws SubsetError if a speaker has a single
/// session, or if carving would move every session of a speaker.
CarveResult carve_validation(const Manifest& m, const CarveParams& p);

struct SubsetParams {
  int per_gender_speakers = 50;
  int utterances_per_speaker = 8;
  std::optional<std::size_t> utterance_cap = 50000;

  void validate() const;
};

enum class SubsetKind { few_speakers, few_sessions, many_sessions };

std::string_view to_string(SubsetKind kind);
std::optional<SubsetKind> parse_subset_kind(std::string_view text);

/// The per_gender_speakers speakers of each gender with the most sessions
/// (ties: more utterances, then ascending speaker id), with all their
/// utterances.
Manifest build_few_speakers(const Manifest& train, const SubsetParams& p);

/// utterances_per_speaker utterances per speaker, filled greedily from the
/// largest session down (ties: ascending session id); utterances within a
/// session are taken in ascending id order.
Manifest build_few_sessions(const Manifest& train, const SubsetParams& p);

/// utterances_per_speaker utterances per speaker, one utterance per session
/// per cycle over the same session order as build_few_sessions, skipping
/// exhausted sessions.
Manifest build_many_sessions(const Manifest& train, const SubsetParams& p);

Manifest build_subset(SubsetKind kind, const Manifest& train, const SubsetParams& p);

}  // namespace tinyvox
