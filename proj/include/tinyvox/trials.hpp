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
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "tinyvox/manifest.hpp"

namespace tinyvox {

enum class TrialLabel { nontarget = 0, target = 1 };

struct Trial {
  TrialLabel label = TrialLabel::nontarget;
  std::string utterance_a;
  std::string utterance_b;

  bool operator==(const Trial&) const = default;
};

struct TrialList {
  std::vector<Trial> trials;

  std::size_t size() const { return trials.size(); }
  std::size_t n_target() const;
  std::size_t n_nontarget() const { return trials.size() - n_target(); }

  bool operator==(const TrialList&) const = default;
};

struct TrialOptions {
  /// Restrict target pairs to utterances from different sessions.
  bool cross_session_targets_only = false;
};

/// Samples n_target same-speaker pairs and n_nontarget different-speaker,
/// same-gender pairs, each uniformly without replacement from the admissible
/// pairs, then shuffles the combined list. Within a pair the lexicographically
/// smaller id comes first. Deterministic in (m, counts, seed, options).
TrialList generate_trials(const Manifest& m, std::size_t n_target, std::size_t n_nontarget, std::uint64_t seed,
                          const TrialOptions& options = {});

/// Number of admissible target / nontarget pairs.
std::uint64_t count_target_pairs(const Manifest& m, const TrialOptions& options = {});
std::uint64_t count_nontarget_pairs(const Manifest& m);

struct TrialIssue {
  std::size_t index = 0;  ///< position in the list
  std::string message;
};

/// Empty result means the list is consistent with m.
std::vector<TrialIssue> validate_trials(const TrialList& t, const Manifest& m);

/// `<label> <utterance_a> <utterance_b>` per line with label 1 (target) or
/// 0 (nontarget); LF or CRLF accepted.
TrialList read_trials(std::istream& in);
TrialList read_trials_file(const std::string& path);
void write_trials(std::ostream& out, const TrialList& t);
void write_trials_file(const std::string& path, const TrialList& t);

}  // namespace tinyvox
