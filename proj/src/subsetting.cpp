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

#include "tinyvox/subsetting.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include "tinyvox/error.hpp"
#include "tinyvox/rng.hpp"

namespace tinyvox {

namespace {

// Sessions of a speaker sorted by descending utterance count, ties by
// ascending session id.
std::vector<const std::vector<std::size_t>*> sessions_largest_first(const Manifest& m,
                                                                    const std::string& speaker) {
  const auto& ids = m.sessions_of(speaker);  // already ascending
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return m.utterances_of(ids[a]).size() > m.utterances_of(ids[b]).size();
  });
  std::vector<const std::vector<std::size_t>*> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(&m.utterances_of(ids[i]));
  return out;
}

void check_utterance_supply(const Manifest& m, const std::string& speaker, std::size_t k) {
  const auto available = m.utterances_of_speaker(speaker).size();
  if (available < k) {
    throw SubsetError("speaker '" + speaker + "' has " + std::to_string(available) + " utterances, fewer than " +
                      std::to_string(k));
  }
}

Manifest finish(const Manifest& train, const std::vector<std::size_t>& chosen, const SubsetParams& p) {
  if (p.utterance_cap && chosen.size() > *p.utterance_cap) {
    throw SubsetError("subset of " + std::to_string(chosen.size()) + " utterances exceeds the cap of " +
                      std::to_string(*p.utterance_cap));
  }
  return train.select(chosen);
}

}  // namespace

void CarveParams::validate() const {
  if (!(retain_fraction_threshold > 0.0 && retain_fraction_threshold < 1.0)) {
    throw SubsetError("retain fraction threshold must lie in (0, 1)");
  }
}

void SubsetParams::validate() const {
  if (per_gender_speakers <= 0) throw SubsetError("per_gender_speakers must be positive");
  if (utterances_per_speaker <= 0) throw SubsetError("utterances_per_speaker must be positive");
  if (utterance_cap && *utterance_cap == 0) throw SubsetError("utterance_cap must be positive");
}

std::string_view to_string(SubsetKind kind) {
  switch (kind) {
    case SubsetKind::few_speakers:
      return "few-speakers";
    case SubsetKind::few_sessions:
      return "few-sessions";
    case SubsetKind::many_sessions:
      return "many-sessions";
  }
  return "";
}

std::optional<SubsetKind> parse_subset_kind(std::string_view text) {
  if (text == "few-speakers") return SubsetKind::few_speakers;
  if (text == "few-sessions") return SubsetKind::few_sessions;
  if (text == "many-sessions") return SubsetKind::many_sessions;
  return std::nullopt;
}

CarveResult carve_validation(const Manifest& m, const CarveParams& p) {
  p.validate();
  std::vector<bool> to_validation(m.size(), false);

  for (const auto& speaker : m.speakers()) {
    std::vector<std::string> sessions = m.sessions_of(speaker);
    if (sessions.size() < 2) {
      throw SubsetError("speaker '" + speaker + "' has a single session and cannot be carved");
    }
    std::size_t total = 0;
    for (const auto& s : sessions) total += m.utterances_of(s).size();

    auto rng = Rng::keyed(p.seed, fnv1a64(speaker), "carve-validation");
    shuffle(sessions, rng);

    std::size_t retained = total;
    std::size_t moved = 0;
    for (const auto& s : sessions) {
      // retained / total is correctly rounded, so a decimal threshold such
      // as 0.99 compares exactly against 99/100.
      if (static_cast<double>(retained) / static_cast<double>(total) < p.retain_fraction_threshold) break;
      for (auto i : m.utterances_of(s)) to_validation[i] = true;
      retained -= m.utterances_of(s).size();
      ++moved;
    }
    if (moved == sessions.size()) {
      throw SubsetError("carving would move every session of speaker '" + speaker + "' to validation");
    }
  }

  std::vector<std::size_t> train, validation;
  for (std::size_t i = 0; i < m.size(); ++i) (to_validation[i] ? validation : train).push_back(i);
  return {m.select(train), m.select(validation)};
}

Manifest build_few_speakers(const Manifest& train, const SubsetParams& p) {
  p.validate();
  struct Candidate {
    const std::string* id;
    std::size_t sessions;
    std::size_t utterances;
  };
  std::map<Gender, std::vector<Candidate>> by_gender;
  for (const auto& speaker : train.speakers()) {
    by_gender[train.gender_of(speaker)].push_back(
        {&speaker, train.sessions_of(speaker).size(), train.utterances_of_speaker(speaker).size()});
  }

  std::vector<std::size_t> chosen;
  for (Gender g : {Gender::female, Gender::male}) {
    auto& candidates = by_gender[g];
    const auto need = static_cast<std::size_t>(p.per_gender_speakers);
    if (candidates.size() < need) {
      throw SubsetError("insufficient " + std::string(to_string(g)) + " speakers: need " + std::to_string(need) +
                        ", have " + std::to_string(candidates.size()));
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.sessions != b.sessions) return a.sessions > b.sessions;
      if (a.utterances != b.utterances) return a.utterances > b.utterances;
      return *a.id < *b.id;
    });
    for (std::size_t i = 0; i < need; ++i) {
      const auto utts = train.utterances_of_speaker(*candidates[i].id);
      chosen.insert(chosen.end(), utts.begin(), utts.end());
    }
  }
  return finish(train, chosen, p);
}

Manifest build_few_sessions(const Manifest& train, const SubsetParams& p) {
  p.validate();
  const auto k = static_cast<std::size_t>(p.utterances_per_speaker);
  std::vector<std::size_t> chosen;
  for (const auto& speaker : train.speakers()) {
    check_utterance_supply(train, speaker, k);
    std::size_t taken = 0;
    for (const auto* session : sessions_largest_first(train, speaker)) {
      for (auto i : *session) {
        if (taken == k) break;
        chosen.push_back(i);
        ++taken;
      }
      if (taken == k) break;
    }
  }
  return finish(train, chosen, p);
}

Manifest build_many_sessions(const Manifest& train, const SubsetParams& p) {
  p.validate();
  const auto k = static_cast<std::size_t>(p.utterances_per_speaker);
  std::vector<std::size_t> chosen;
  for (const auto& speaker : train.speakers()) {
    check_utterance_supply(train, speaker, k);
    const auto sessions = sessions_largest_first(train, speaker);
    std::vector<std::size_t> cursor(sessions.size(), 0);
    std::size_t taken = 0;
    while (taken < k) {
      for (std::size_t s = 0; s < sessions.size() && taken < k; ++s) {
        if (cursor[s] == sessions[s]->size()) continue;
        chosen.push_back((*sessions[s])[cursor[s]++]);
        ++taken;
      }
    }
  }
  return finish(train, chosen, p);
}

Manifest build_subset(SubsetKind kind, const Manifest& train, const SubsetParams& p) {
  switch (kind) {
    case SubsetKind::few_speakers:
      return build_few_speakers(train, p);
    case SubsetKind::few_sessions:
      return build_few_sessions(train, p);
    case SubsetKind::many_sessions:
      return build_many_sessions(train, p);
  }
  throw SubsetError("unknown subset kind");
}

}  // namespace tinyvox
