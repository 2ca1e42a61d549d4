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

#include "tinyvox/trials.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <unordered_set>
#include <utility>

#include "text_util.hpp"
#include "tinyvox/error.hpp"
#include "tinyvox/rng.hpp"

namespace tinyvox {

namespace {

// The admissible pairs of one kind, laid out so that every pair has a rank in
// [0, total). Utterances are arranged in a canonical order; each row i pairs
// with the contiguous positions [lo, hi) of that order.
class PairSpace {
 public:
  void add_row(std::size_t i, std::size_t lo, std::size_t hi) {
    if (hi <= lo) return;
    rows_.push_back(i);
    lo_.push_back(lo);
    total_ += hi - lo;
    cumulative_.push_back(total_);
  }

  std::uint64_t total() const { return total_; }

  std::pair<std::size_t, std::size_t> unrank(std::uint64_t k, const std::vector<std::size_t>& order) const {
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), k);
    const auto r = static_cast<std::size_t>(it - cumulative_.begin());
    const std::uint64_t start = r == 0 ? 0 : cumulative_[r - 1];
    return {order[rows_[r]], order[lo_[r] + static_cast<std::size_t>(k - start)]};
  }

 private:
  std::vector<std::size_t> rows_;
  std::vector<std::size_t> lo_;
  std::vector<std::uint64_t> cumulative_;
  std::uint64_t total_ = 0;
};

// Canonical utterance order: speakers ascending, sessions ascending,
// utterances ascending. Per-speaker blocks are contiguous.
std::vector<std::size_t> canonical_order(const Manifest& m, const std::vector<std::string>& speakers) {
  std::vector<std::size_t> order;
  order.reserve(m.size());
  for (const auto& spk : speakers) {
    const auto utts = m.utterances_of_speaker(spk);
    order.insert(order.end(), utts.begin(), utts.end());
  }
  return order;
}

struct Layout {
  std::vector<std::size_t> order;
  PairSpace space;
};

Layout target_layout(const Manifest& m, const TrialOptions& options) {
  Layout out;
  out.order = canonical_order(m, m.speakers());
  std::size_t pos = 0;
  for (const auto& spk : m.speakers()) {
    std::size_t speaker_end = pos;
    for (const auto& s : m.sessions_of(spk)) speaker_end += m.utterances_of(s).size();
    for (const auto& s : m.sessions_of(spk)) {
      const std::size_t block_end = pos + m.utterances_of(s).size();
      for (std::size_t i = pos; i < block_end; ++i) {
        out.space.add_row(i, options.cross_session_targets_only ? block_end : i + 1, speaker_end);
      }
      pos = block_end;
    }
  }
  return out;
}

Layout nontarget_layout(const Manifest& m) {
  std::vector<std::string> speakers;
  for (Gender g : {Gender::female, Gender::male}) {
    for (const auto& spk : m.speakers()) {
      if (m.gender_of(spk) == g) speakers.push_back(spk);
    }
  }
  Layout out;
  out.order = canonical_order(m, speakers);

  std::size_t pos = 0;
  for (Gender g : {Gender::female, Gender::male}) {
    std::size_t group_end = pos;
    for (const auto& spk : speakers) {
      if (m.gender_of(spk) == g) group_end += m.utterances_of_speaker(spk).size();
    }
    for (const auto& spk : speakers) {
      if (m.gender_of(spk) != g) continue;
      const std::size_t block_end = pos + m.utterances_of_speaker(spk).size();
      for (std::size_t i = pos; i < block_end; ++i) out.space.add_row(i, block_end, group_end);
      pos = block_end;
    }
  }
  return out;
}

// Floyd's algorithm: a uniformly random n-subset of [0, total) in n draws.
std::vector<std::uint64_t> sample_ranks(std::uint64_t total, std::uint64_t n, Rng& rng) {
  std::vector<std::uint64_t> picked;
  picked.reserve(static_cast<std::size_t>(n));
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(static_cast<std::size_t>(n) * 2);
  for (std::uint64_t j = total - n; j < total; ++j) {
    const std::uint64_t t = rng.below(j + 1);
    const std::uint64_t v = seen.count(t) ? j : t;
    seen.insert(v);
    picked.push_back(v);
  }
  return picked;
}

Trial make_trial(TrialLabel label, const Manifest& m, std::pair<std::size_t, std::size_t> pair) {
  const auto& a = m.records()[pair.first].utterance_id;
  const auto& b = m.records()[pair.second].utterance_id;
  return a < b ? Trial{label, a, b} : Trial{label, b, a};
}

}  // namespace

std::size_t TrialList::n_target() const {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [](const Trial& t) { return t.label == TrialLabel::target; }));
}

std::uint64_t count_target_pairs(const Manifest& m, const TrialOptions& options) {
  return target_layout(m, options).space.total();
}

std::uint64_t count_nontarget_pairs(const Manifest& m) { return nontarget_layout(m).space.total(); }

TrialList generate_trials(const Manifest& m, std::size_t n_target, std::size_t n_nontarget, std::uint64_t seed,
                          const TrialOptions& options) {
  if (n_target == 0) throw TrialError("target count must be positive");
  if (n_nontarget == 0) throw TrialError("nontarget count must be positive");

  const auto targets = target_layout(m, options);
  if (n_target > targets.space.total()) {
    throw TrialError("infeasible target count: requested " + std::to_string(n_target) + ", " +
                     std::to_string(targets.space.total()) + " admissible pairs");
  }
  const auto nontargets = nontarget_layout(m);
  if (nontargets.space.total() == 0) throw TrialError("manifest has no same-gender speaker pairs");
  if (n_nontarget > nontargets.space.total()) {
    throw TrialError("infeasible nontarget count: requested " + std::to_string(n_nontarget) + ", " +
                     std::to_string(nontargets.space.total()) + " admissible pairs");
  }

  TrialList out;
  out.trials.reserve(n_target + n_nontarget);
  auto target_rng = Rng::keyed(seed, 0, "trials-target");
  for (auto k : sample_ranks(targets.space.total(), n_target, target_rng)) {
    out.trials.push_back(make_trial(TrialLabel::target, m, targets.space.unrank(k, targets.order)));
  }
  auto nontarget_rng = Rng::keyed(seed, 0, "trials-nontarget");
  for (auto k : sample_ranks(nontargets.space.total(), n_nontarget, nontarget_rng)) {
    out.trials.push_back(make_trial(TrialLabel::nontarget, m, nontargets.space.unrank(k, nontargets.order)));
  }
  auto order_rng = Rng::keyed(seed, 0, "trials-order");
  shuffle(out.trials, order_rng);
  return out;
}

std::vector<TrialIssue> validate_trials(const TrialList& t, const Manifest& m) {
  std::vector<TrialIssue> issues;
  std::set<std::tuple<TrialLabel, std::string, std::string>> seen;
  for (std::size_t i = 0; i < t.trials.size(); ++i) {
    const auto& trial = t.trials[i];
    auto flag = [&](std::string msg) { issues.push_back({i, std::move(msg)}); };

    const auto* a = m.find(trial.utterance_a);
    const auto* b = m.find(trial.utterance_b);
    if (!a) flag("unknown utterance_id '" + trial.utterance_a + "'");
    if (!b) flag("unknown utterance_id '" + trial.utterance_b + "'");
    if (trial.utterance_a == trial.utterance_b) flag("trial pairs utterance '" + trial.utterance_a + "' with itself");

    const auto key = trial.utterance_a < trial.utterance_b
                         ? std::make_tuple(trial.label, trial.utterance_a, trial.utterance_b)
                         : std::make_tuple(trial.label, trial.utterance_b, trial.utterance_a);
    if (!seen.insert(key).second) flag("duplicate pair '" + trial.utterance_a + "' / '" + trial.utterance_b + "'");

    if (!a || !b) continue;
    if (trial.label == TrialLabel::target && a->speaker_id != b->speaker_id) {
      flag("target trial across speakers '" + a->speaker_id + "' and '" + b->speaker_id + "'");
    }
    if (trial.label == TrialLabel::nontarget) {
      if (a->speaker_id == b->speaker_id) flag("nontarget trial within speaker '" + a->speaker_id + "'");
      if (a->gender != b->gender) flag("nontarget trial across genders");
    }
  }
  return issues;
}

TrialList read_trials(std::istream& in) {
  TrialList out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::strip_cr(raw);
    const auto fields = text::split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() != 3 || (fields[0] != "0" && fields[0] != "1")) {
      throw TrialError("malformed trial, line " + std::to_string(line_no));
    }
    out.trials.push_back({fields[0] == "1" ? TrialLabel::target : TrialLabel::nontarget, std::string(fields[1]),
                          std::string(fields[2])});
  }
  return out;
}

TrialList read_trials_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TrialError("cannot open trial list '" + path + "'");
  return read_trials(in);
}

void write_trials(std::ostream& out, const TrialList& t) {
  for (const auto& trial : t.trials) {
    out << (trial.label == TrialLabel::target ? '1' : '0') << ' ' << trial.utterance_a << ' ' << trial.utterance_b
        << '\n';
  }
}

void write_trials_file(const std::string& path, const TrialList& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TrialError("cannot write trial list '" + path + "'");
  write_trials(out, t);
}

}  // namespace tinyvox
