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

#include <map>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "tinyvox/error.hpp"
#include "tinyvox/trials.hpp"

using namespace tinyvox;
using testing::concat;
using testing::speaker_records;

namespace {

using Pair = std::pair<std::string, std::string>;

// Every admissible pair, found by checking all record pairs.
std::pair<std::set<Pair>, std::set<Pair>> enumerate_pairs(const Manifest& m, bool cross_session_only = false) {
  std::set<Pair> targets, nontargets;
  const auto& recs = m.records();
  for (std::size_t i = 0; i < recs.size(); ++i) {
    for (std::size_t j = 0; j < recs.size(); ++j) {
      if (recs[i].utterance_id >= recs[j].utterance_id) continue;
      const Pair p{recs[i].utterance_id, recs[j].utterance_id};
      if (recs[i].speaker_id == recs[j].speaker_id) {
        if (!cross_session_only || recs[i].session_id != recs[j].session_id) targets.insert(p);
      } else if (recs[i].gender == recs[j].gender) {
        nontargets.insert(p);
      }
    }
  }
  return {targets, nontargets};
}

// 2 speakers per gender, 3 utterances each (two sessions per speaker).
Manifest four_speakers() {
  return concat({speaker_records("fa", Gender::female, {2, 1}), speaker_records("fb", Gender::female, {1, 2}),
                 speaker_records("ma", Gender::male, {2, 1}), speaker_records("mb", Gender::male, {1, 2})});
}

std::string error_of(const Manifest& m, std::size_t nt, std::size_t nn) {
  try {
    generate_trials(m, nt, nn, 1);
  } catch (const TrialError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("trials") {

TEST_CASE("forced choice on the smallest feasible manifest") {
  const auto m = concat({speaker_records("a", Gender::male, {2}), speaker_records("b", Gender::male, {1})});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t = generate_trials(m, 1, 1, seed);
    REQUIRE(t.size() == 2);
    CHECK(t.n_target() == 1);
    for (const auto& trial : t.trials) {
      if (trial.label == TrialLabel::target) {
        CHECK(trial == Trial{TrialLabel::target, "a-s0-u00", "a-s0-u01"});
      } else {
        CHECK(trial.utterance_b == "b-s0-u00");
        CHECK((trial.utterance_a == "a-s0-u00" || trial.utterance_a == "a-s0-u01"));
      }
    }
  }
}

TEST_CASE("infeasible and degenerate requests") {
  const auto m = four_speakers();
  CHECK(count_target_pairs(m) == 12);
  CHECK(count_nontarget_pairs(m) == 18);
  CHECK(error_of(m, 13, 1).find("infeasible target count") == 0);
  CHECK(error_of(m, 1, 19).find("infeasible nontarget count") == 0);
  CHECK_FALSE(error_of(m, 0, 1).empty());
  CHECK_FALSE(error_of(m, 1, 0).empty());
  CHECK(generate_trials(m, 12, 18, 5).size() == 30);

  const auto mixed = concat({speaker_records("f", Gender::female, {2}), speaker_records("m", Gender::male, {2})});
  CHECK(error_of(mixed, 1, 1).find("no same-gender speaker pairs") != std::string::npos);
}

TEST_CASE("four-speaker fixture against brute-force enumeration") {
  const auto m = four_speakers();
  const auto [targets, nontargets] = enumerate_pairs(m);
  CHECK(targets.size() == 12);
  CHECK(nontargets.size() == 18);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto t = generate_trials(m, 8, 8, seed);
    CHECK(t.n_target() == 8);
    CHECK(t.n_nontarget() == 8);
    std::set<Pair> seen;
    for (const auto& trial : t.trials) {
      CHECK(trial.utterance_a < trial.utterance_b);
      const Pair p{trial.utterance_a, trial.utterance_b};
      CHECK(seen.insert(p).second);
      CHECK((trial.label == TrialLabel::target ? targets : nontargets).count(p) == 1);
    }
    CHECK(validate_trials(t, m).empty());
  }
}

TEST_CASE("cross-session targets") {
  const auto m = four_speakers();
  const auto [targets, nontargets] = enumerate_pairs(m, true);
  const TrialOptions opt{true};
  CHECK(count_target_pairs(m, opt) == targets.size());
  const auto t = generate_trials(m, targets.size(), 3, 9, opt);
  for (const auto& trial : t.trials) {
    if (trial.label == TrialLabel::target) CHECK(targets.count({trial.utterance_a, trial.utterance_b}) == 1);
  }
}

TEST_CASE("generated lists always validate") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto m = testing::synthetic_manifest({3, 4, 1, 5, 1, 5, 0}, seed);
    const auto nt = std::min<std::uint64_t>(count_target_pairs(m), 40);
    const auto nn = std::min<std::uint64_t>(count_nontarget_pairs(m), 40);
    if (nt == 0) continue;
    const auto t = generate_trials(m, nt, nn, seed);
    CHECK(validate_trials(t, m).empty());
    CHECK(generate_trials(m, nt, nn, seed) == t);
  }
}

TEST_CASE("validation flags contradictions and unknown ids") {
  const auto m = four_speakers();
  TrialList t{{{TrialLabel::target, "fa-s0-u00", "fb-s0-u00"},
               {TrialLabel::nontarget, "fa-s0-u00", "ma-s0-u00"},
               {TrialLabel::nontarget, "fa-s0-u00", "fa-s1-u00"},
               {TrialLabel::target, "fa-s0-u00", "ghost"},
               {TrialLabel::target, "fa-s0-u00", "fa-s0-u00"},
               {TrialLabel::target, "fa-s0-u00", "fa-s0-u01"},
               {TrialLabel::target, "fa-s0-u01", "fa-s0-u00"}}};
  const auto issues = validate_trials(t, m);
  std::map<std::size_t, std::string> by_index;
  for (const auto& i : issues) by_index[i.index] += i.message;
  CHECK(by_index.count(0));
  CHECK(by_index.count(1));
  CHECK(by_index.count(2));
  REQUIRE(by_index.count(3));
  CHECK(by_index[3].find("ghost") != std::string::npos);
  CHECK(by_index.count(4));
  CHECK_FALSE(by_index.count(5));
  CHECK(by_index.count(6));  // duplicate unordered pair
}

TEST_CASE("trial file format") {
  std::istringstream in("1 a b\r\n0 c d\n\n1\tx   y\r\n");
  const auto t = read_trials(in);
  REQUIRE(t.size() == 3);
  CHECK(t.trials[0] == Trial{TrialLabel::target, "a", "b"});
  CHECK(t.trials[1] == Trial{TrialLabel::nontarget, "c", "d"});
  CHECK(t.trials[2].utterance_b == "y");

  std::ostringstream out;
  write_trials(out, t);
  CHECK(out.str() == "1 a b\n0 c d\n1 x y\n");

  for (const char* bad : {"2 a b\n", "1 a\n", "1 a b c\n", "x a b\n"}) {
    std::istringstream b(bad);
    CHECK_THROWS_AS(read_trials(b), TrialError);
  }
}

TEST_CASE("selection is uniform over admissible pairs") {
  // Chi-square at significance 0.001 on each label's pair frequencies.
  const auto m = four_speakers();
  const auto [targets, nontargets] = enumerate_pairs(m);
  std::map<Pair, int> target_hits, nontarget_hits;
  const int runs = 6000;
  const int nt = 3, nn = 4;
  for (int seed = 0; seed < runs; ++seed) {
    for (const auto& trial : generate_trials(m, nt, nn, static_cast<std::uint64_t>(seed)).trials) {
      (trial.label == TrialLabel::target ? target_hits : nontarget_hits)[{trial.utterance_a, trial.utterance_b}]++;
    }
  }
  auto chi2 = [](const std::set<Pair>& all, std::map<Pair, int>& hits, double expected) {
    double x = 0.0;
    for (const auto& p : all) x += (hits[p] - expected) * (hits[p] - expected) / expected;
    return x;
  };
  // Critical values for 11 and 17 degrees of freedom.
  CHECK(chi2(targets, target_hits, runs * nt / 12.0) < 31.26);
  CHECK(chi2(nontargets, nontarget_hits, runs * nn / 18.0) < 40.79);
}

TEST_CASE("combined order is shuffled, not grouped by label") {
  const auto m = testing::synthetic_manifest({3, 3, 2, 4, 2, 4, 0}, 2);
  const auto t = generate_trials(m, 50, 50, 4);
  std::size_t switches = 0;
  for (std::size_t i = 1; i < t.size(); ++i) switches += t.trials[i].label != t.trials[i - 1].label;
  CHECK(switches > 10);
  CHECK(generate_trials(m, 50, 50, 5) != t);
}

}  // TEST_SUITE
