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

// Synthetic manifests shared by the unit tests and the acceptance checks.

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tinyvox/manifest.hpp"
#include "tinyvox/rng.hpp"

#include <unistd.h>

namespace tinyvox::testing {

struct SyntheticShape {
  int n_female = 2;
  int n_male = 2;
  int min_sessions = 2;
  int max_sessions = 6;
  int min_utterances = 1;  ///< per session
  int max_utterances = 6;
  int min_speaker_utterances = 0;  ///< topped up in the first session
};

inline std::string speaker_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "id%05d", i);
  return buf;
}

/// Speakers id00000.., females first. Session ids embed the speaker id so
/// they are unique across speakers; utterance ids embed the session.
inline Manifest synthetic_manifest(const SyntheticShape& shape, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<UtteranceRecord> records;
  const int n = shape.n_female + shape.n_male;
  for (int s = 0; s < n; ++s) {
    const auto speaker = speaker_name(s);
    const auto gender = s < shape.n_female ? Gender::female : Gender::male;
    const auto n_sessions = rng.between(shape.min_sessions, shape.max_sessions);
    std::vector<std::int64_t> sizes;
    std::int64_t total = 0;
    for (std::int64_t k = 0; k < n_sessions; ++k) {
      sizes.push_back(rng.between(shape.min_utterances, shape.max_utterances));
      total += sizes.back();
    }
    if (total < shape.min_speaker_utterances) sizes[0] += shape.min_speaker_utterances - total;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      char session[32];
      std::snprintf(session, sizeof(session), "%s/s%03zu", speaker.c_str(), k);
      for (std::int64_t u = 0; u < sizes[k]; ++u) {
        char utt[64];
        std::snprintf(utt, sizeof(utt), "%s/%05lld.wav", session, static_cast<long long>(u));
        const double duration = 0.5 + static_cast<double>(rng.below(2000)) / 100.0;
        records.push_back({utt, speaker, session, duration, gender, std::nullopt});
      }
    }
  }
  // Scramble record order so nothing relies on grouped input.
  shuffle(records, rng);
  return Manifest(std::move(records));
}

/// One speaker per entry of session_sizes, all of the given gender.
inline std::vector<UtteranceRecord> speaker_records(const std::string& speaker, Gender g,
                                                    const std::vector<int>& session_sizes) {
  std::vector<UtteranceRecord> out;
  for (std::size_t k = 0; k < session_sizes.size(); ++k) {
    const auto session = speaker + "-s" + std::to_string(k);
    for (int u = 0; u < session_sizes[k]; ++u) {
      char utt[16];
      std::snprintf(utt, sizeof(utt), "-u%02d", u);
      out.push_back({session + utt, speaker, session, 3.0, g, std::nullopt});
    }
  }
  return out;
}

inline Manifest concat(std::initializer_list<std::vector<UtteranceRecord>> parts) {
  std::vector<UtteranceRecord> all;
  for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  return Manifest(std::move(all));
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("tinyvox-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace tinyvox::testing
