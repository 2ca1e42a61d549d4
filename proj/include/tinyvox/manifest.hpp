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
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tinyvox {

enum class Gender { male, female };

std::string_view to_string(Gender g);
/// Accepts "male"/"female" and the VoxCeleb metadata spellings "m"/"f".
std::optional<Gender> parse_gender(std::string_view text);

struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::string session_id;
  double duration_seconds = 0.0;
  Gender gender = Gender::male;
  std::optional<std::string> audio_path;

  bool operator==(const UtteranceRecord&) const = default;
};

enum class ManifestFormat { csv, jsonl };

/// Picks jsonl for *.jsonl / *.json paths, csv otherwise.
ManifestFormat format_from_path(std::string_view path);

/// Validated corpus metadata plus the speaker -> session -> utterance index.
///
/// Records keep their input order. The index is sorted: speakers and
/// sessions by id, utterances within a session by utterance id. Immutable
/// after construction.
class Manifest {
 public:
  Manifest() = default;

  /// Validates the record invariants and builds the index. Throws
  /// ManifestError naming the offending record.
  explicit Manifest(std::vector<UtteranceRecord> records);

  const std::vector<UtteranceRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const std::vector<std::string>& speakers() const { return speakers_; }
  std::size_t session_count() const { return sessions_.size(); }

  /// Sessions of a speaker, ascending session id.
  const std::vector<std::string>& sessions_of(const std::string& speaker_id) const;
  /// Record indices of a session, ascending utterance id.
  const std::vector<std::size_t>& utterances_of(const std::string& session_id) const;
  /// Record indices of a speaker: sessions ascending, then utterances ascending.
  std::vector<std::size_t> utterances_of_speaker(const std::string& speaker_id) const;

  Gender gender_of(const std::string& speaker_id) const;
  const std::string& speaker_of_session(const std::string& session_id) const;
  bool has_speaker(const std::string& speaker_id) const;

  const UtteranceRecord* find(const std::string& utterance_id) const;

  /// New manifest holding the given records (input order preserved).
  Manifest select(const std::vector<std::size_t>& record_indices) const;

  bool operator==(const Manifest& other) const { return records_ == other.records_; }

 private:
  friend Manifest load_manifest(std::istream&, ManifestFormat);
  Manifest(std::vector<UtteranceRecord> records, const std::vector<std::size_t>* lines);

  struct SpeakerEntry {
    Gender gender;
    std::vector<std::string> sessions;
  };
  struct SessionEntry {
    std::string speaker;
    std::vector<std::size_t> utterances;
  };

  std::vector<UtteranceRecord> records_;
  std::vector<std::string> speakers_;
  std::map<std::string, SpeakerEntry> speaker_index_;
  std::map<std::string, SessionEntry> sessions_;
  std::unordered_map<std::string, std::size_t> utterance_index_;
};

/// Parses a manifest. CSV needs a header naming the columns
/// utterance_id,speaker_id,session_id,duration_seconds,gender[,audio_path]
/// (any order); JSONL takes one object per line with the same keys. Errors
/// carry the 1-based line number.
Manifest load_manifest(std::istream& in, ManifestFormat format);
Manifest load_manifest_file(const std::string& path);

void write_manifest(std::ostream& out, const Manifest& m, ManifestFormat format);
void write_manifest_file(const std::string& path, const Manifest& m);

/// FNV-1a over the CSV serialization of the records sorted by utterance id.
std::uint64_t manifest_digest(const Manifest& m);

struct MinMeanMax {
  double mean = 0.0;
  std::size_t min = 0;
  std::size_t max = 0;

  bool operator==(const MinMeanMax&) const = default;
};

struct DatasetStats {
  double duration_hours = 0.0;
  std::size_t n_speakers = 0;
  std::size_t n_sessions = 0;
  std::size_t n_utterances = 0;
  MinMeanMax sessions_per_speaker;
  MinMeanMax utterances_per_session;

  bool operator==(const DatasetStats&) const = default;
};

/// Exact counts; durations are summed in canonical index order so the
/// result does not depend on record order.
DatasetStats manifest_stats(const Manifest& m);

}  // namespace tinyvox
