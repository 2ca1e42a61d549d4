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

#include "tinyvox/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "text_util.hpp"
#include "tinyvox/error.hpp"
#include "tinyvox/rng.hpp"

namespace tinyvox {

namespace {

const std::vector<std::string> kColumns = {"utterance_id", "speaker_id", "session_id",
                                           "duration_seconds", "gender", "audio_path"};

std::string where(const std::vector<std::size_t>* lines, std::size_t i) {
  if (lines) return "line " + std::to_string((*lines)[i]);
  return "record " + std::to_string(i + 1);
}

// RFC 4180 style: commas separate, double quotes wrap fields, "" escapes.
std::optional<std::vector<std::string>> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = true;
      was_quoted = true;
    } else {
      if (was_quoted) return std::nullopt;  // text after closing quote
      field.push_back(c);
    }
  }
  if (quoted) return std::nullopt;
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

UtteranceRecord record_from_fields(const std::vector<std::string>& fields,
                                   const std::vector<int>& column_of, std::size_t line) {
  auto fail = [line](const std::string& why) -> ManifestError {
    return ManifestError("malformed row, line " + std::to_string(line) + ": " + why);
  };
  auto get = [&](int col) -> const std::string& { return fields[static_cast<std::size_t>(column_of[col])]; };

  UtteranceRecord r;
  r.utterance_id = get(0);
  r.speaker_id = get(1);
  r.session_id = get(2);
  if (r.utterance_id.empty()) throw fail("empty utterance_id");
  if (r.speaker_id.empty()) throw fail("empty speaker_id");
  if (r.session_id.empty()) throw fail("empty session_id");
  const auto duration = text::parse_double(text::trim(get(3)));
  if (!duration) throw fail("duration_seconds is not a number: '" + get(3) + "'");
  r.duration_seconds = *duration;
  const auto gender = parse_gender(text::trim(get(4)));
  if (!gender) throw fail("unknown gender '" + get(4) + "'");
  r.gender = *gender;
  if (column_of[5] >= 0 && !get(5).empty()) r.audio_path = get(5);
  return r;
}

UtteranceRecord record_from_json(const nlohmann::json& j, std::size_t line) {
  auto fail = [line](const std::string& why) -> ManifestError {
    return ManifestError("malformed row, line " + std::to_string(line) + ": " + why);
  };
  if (!j.is_object()) throw fail("expected a JSON object");
  auto str = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw fail(std::string("missing string field ") + key);
    auto s = it->get<std::string>();
    if (s.empty()) throw fail(std::string("empty ") + key);
    return s;
  };
  UtteranceRecord r;
  r.utterance_id = str("utterance_id");
  r.speaker_id = str("speaker_id");
  r.session_id = str("session_id");
  auto d = j.find("duration_seconds");
  if (d == j.end() || !d->is_number()) throw fail("missing numeric field duration_seconds");
  r.duration_seconds = d->get<double>();
  auto g = j.find("gender");
  if (g == j.end() || !g->is_string()) throw fail("missing string field gender");
  const auto gender = parse_gender(g->get<std::string>());
  if (!gender) throw fail("unknown gender '" + g->get<std::string>() + "'");
  r.gender = *gender;
  auto p = j.find("audio_path");
  if (p != j.end() && !p->is_null()) {
    if (!p->is_string()) throw fail("audio_path must be a string");
    if (!p->get<std::string>().empty()) r.audio_path = p->get<std::string>();
  }
  return r;
}

}  // namespace

std::string_view to_string(Gender g) { return g == Gender::male ? "male" : "female"; }

std::optional<Gender> parse_gender(std::string_view text) {
  if (text == "male" || text == "m") return Gender::male;
  if (text == "female" || text == "f") return Gender::female;
  return std::nullopt;
}

ManifestFormat format_from_path(std::string_view path) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() && path.substr(path.size() - suffix.size()) == suffix;
  };
  return ends_with(".jsonl") || ends_with(".json") ? ManifestFormat::jsonl : ManifestFormat::csv;
}

Manifest::Manifest(std::vector<UtteranceRecord> records) : Manifest(std::move(records), nullptr) {}

Manifest::Manifest(std::vector<UtteranceRecord> records, const std::vector<std::size_t>* lines)
    : records_(std::move(records)) {
  utterance_index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (!(r.duration_seconds > 0.0) || !std::isfinite(r.duration_seconds)) {
      throw ManifestError("non-positive duration, " + where(lines, i));
    }
    if (!utterance_index_.emplace(r.utterance_id, i).second) {
      throw ManifestError("duplicate utterance_id '" + r.utterance_id + "', " + where(lines, i));
    }
    auto [spk, new_speaker] = speaker_index_.try_emplace(r.speaker_id, SpeakerEntry{r.gender, {}});
    if (!new_speaker && spk->second.gender != r.gender) {
      throw ManifestError("inconsistent gender for speaker '" + r.speaker_id + "', " + where(lines, i));
    }
    auto [ses, new_session] = sessions_.try_emplace(r.session_id, SessionEntry{r.speaker_id, {}});
    if (!new_session && ses->second.speaker != r.speaker_id) {
      throw ManifestError("session '" + r.session_id + "' shared by speakers '" + ses->second.speaker +
                          "' and '" + r.speaker_id + "', " + where(lines, i));
    }
    if (new_session) spk->second.sessions.push_back(r.session_id);
    ses->second.utterances.push_back(i);
  }
  speakers_.reserve(speaker_index_.size());
  for (auto& [id, entry] : speaker_index_) {
    speakers_.push_back(id);
    std::sort(entry.sessions.begin(), entry.sessions.end());
  }
  for (auto& [id, entry] : sessions_) {
    std::sort(entry.utterances.begin(), entry.utterances.end(), [this](std::size_t a, std::size_t b) {
      return records_[a].utterance_id < records_[b].utterance_id;
    });
  }
}

const std::vector<std::string>& Manifest::sessions_of(const std::string& speaker_id) const {
  auto it = speaker_index_.find(speaker_id);
  if (it == speaker_index_.end()) throw ManifestError("unknown speaker '" + speaker_id + "'");
  return it->second.sessions;
}

const std::vector<std::size_t>& Manifest::utterances_of(const std::string& session_id) const {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw ManifestError("unknown session '" + session_id + "'");
  return it->second.utterances;
}

std::vector<std::size_t> Manifest::utterances_of_speaker(const std::string& speaker_id) const {
  std::vector<std::size_t> out;
  for (const auto& session : sessions_of(speaker_id)) {
    const auto& utts = utterances_of(session);
    out.insert(out.end(), utts.begin(), utts.end());
  }
  return out;
}

Gender Manifest::gender_of(const std::string& speaker_id) const {
  auto it = speaker_index_.find(speaker_id);
  if (it == speaker_index_.end()) throw ManifestError("unknown speaker '" + speaker_id + "'");
  return it->second.gender;
}

const std::string& Manifest::speaker_of_session(const std::string& session_id) const {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw ManifestError("unknown session '" + session_id + "'");
  return it->second.speaker;
}

bool Manifest::has_speaker(const std::string& speaker_id) const {
  return speaker_index_.count(speaker_id) != 0;
}

const UtteranceRecord* Manifest::find(const std::string& utterance_id) const {
  auto it = utterance_index_.find(utterance_id);
  return it == utterance_index_.end() ? nullptr : &records_[it->second];
}

Manifest Manifest::select(const std::vector<std::size_t>& record_indices) const {
  std::vector<std::size_t> sorted = record_indices;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<UtteranceRecord> out;
  out.reserve(sorted.size());
  for (auto i : sorted) out.push_back(records_.at(i));
  return Manifest(std::move(out));
}

Manifest load_manifest(std::istream& in, ManifestFormat format) {
  std::vector<UtteranceRecord> records;
  std::vector<std::size_t> lines;
  std::string raw;
  std::size_t line_no = 0;

  if (format == ManifestFormat::csv) {
    std::vector<int> column_of(kColumns.size(), -1);
    std::size_t n_fields = 0;
    bool have_header = false;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = text::strip_cr(raw);
      if (text::trim(line).empty()) continue;
      auto fields = split_csv(line);
      if (!fields) throw ManifestError("malformed row, line " + std::to_string(line_no) + ": bad quoting");
      if (!have_header) {
        for (std::size_t f = 0; f < fields->size(); ++f) {
          const auto name = std::string(text::trim((*fields)[f]));
          auto it = std::find(kColumns.begin(), kColumns.end(), name);
          if (it == kColumns.end()) {
            throw ManifestError("malformed header, line " + std::to_string(line_no) + ": unknown column '" +
                                name + "'");
          }
          column_of[static_cast<std::size_t>(it - kColumns.begin())] = static_cast<int>(f);
        }
        for (std::size_t c = 0; c + 1 < kColumns.size(); ++c) {
          if (column_of[c] < 0) {
            throw ManifestError("malformed header, line " + std::to_string(line_no) + ": missing column '" +
                                kColumns[c] + "'");
          }
        }
        n_fields = fields->size();
        have_header = true;
        continue;
      }
      if (fields->size() != n_fields) {
        throw ManifestError("malformed row, line " + std::to_string(line_no) + ": expected " +
                            std::to_string(n_fields) + " fields, got " + std::to_string(fields->size()));
      }
      records.push_back(record_from_fields(*fields, column_of, line_no));
      lines.push_back(line_no);
    }
    if (!have_header) throw ManifestError("malformed manifest: missing CSV header");
  } else {
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = text::strip_cr(raw);
      if (text::trim(line).empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error&) {
        throw ManifestError("malformed row, line " + std::to_string(line_no) + ": invalid JSON");
      }
      records.push_back(record_from_json(j, line_no));
      lines.push_back(line_no);
    }
  }
  return Manifest(std::move(records), &lines);
}

Manifest load_manifest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError("cannot open manifest '" + path + "'");
  return load_manifest(in, format_from_path(path));
}

void write_manifest(std::ostream& out, const Manifest& m, ManifestFormat format) {
  if (format == ManifestFormat::csv) {
    out << "utterance_id,speaker_id,session_id,duration_seconds,gender,audio_path\n";
    for (const auto& r : m.records()) {
      out << csv_field(r.utterance_id) << ',' << csv_field(r.speaker_id) << ',' << csv_field(r.session_id)
          << ',' << text::format_double(r.duration_seconds) << ',' << to_string(r.gender) << ','
          << csv_field(r.audio_path.value_or("")) << '\n';
    }
    return;
  }
  for (const auto& r : m.records()) {
    nlohmann::ordered_json j;
    j["utterance_id"] = r.utterance_id;
    j["speaker_id"] = r.speaker_id;
    j["session_id"] = r.session_id;
    j["duration_seconds"] = r.duration_seconds;
    j["gender"] = to_string(r.gender);
    j["audio_path"] = r.audio_path.value_or("");
    out << j.dump() << '\n';
  }
}

void write_manifest_file(const std::string& path, const Manifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ManifestError("cannot write manifest '" + path + "'");
  write_manifest(out, m, format_from_path(path));
  if (!out) throw ManifestError("write failed for '" + path + "'");
}

std::uint64_t manifest_digest(const Manifest& m) {
  auto records = m.records();
  std::sort(records.begin(), records.end(),
            [](const UtteranceRecord& a, const UtteranceRecord& b) { return a.utterance_id < b.utterance_id; });
  std::ostringstream os;
  write_manifest(os, Manifest(std::move(records)), ManifestFormat::csv);
  return fnv1a64(os.str());
}

DatasetStats manifest_stats(const Manifest& m) {
  if (m.empty()) throw ManifestError("cannot compute statistics of an empty manifest");
  DatasetStats s;
  s.n_speakers = m.speakers().size();
  s.n_sessions = m.session_count();
  s.n_utterances = m.size();
  s.sessions_per_speaker.min = std::numeric_limits<std::size_t>::max();
  s.utterances_per_session.min = std::numeric_limits<std::size_t>::max();

  double seconds = 0.0;
  for (const auto& speaker : m.speakers()) {
    const auto& sessions = m.sessions_of(speaker);
    s.sessions_per_speaker.min = std::min(s.sessions_per_speaker.min, sessions.size());
    s.sessions_per_speaker.max = std::max(s.sessions_per_speaker.max, sessions.size());
    for (const auto& session : sessions) {
      const auto& utts = m.utterances_of(session);
      s.utterances_per_session.min = std::min(s.utterances_per_session.min, utts.size());
      s.utterances_per_session.max = std::max(s.utterances_per_session.max, utts.size());
      for (auto i : utts) seconds += m.records()[i].duration_seconds;
    }
  }
  s.duration_hours = seconds / 3600.0;
  s.sessions_per_speaker.mean = static_cast<double>(s.n_sessions) / static_cast<double>(s.n_speakers);
  s.utterances_per_session.mean = static_cast<double>(s.n_utterances) / static_cast<double>(s.n_sessions);
  return s;
}

}  // namespace tinyvox
