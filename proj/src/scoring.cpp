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

#include "tinyvox/scoring.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <unordered_map>

#include "text_util.hpp"

namespace tinyvox {

namespace detail {

double cosine_score(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) {
    throw ScoringError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw ScoringError("cosine score of a zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

}  // namespace detail

namespace {

std::uint32_t read_u32(std::istream& in, bool& ok) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  ok = static_cast<bool>(in);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::string pair_key(const std::string& a, const std::string& b) {
  return a < b ? a + '\n' + b : b + '\n' + a;
}

}  // namespace

EmbeddingSet::EmbeddingSet(Eigen::Index dimension) : dimension_(dimension) {
  if (dimension <= 0) throw ScoringError("embedding dimension must be positive");
}

void EmbeddingSet::insert_checked(const std::string& id, Eigen::VectorXd v) {
  if (v.size() != dimension_) {
    throw ScoringError("embedding '" + id + "' has dimension " + std::to_string(v.size()) + ", expected " +
                       std::to_string(dimension_));
  }
  if (!v.allFinite()) throw ScoringError("embedding '" + id + "' has non-finite components");
  if (v.isZero(0.0)) throw ScoringError("embedding '" + id + "' is the zero vector");
  if (!entries_.emplace(id, std::move(v)).second) throw ScoringError("duplicate embedding id '" + id + "'");
}

const Eigen::VectorXd* EmbeddingSet::find(const std::string& id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

EmbeddingSet read_embeddings_text(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;
  std::optional<EmbeddingSet> set;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto fields = text::split_ws(text::strip_cr(raw));
    if (fields.empty()) continue;
    if (!set) {
      std::optional<long> dim;
      if (fields.size() == 2 && fields[0] == "dim") dim = text::parse_int<long>(fields[1]);
      if (!dim || *dim <= 0) throw ScoringError("embedding file must start with 'dim <D>'");
      set.emplace(*dim);
      continue;
    }
    if (static_cast<Eigen::Index>(fields.size()) != set->dimension() + 1) {
      throw ScoringError("malformed embedding, line " + std::to_string(line_no) + ": expected " +
                         std::to_string(set->dimension()) + " values");
    }
    Eigen::VectorXd v(set->dimension());
    for (Eigen::Index d = 0; d < v.size(); ++d) {
      const auto x = text::parse_double(fields[static_cast<std::size_t>(d) + 1]);
      if (!x) throw ScoringError("malformed embedding value, line " + std::to_string(line_no));
      v[d] = *x;
    }
    set->insert(std::string(fields[0]), v);
  }
  if (!set) throw ScoringError("embedding file must start with 'dim <D>'");
  return std::move(*set);
}

void write_embeddings_text(std::ostream& out, const EmbeddingSet& e) {
  out << "dim " << e.dimension() << '\n';
  for (const auto& [id, v] : e.entries()) {
    out << id;
    for (Eigen::Index d = 0; d < v.size(); ++d) out << ' ' << text::format_double(v[d]);
    out << '\n';
  }
}

EmbeddingSet read_embeddings_binary(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || std::string_view(magic.data(), 4) != "EMB1") throw ScoringError("missing EMB1 magic");
  bool ok = false;
  const auto dim = read_u32(in, ok);
  if (!ok || dim == 0) throw ScoringError("bad embedding dimension in binary header");
  EmbeddingSet set(static_cast<Eigen::Index>(dim));
  for (;;) {
    const auto id_len = read_u32(in, ok);
    if (!ok) {
      if (in.gcount() == 0) break;  // clean end of stream
      throw ScoringError("truncated binary embedding entry");
    }
    std::string id(id_len, '\0');
    in.read(id.data(), id_len);
    if (!in) throw ScoringError("truncated binary embedding id");
    Eigen::VectorXd v(dim);
    for (std::uint32_t d = 0; d < dim; ++d) {
      const auto bits = read_u32(in, ok);
      if (!ok) throw ScoringError("truncated binary embedding '" + id + "'");
      v[d] = static_cast<double>(std::bit_cast<float>(bits));
    }
    set.insert(id, v);
  }
  return set;
}

void write_embeddings_binary(std::ostream& out, const EmbeddingSet& e) {
  out.write("EMB1", 4);
  write_u32(out, static_cast<std::uint32_t>(e.dimension()));
  for (const auto& [id, v] : e.entries()) {
    write_u32(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (Eigen::Index d = 0; d < v.size(); ++d) write_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v[d])));
  }
}

EmbeddingSet read_embeddings_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScoringError("cannot open embeddings '" + path + "'");
  std::array<char, 4> head{};
  in.read(head.data(), 4);
  const bool binary = in.gcount() == 4 && std::string_view(head.data(), 4) == "EMB1";
  in.clear();
  in.seekg(0);
  return binary ? read_embeddings_binary(in) : read_embeddings_text(in);
}

std::vector<ScoredTrial> score_trials(const EmbeddingSet& e, const TrialList& t) {
  std::set<std::string> missing;
  for (const auto& trial : t.trials) {
    if (!e.find(trial.utterance_a)) missing.insert(trial.utterance_a);
    if (!e.find(trial.utterance_b)) missing.insert(trial.utterance_b);
  }
  if (!missing.empty()) {
    std::string msg = "missing embeddings for " + std::to_string(missing.size()) + " ids:";
    for (const auto& id : missing) msg += " " + id;
    throw ScoringError(msg);
  }
  std::vector<ScoredTrial> out;
  out.reserve(t.trials.size());
  for (const auto& trial : t.trials) {
    out.push_back({trial, cosine_score(*e.find(trial.utterance_a), *e.find(trial.utterance_b))});
  }
  return out;
}

EerResult compute_eer(std::span<const double> target_scores, std::span<const double> nontarget_scores) {
  if (target_scores.empty() || nontarget_scores.empty()) {
    throw ScoringError("EER needs at least one target and one nontarget score");
  }
  struct Labeled {
    double score;
    bool target;
  };
  std::vector<Labeled> all;
  all.reserve(target_scores.size() + nontarget_scores.size());
  for (double s : target_scores) all.push_back({s, true});
  for (double s : nontarget_scores) all.push_back({s, false});
  for (const auto& l : all) {
    if (!std::isfinite(l.score)) throw ScoringError("non-finite score");
  }
  std::sort(all.begin(), all.end(), [](const Labeled& a, const Labeled& b) { return a.score < b.score; });

  const auto n_target = static_cast<double>(target_scores.size());
  const auto n_nontarget = static_cast<double>(nontarget_scores.size());

  struct Point {
    double frr, far, threshold;
  };
  std::size_t targets_below = 0, nontargets_below = 0;
  std::optional<Point> prev;
  std::size_t i = 0;
  auto crossing = [&](const Point& a, const Point& b) {
    const double da = a.far - a.frr;
    const double db = b.far - b.frr;
    if (db == 0.0) return EerResult{b.frr, b.threshold, target_scores.size(), nontarget_scores.size()};
    const double alpha = da / (da - db);
    return EerResult{a.frr + alpha * (b.frr - a.frr), a.threshold + alpha * (b.threshold - a.threshold),
                     target_scores.size(), nontarget_scores.size()};
  };

  while (i < all.size()) {
    const double u = all[i].score;
    const Point p{static_cast<double>(targets_below) / n_target,
                  static_cast<double>(nontarget_scores.size() - nontargets_below) / n_nontarget, u};
    if (p.far - p.frr <= 0.0) return crossing(prev.value_or(p), p);
    prev = p;
    for (; i < all.size() && all[i].score == u; ++i) (all[i].target ? targets_below : nontargets_below)++;
  }
  return crossing(*prev, Point{1.0, 0.0, prev->threshold});
}

EerResult compute_eer(std::span<const ScoredTrial> scored) {
  std::vector<double> targets, nontargets;
  for (const auto& s : scored) (s.trial.label == TrialLabel::target ? targets : nontargets).push_back(s.score);
  return compute_eer(targets, nontargets);
}

void write_scores(std::ostream& out, std::span<const ScoredTrial> scored) {
  for (const auto& s : scored) {
    out << s.trial.utterance_a << ' ' << s.trial.utterance_b << ' ' << text::format_double(s.score) << '\n';
  }
}

std::vector<ScoredTrial> read_scores(std::istream& in, const TrialList& t) {
  std::unordered_map<std::string, double> by_pair;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto fields = text::split_ws(text::strip_cr(raw));
    if (fields.empty()) continue;
    const auto score = fields.size() == 3 ? text::parse_double(fields[2]) : std::nullopt;
    if (!score) throw ScoringError("malformed score, line " + std::to_string(line_no));
    by_pair[pair_key(std::string(fields[0]), std::string(fields[1]))] = *score;
  }
  std::vector<ScoredTrial> out;
  out.reserve(t.trials.size());
  for (const auto& trial : t.trials) {
    auto it = by_pair.find(pair_key(trial.utterance_a, trial.utterance_b));
    if (it == by_pair.end()) {
      throw ScoringError("no score for trial '" + trial.utterance_a + "' / '" + trial.utterance_b + "'");
    }
    out.push_back({trial, it->second});
  }
  return out;
}

}  // namespace tinyvox
