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
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tinyvox/error.hpp"
#include "tinyvox/trials.hpp"

namespace tinyvox {

namespace detail {
double cosine_score(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);
}

/// a.b / (|a| |b|) in double precision whatever the input scalar, clamped
/// to [-1, 1]. Throws ScoringError on a dimension mismatch or a zero vector.
template <typename DerivedA, typename DerivedB>
double cosine_score(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  static_assert(DerivedA::IsVectorAtCompileTime && DerivedB::IsVectorAtCompileTime,
                "cosine_score takes vectors");
  return detail::cosine_score(a.template cast<double>(), b.template cast<double>());
}

/// utterance id -> embedding, all of one dimension, finite and non-zero.
class EmbeddingSet {
 public:
  explicit EmbeddingSet(Eigen::Index dimension);

  Eigen::Index dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }

  /// Throws ScoringError on wrong dimension, non-finite values, a zero
  /// vector, or a duplicate id.
  template <typename Derived>
  void insert(const std::string& id, const Eigen::MatrixBase<Derived>& v) {
    insert_checked(id, v.template cast<double>());
  }

  const Eigen::VectorXd* find(const std::string& id) const;
  const std::map<std::string, Eigen::VectorXd>& entries() const { return entries_; }

 private:
  void insert_checked(const std::string& id, Eigen::VectorXd v);

  Eigen::Index dimension_;
  std::map<std::string, Eigen::VectorXd> entries_;
};

/// Text format: a `dim <D>` header line, then `<utterance_id> <v1> ... <vD>`.
EmbeddingSet read_embeddings_text(std::istream& in);
void write_embeddings_text(std::ostream& out, const EmbeddingSet& e);

/// Binary format, little-endian: magic "EMB1", u32 dimension, then until end
/// of stream per entry a u32 id length, the id bytes, and D f32 values.
EmbeddingSet read_embeddings_binary(std::istream& in);
void write_embeddings_binary(std::ostream& out, const EmbeddingSet& e);

/// Detects the format from the first four bytes.
EmbeddingSet read_embeddings_file(const std::string& path);

struct ScoredTrial {
  Trial trial;
  double score = 0.0;
};

/// One score per trial, in trial order. Throws ScoringError listing every
/// missing id.
std::vector<ScoredTrial> score_trials(const EmbeddingSet& e, const TrialList& t);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
};

/// Equal error rate with accept rule score >= threshold.
///
/// Distinct scores u_1 < ... < u_k give the operating points "accept
/// score >= u_i" (i = 1..k) plus "reject all". FRR rises and FAR falls along
/// that sequence; the EER is where the piecewise-linear curve between
/// adjacent points crosses FAR = FRR, and the threshold is interpolated the
/// same way (the reject-all point sits at u_k). Tied scores form one point.
EerResult compute_eer(std::span<const double> target_scores, std::span<const double> nontarget_scores);
EerResult compute_eer(std::span<const ScoredTrial> scored);

/// Score file lines: `<utterance_a> <utterance_b> <score>`.
void write_scores(std::ostream& out, std::span<const ScoredTrial> scored);
/// Joins a score file with a trial list by unordered pair; every trial must
/// have a score.
std::vector<ScoredTrial> read_scores(std::istream& in, const TrialList& t);

}  // namespace tinyvox
