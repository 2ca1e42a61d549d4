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

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace tinyvox {

/// Additive angular margin softmax hyper-parameters.
struct LossParams {
  double margin = 0.2;
  double scale = 30.0;

  /// 0 <= margin < pi/2 and scale > 0, else LossError.
  void validate() const;
  bool operator==(const LossParams&) const = default;
};

/// Embeddings (N x D), class weights (K x D) and one class index per
/// embedding row.
template <typename Scalar>
struct AamInput {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> embeddings;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> class_weights;
  std::vector<Eigen::Index> labels;
};

struct AamResult {
  double loss = 0.0;
  Eigen::MatrixXd grad_embeddings;  ///< N x D, w.r.t. the raw rows
  Eigen::MatrixXd grad_weights;     ///< K x D, w.r.t. the raw rows
};

/// cos(theta + m) written as cos(theta) cos(m) - sin(theta) sin(m); once
/// theta + m would pass pi (cos_theta <= -cos m) the monotone surrogate
/// cos(theta) - m sin(m) is used instead.
double margin_cosine(double cos_theta, const LossParams& p);

namespace detail {
using ConstMatrixRef = Eigen::Ref<const Eigen::MatrixXd>;
Eigen::MatrixXd aam_logits(const ConstMatrixRef& embeddings, const ConstMatrixRef& class_weights,
                           std::span<const Eigen::Index> labels, const LossParams& p);
AamResult aam_loss_and_grad(const ConstMatrixRef& embeddings, const ConstMatrixRef& class_weights,
                            std::span<const Eigen::Index> labels, const LossParams& p);
}  // namespace detail

/// N x K logits: scale * cos(theta_nj) off target, scale * margin_cosine on
/// the target column. Rows of both matrices are normalized internally.
/// All math runs in double whatever the input scalar.
template <typename DerivedE, typename DerivedW>
Eigen::MatrixXd aam_logits(const Eigen::MatrixBase<DerivedE>& embeddings,
                           const Eigen::MatrixBase<DerivedW>& class_weights, std::span<const Eigen::Index> labels,
                           const LossParams& p) {
  return detail::aam_logits(embeddings.template cast<double>(), class_weights.template cast<double>(), labels, p);
}

template <typename Scalar>
Eigen::MatrixXd aam_logits(const AamInput<Scalar>& x, const LossParams& p) {
  return aam_logits(x.embeddings, x.class_weights, x.labels, p);
}

/// Mean cross-entropy of the AAM logits and its exact gradient. Where
/// sin(theta) is exactly zero the angle is not differentiable and the
/// margin term contributes cos(m) only.
template <typename DerivedE, typename DerivedW>
AamResult aam_loss_and_grad(const Eigen::MatrixBase<DerivedE>& embeddings,
                            const Eigen::MatrixBase<DerivedW>& class_weights, std::span<const Eigen::Index> labels,
                            const LossParams& p) {
  return detail::aam_loss_and_grad(embeddings.template cast<double>(), class_weights.template cast<double>(), labels,
                                   p);
}

template <typename Scalar>
AamResult aam_loss_and_grad(const AamInput<Scalar>& x, const LossParams& p) {
  return aam_loss_and_grad(x.embeddings, x.class_weights, x.labels, p);
}

struct GradientCheckReport {
  int instances = 0;
  std::size_t coordinates_checked = 0;
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Compares aam_loss_and_grad against central finite differences on random
/// instances (N <= 4, D <= 8, K <= 5). Coordinates with magnitude <= 1e-8
/// are skipped.
GradientCheckReport gradient_self_test(int instances, std::uint64_t seed, const LossParams& p = {},
                                       double step = 1e-6, double tolerance = 1e-5);

}  // namespace tinyvox
