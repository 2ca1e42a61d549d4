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

#include "tinyvox/loss.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "tinyvox/error.hpp"

namespace tinyvox {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double margin_cosine_derivative(double c, const LossParams& p) {
  const double cos_m = std::cos(p.margin);
  if (!(c > -cos_m)) return 1.0;
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - c * c));
  if (sin_theta == 0.0) return cos_m;
  return cos_m + c * std::sin(p.margin) / sin_theta;
}

void check_input(const detail::ConstMatrixRef& e, const detail::ConstMatrixRef& w, std::span<const Index> labels,
                 const LossParams& p) {
  p.validate();
  if (e.rows() == 0 || w.rows() == 0) throw LossError("empty embedding or weight matrix");
  if (e.cols() != w.cols()) {
    throw LossError("embedding dimension " + std::to_string(e.cols()) + " != weight dimension " +
                    std::to_string(w.cols()));
  }
  if (static_cast<Index>(labels.size()) != e.rows()) throw LossError("one label per embedding row required");
  for (auto y : labels) {
    if (y < 0 || y >= w.rows()) throw LossError("label " + std::to_string(y) + " out of range");
  }
  for (Index n = 0; n < e.rows(); ++n) {
    if (!(e.row(n).norm() > 0.0)) throw LossError("zero-norm embedding row " + std::to_string(n));
  }
  for (Index k = 0; k < w.rows(); ++k) {
    if (!(w.row(k).norm() > 0.0)) throw LossError("zero-norm weight row " + std::to_string(k));
  }
}

struct Forward {
  VectorXd embedding_norms;
  VectorXd weight_norms;
  MatrixXd unit_embeddings;
  MatrixXd unit_weights;
  MatrixXd cosines;
  MatrixXd logits;
};

Forward forward(const detail::ConstMatrixRef& e, const detail::ConstMatrixRef& w, std::span<const Index> labels,
                const LossParams& p) {
  check_input(e, w, labels, p);
  Forward f;
  f.embedding_norms = e.rowwise().norm();
  f.weight_norms = w.rowwise().norm();
  f.unit_embeddings = f.embedding_norms.cwiseInverse().asDiagonal() * e;
  f.unit_weights = f.weight_norms.cwiseInverse().asDiagonal() * w;
  f.cosines = f.unit_embeddings * f.unit_weights.transpose();
  f.logits = p.scale * f.cosines;
  for (Index n = 0; n < e.rows(); ++n) {
    const Index y = labels[static_cast<std::size_t>(n)];
    f.logits(n, y) = p.scale * margin_cosine(f.cosines(n, y), p);
  }
  return f;
}

// Gradient of a function of the unit rows mapped back to the raw rows:
// (g - (g.u) u) / |x| per row.
MatrixXd through_normalization(const MatrixXd& grad_unit, const MatrixXd& unit, const VectorXd& norms) {
  const VectorXd radial = (grad_unit.cwiseProduct(unit)).rowwise().sum();
  return norms.cwiseInverse().asDiagonal() * (grad_unit - radial.asDiagonal() * unit);
}

}  // namespace

void LossParams::validate() const {
  if (!(margin >= 0.0 && margin < std::numbers::pi / 2)) throw LossError("margin must lie in [0, pi/2)");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw LossError("scale must be positive");
}

double margin_cosine(double cos_theta, const LossParams& p) {
  const double cos_m = std::cos(p.margin);
  const double sin_m = std::sin(p.margin);
  if (cos_theta > -cos_m) {
    const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    return cos_theta * cos_m - sin_theta * sin_m;
  }
  return cos_theta - p.margin * sin_m;
}

namespace detail {

MatrixXd aam_logits(const ConstMatrixRef& embeddings, const ConstMatrixRef& class_weights,
                    std::span<const Index> labels, const LossParams& p) {
  return forward(embeddings, class_weights, labels, p).logits;
}

AamResult aam_loss_and_grad(const ConstMatrixRef& embeddings, const ConstMatrixRef& class_weights,
                            std::span<const Index> labels, const LossParams& p) {
  const Forward f = forward(embeddings, class_weights, labels, p);
  const Index n_rows = f.logits.rows();

  // Row-wise stable softmax; rows are reduced in index order.
  MatrixXd probs(f.logits.rows(), f.logits.cols());
  double loss = 0.0;
  for (Index n = 0; n < n_rows; ++n) {
    const double peak = f.logits.row(n).maxCoeff();
    probs.row(n) = (f.logits.row(n).array() - peak).exp();
    const double total = probs.row(n).sum();
    probs.row(n) /= total;
    const Index y = labels[static_cast<std::size_t>(n)];
    loss += std::log(total) + peak - f.logits(n, y);
  }
  loss /= static_cast<double>(n_rows);

  // d loss / d cosine.
  MatrixXd grad_cos = probs;
  for (Index n = 0; n < n_rows; ++n) {
    const Index y = labels[static_cast<std::size_t>(n)];
    grad_cos(n, y) -= 1.0;
    grad_cos(n, y) *= margin_cosine_derivative(f.cosines(n, y), p);
  }
  grad_cos *= p.scale / static_cast<double>(n_rows);

  AamResult out;
  out.loss = loss;
  out.grad_embeddings =
      through_normalization(grad_cos * f.unit_weights, f.unit_embeddings, f.embedding_norms);
  out.grad_weights =
      through_normalization(grad_cos.transpose() * f.unit_embeddings, f.unit_weights, f.weight_norms);
  return out;
}

}  // namespace detail

}  // namespace tinyvox
