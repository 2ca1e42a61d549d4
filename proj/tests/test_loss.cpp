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

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "tinyvox/error.hpp"
#include "tinyvox/loss.hpp"
#include "tinyvox/rng.hpp"
#include "tinyvox/scoring.hpp"

using namespace tinyvox;
using Eigen::Index;
using Eigen::MatrixXd;

namespace {

struct Instance {
  MatrixXd e, w;
  std::vector<Index> labels;
};

Instance random_instance(Rng& rng) {
  const Index n = rng.between(1, 4), d = rng.between(2, 8), k = rng.between(2, 5);
  Instance x{MatrixXd(n, d), MatrixXd(k, d), std::vector<Index>(static_cast<std::size_t>(n))};
  for (Index i = 0; i < x.e.size(); ++i) x.e.data()[i] = rng.normal();
  for (Index i = 0; i < x.w.size(); ++i) x.w.data()[i] = rng.normal();
  for (auto& y : x.labels) y = static_cast<Index>(rng.below(static_cast<std::uint64_t>(k)));
  return x;
}

// Worst relative error of the analytic gradient against central differences
// of the angle-form oracle, over coordinates above 1e-8 in magnitude.
double fd_worst(const Instance& x, const LossParams& p, std::size_t* checked = nullptr) {
  const auto r = aam_loss_and_grad(x.e, x.w, x.labels, p);
  double worst = 0;
  auto sweep = [&](MatrixXd& param, const MatrixXd& grad, bool is_e) {
    for (Index i = 0; i < param.size(); ++i) {
      const double saved = param.data()[i];
      const double up_x = saved + 1e-6, down_x = saved - 1e-6;
      param.data()[i] = up_x;
      const auto up = is_e ? oracle::aam_loss_angle_form(param, x.w, x.labels, p.margin, p.scale)
                           : oracle::aam_loss_angle_form(x.e, param, x.labels, p.margin, p.scale);
      param.data()[i] = down_x;
      const auto down = is_e ? oracle::aam_loss_angle_form(param, x.w, x.labels, p.margin, p.scale)
                             : oracle::aam_loss_angle_form(x.e, param, x.labels, p.margin, p.scale);
      param.data()[i] = saved;
      const double numeric = static_cast<double>((up - down) / static_cast<oracle::Wide>(up_x - down_x));
      const double analytic = grad.data()[i];
      const double mag = std::max(std::abs(analytic), std::abs(numeric));
      if (mag <= 1e-8) continue;
      if (checked) ++*checked;
      worst = std::max(worst, std::abs(analytic - numeric) / mag);
    }
  };
  MatrixXd e = x.e, w = x.w;
  sweep(e, r.grad_embeddings, true);
  sweep(w, r.grad_weights, false);
  return worst;
}

}  // namespace

TEST_SUITE("loss") {

TEST_CASE("aligned two-class example") {
  MatrixXd e(1, 2), w(2, 2);
  e << 1, 0;
  w << 1, 0, 0, 1;
  const std::vector<Index> y{0};
  const LossParams p{0.2, 30};
  const auto z = aam_logits(e, w, y, p);
  CHECK(std::abs(z(0, 0) - 29.4019973) < 1e-6);
  CHECK(std::abs(z(0, 0) - 30 * std::cos(0.2)) < 1e-13);
  CHECK(z(0, 1) == 0.0);
  const auto r = aam_loss_and_grad(e, w, y, p);
  CHECK(r.loss == doctest::Approx(std::log1p(std::exp(-30 * std::cos(0.2)))).epsilon(1e-3));
  CHECK(r.loss > 1.6e-13);
  CHECK(r.loss < 1.8e-13);
}

TEST_CASE("margin zero gives scaled cosine logits") {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    const auto x = random_instance(rng);
    const LossParams p{0.0, 1 + 40 * rng.uniform01()};
    const auto z = aam_logits(x.e, x.w, x.labels, p);
    for (Index n = 0; n < x.e.rows(); ++n) {
      for (Index k = 0; k < x.w.rows(); ++k) {
        const double c = cosine_score(x.e.row(n).transpose(), x.w.row(k).transpose());
        CHECK(std::abs(z(n, k) - p.scale * c) <= 1e-12);
      }
    }
  }
}

TEST_CASE("margin zero scale one is plain softmax cross-entropy") {
  MatrixXd e(3, 3), w(3, 3);
  e << 1, 2, 3, 1, 2, 3, 1, 2, 3;
  w << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  const std::vector<Index> y{0, 1, 2};
  const auto r = aam_loss_and_grad(e, w, y, {0.0, 1.0});
  const double norm = std::sqrt(14.0);
  const double c[3] = {1 / norm, 2 / norm, 3 / norm};
  const double lse = std::log(std::exp(c[0]) + std::exp(c[1]) + std::exp(c[2]));
  const double expected = ((lse - c[0]) + (lse - c[1]) + (lse - c[2])) / 3;
  CHECK(std::abs(r.loss - expected) < 1e-14);
}

TEST_CASE("logits match the angle-form oracle, including the surrogate branch") {
  Rng rng(21);
  for (int t = 0; t < 200; ++t) {
    auto x = random_instance(rng);
    if (t % 4 == 0) x.e.row(0) = -x.w.row(x.labels[0]) * (0.5 + rng.uniform01());  // anti-parallel
    const LossParams p{0.5 * rng.uniform01(), 30};
    const auto z = aam_logits(x.e, x.w, x.labels, p);
    const auto ref = oracle::aam_logits_angle_form(x.e, x.w, x.labels, p.margin, p.scale);
    for (Index n = 0; n < z.rows(); ++n) {
      for (Index k = 0; k < z.cols(); ++k) CHECK(std::abs(z(n, k) - static_cast<double>(ref[n][k])) < 1e-12);
    }
    CHECK(std::abs(aam_loss_and_grad(x.e, x.w, x.labels, p).loss -
                   static_cast<double>(oracle::aam_loss_angle_form(x.e, x.w, x.labels, p.margin, p.scale))) <
          1e-12 * 40);
  }
}

TEST_CASE("anti-parallel embedding uses the surrogate") {
  const LossParams p{0.2, 30};
  CHECK(margin_cosine(-1.0, p) == doctest::Approx(-1.0 - 0.2 * std::sin(0.2)).epsilon(1e-15));
  CHECK(margin_cosine(1.0, p) == doctest::Approx(std::cos(0.2)).epsilon(1e-15));
  const double boundary = -std::cos(0.2);
  CHECK(margin_cosine(boundary, p) == doctest::Approx(boundary - 0.2 * std::sin(0.2)).epsilon(1e-15));
  CHECK(margin_cosine(boundary + 1e-9, p) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("margin lowers the target logit") {
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const double c = 2 * rng.uniform01() - 1;
    const LossParams p{1.5 * rng.uniform01(), 30};
    CHECK(margin_cosine(c, p) <= c);
    CHECK(margin_cosine(c, {0.0, 30}) == c);
  }
}

TEST_CASE("analytic gradient matches finite differences of the oracle") {
  Rng rng(123);
  double worst = 0;
  std::size_t checked = 0;
  for (int t = 0; t < 100; ++t) {
    const auto x = random_instance(rng);
    const LossParams p = t % 3 == 0 ? LossParams{0.0, 30} : t % 3 == 1 ? LossParams{0.2, 30} : LossParams{0.35, 10};
    worst = std::max(worst, fd_worst(x, p, &checked));
  }
  CHECK(checked > 1000);
  CHECK(worst <= 1e-5);
}

TEST_CASE("library self-test passes") {
  const auto r = gradient_self_test(50, 9);
  CHECK(r.passed);
  CHECK(r.instances == 50);
  CHECK(r.coordinates_checked > 0);
  CHECK(r.max_relative_error <= 1e-5);
}

TEST_CASE("scale does not change the argmax at margin zero") {
  Rng rng(41);
  for (int t = 0; t < 100; ++t) {
    const auto x = random_instance(rng);
    const auto a = aam_logits(x.e, x.w, x.labels, {0.0, 0.5});
    const auto b = aam_logits(x.e, x.w, x.labels, {0.0, 64});
    for (Index n = 0; n < a.rows(); ++n) {
      Index ia, ib;
      a.row(n).maxCoeff(&ia);
      b.row(n).maxCoeff(&ib);
      CHECK(ia == ib);
    }
  }
}

TEST_CASE("loss is invariant to positive row rescaling") {
  Rng rng(51);
  for (int t = 0; t < 100; ++t) {
    auto x = random_instance(rng);
    const LossParams p{0.2, 30};
    const double before = aam_loss_and_grad(x.e, x.w, x.labels, p).loss;
    x.e.row(0) *= std::exp(3 * rng.normal());
    x.w.row(x.w.rows() - 1) *= std::exp(3 * rng.normal());
    CHECK(std::abs(aam_loss_and_grad(x.e, x.w, x.labels, p).loss - before) <= 1e-10);
  }
}

TEST_CASE("single precision inputs are promoted") {
  Rng rng(61);
  const auto x = random_instance(rng);
  AamInput<float> xf{x.e.cast<float>(), x.w.cast<float>(), x.labels};
  const auto rf = aam_loss_and_grad(xf, {});
  const auto rd = aam_loss_and_grad(MatrixXd(xf.embeddings.cast<double>()), MatrixXd(xf.class_weights.cast<double>()),
                                    x.labels, {});
  CHECK(rf.loss == rd.loss);
  CHECK(rf.grad_weights == rd.grad_weights);
}

TEST_CASE("input validation") {
  MatrixXd e(1, 2), w(2, 2);
  e << 1, 0;
  w << 1, 0, 0, 1;
  CHECK_THROWS_AS(aam_logits(e, w, std::vector<Index>{2}, {}), LossError);
  CHECK_THROWS_AS(aam_logits(e, w, std::vector<Index>{}, {}), LossError);
  CHECK_THROWS_AS(aam_logits(MatrixXd::Zero(1, 2), w, std::vector<Index>{0}, {}), LossError);
  w.row(1).setZero();
  CHECK_THROWS_AS(aam_logits(e, w, std::vector<Index>{0}, {}), LossError);
  CHECK_THROWS_AS(LossParams({std::numbers::pi / 2, 30}).validate(), LossError);
  CHECK_THROWS_AS(LossParams({-0.1, 30}).validate(), LossError);
  CHECK_THROWS_AS(LossParams({0.2, 0}).validate(), LossError);
}

}  // TEST_SUITE
