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

#include <algorithm>
#include <cmath>
#include <vector>

#ifdef TINYVOX_HAVE_QUADMATH
#include <quadmath.h>
#endif

#include "tinyvox/loss.hpp"
#include "tinyvox/rng.hpp"

namespace tinyvox {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;

// The finite-difference reference evaluates the loss with plain loops in
// quad precision. At scale 30 the loss is O(10) while checked gradient
// coordinates go down to 1e-8, so double-precision differences would be
// swamped by rounding.
#ifdef TINYVOX_HAVE_QUADMATH
using Wide = __float128;
Wide wide_sqrt(Wide x) { return sqrtq(x); }
Wide wide_cos(Wide x) { return cosq(x); }
Wide wide_sin(Wide x) { return sinq(x); }
Wide wide_exp(Wide x) { return expq(x); }
Wide wide_log(Wide x) { return logq(x); }
#else
using Wide = long double;
Wide wide_sqrt(Wide x) { return std::sqrt(x); }
Wide wide_cos(Wide x) { return std::cos(x); }
Wide wide_sin(Wide x) { return std::sin(x); }
Wide wide_exp(Wide x) { return std::exp(x); }
Wide wide_log(Wide x) { return std::log(x); }
#endif

using WideRows = std::vector<std::vector<Wide>>;

Wide reference_loss(const WideRows& e, const WideRows& w, const std::vector<Index>& labels, const LossParams& p) {
  const Wide margin = p.margin, scale = p.scale;
  const Wide cos_m = wide_cos(margin), sin_m = wide_sin(margin);
  Wide total = 0;
  for (std::size_t n = 0; n < e.size(); ++n) {
    Wide ee = 0;
    for (Wide v : e[n]) ee += v * v;
    std::vector<Wide> z(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
      Wide ww = 0, ew = 0;
      for (std::size_t d = 0; d < e[n].size(); ++d) {
        ww += w[k][d] * w[k][d];
        ew += e[n][d] * w[k][d];
      }
      Wide c = ew / wide_sqrt(ee * ww);
      if (static_cast<Index>(k) == labels[n]) {
        if (c > -cos_m) {
          const Wide s2 = 1 - c * c;
          c = c * cos_m - wide_sqrt(s2 > 0 ? s2 : Wide(0)) * sin_m;
        } else {
          c = c - margin * sin_m;
        }
      }
      z[k] = scale * c;
    }
    const Wide peak = *std::max_element(z.begin(), z.end());
    Wide sum = 0;
    for (Wide v : z) sum += wide_exp(v - peak);
    total += wide_log(sum) + peak - z[static_cast<std::size_t>(labels[n])];
  }
  return total / static_cast<Wide>(e.size());
}

WideRows widen(const MatrixXd& m) {
  WideRows out(static_cast<std::size_t>(m.rows()), std::vector<Wide>(static_cast<std::size_t>(m.cols())));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  }
  return out;
}

}  // namespace

GradientCheckReport gradient_self_test(int instances, std::uint64_t seed, const LossParams& p, double step,
                                       double tolerance) {
  p.validate();
  GradientCheckReport report;
  report.instances = instances;
  report.tolerance = tolerance;

  for (int inst = 0; inst < instances; ++inst) {
    auto rng = Rng::keyed(seed, static_cast<std::uint64_t>(inst), "loss-self-test");
    const Index n = rng.between(1, 4), d = rng.between(2, 8), k = rng.between(2, 5);
    MatrixXd e(n, d), w(k, d);
    for (Index i = 0; i < e.size(); ++i) e.data()[i] = rng.normal();
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
    std::vector<Index> labels(static_cast<std::size_t>(n));
    for (auto& y : labels) y = static_cast<Index>(rng.below(static_cast<std::uint64_t>(k)));

    const AamResult analytic = aam_loss_and_grad(e, w, labels, p);
    WideRows we = widen(e), ww = widen(w);
    auto check = [&](WideRows& param, const MatrixXd& grad) {
      for (std::size_t i = 0; i < param.size(); ++i) {
        for (std::size_t j = 0; j < param[i].size(); ++j) {
          const Wide saved = param[i][j];
          param[i][j] = saved + step;
          const Wide up = reference_loss(we, ww, labels, p);
          param[i][j] = saved - step;
          const Wide down = reference_loss(we, ww, labels, p);
          param[i][j] = saved;
          const auto numeric = static_cast<double>((up - down) / (2 * static_cast<Wide>(step)));
          const double a = grad(static_cast<Index>(i), static_cast<Index>(j));
          const double magnitude = std::max(std::abs(a), std::abs(numeric));
          if (magnitude <= 1e-8) continue;
          ++report.coordinates_checked;
          report.max_relative_error = std::max(report.max_relative_error, std::abs(a - numeric) / magnitude);
        }
      }
    };
    check(we, analytic.grad_embeddings);
    check(ww, analytic.grad_weights);
  }
  report.passed = report.max_relative_error <= tolerance;
  return report;
}

}  // namespace tinyvox
