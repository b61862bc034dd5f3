// Copyright 2026 The Lark Authors. All Rights Reserved.
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

#include "lark/gradcheck.h"

#include <cmath>

#include "lark/tape.h"

namespace lark {

NestedMap FiniteDifferenceGrad(const std::function<double(const NestedMap&)>& f,
                               const NestedMap& at, double step) {
  LARK_CHECK(step > 0.0);
  // Never record the probe evaluations.
  TapeScope off(nullptr);

  auto flat = at.Flatten();
  NestedMap grads = at;
  for (size_t leaf_idx = 0; leaf_idx < flat.size(); ++leaf_idx) {
    const auto& [path, leaf] = flat[leaf_idx];
    if (!std::holds_alternative<Tensor>(leaf)) continue;
    const Tensor& t = std::get<Tensor>(leaf);
    std::vector<double> g(t.data().size());
    for (size_t i = 0; i < g.size(); ++i) {
      auto eval_at = [&](double delta) {
        std::vector<double> perturbed = t.data();
        perturbed[i] += delta;
        Tensor pt = Tensor::FromVector(t.shape(), std::move(perturbed), t.dtype());
        size_t j = 0;
        NestedMap point = at.MapLeaves([&](const NestedMap::Leaf& l) -> NestedMap::Leaf {
          const size_t cur = j++;
          if (cur == leaf_idx) return pt;
          return l;
        });
        return f(point);
      };
      g[i] = (eval_at(step) - eval_at(-step)) / (2.0 * step);
    }
    Tensor gt = Tensor::FromVector(t.shape(), std::move(g), t.dtype());
    size_t j = 0;
    grads = grads.MapLeaves([&](const NestedMap::Leaf& l) -> NestedMap::Leaf {
      const size_t cur = j++;
      if (cur == leaf_idx) return gt;
      return l;
    });
  }
  return grads;
}

double RelError(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

double MaxRelError(const Tensor& a, const Tensor& b) {
  LARK_CHECK(a.shape() == b.shape());
  double worst = 0.0;
  for (size_t i = 0; i < a.data().size(); ++i) {
    worst = std::max(worst, RelError(a.data()[i], b.data()[i]));
  }
  return worst;
}

double MaxRelError(const NestedMap& a, const NestedMap& b) {
  LARK_CHECK(NestedMap::SameStructure(a, b));
  auto fa = a.Flatten();
  auto fb = b.Flatten();
  double worst = 0.0;
  for (size_t i = 0; i < fa.size(); ++i) {
    if (!std::holds_alternative<Tensor>(fa[i].second)) continue;
    worst = std::max(worst, MaxRelError(std::get<Tensor>(fa[i].second),
                                        std::get<Tensor>(fb[i].second)));
  }
  return worst;
}

}  // namespace lark
