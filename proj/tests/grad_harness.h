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

#pragma once

#include <functional>

#include "lark/gradcheck.h"
#include "lark/ops.h"
#include "lark/tape.h"
#include "test_util.h"

namespace lark::testing {

// Compares tape gradients against the central-difference oracle for an
// arbitrary tensor-valued function of a NestedMap of (real64) tensors. The
// output is scalarized by a fixed random projection so every output element
// influences the loss.
inline double GradCheckError(const std::function<Tensor(const NestedMap&)>& fn,
                             const NestedMap& inputs, uint64_t seed,
                             double step = 1e-5) {
  Rng rng(seed);
  const Tensor probe = fn(inputs);
  const Tensor projection = RandomTensor(rng, probe.shape(), 1.0, probe.dtype());

  auto scalar_loss = [&](const NestedMap& at) -> double {
    const Tensor out = fn(at);
    double sum = 0.0;
    for (size_t i = 0; i < out.data().size(); ++i) {
      sum += out.data()[i] * projection.data()[i];
    }
    return sum;
  };

  Tape tape;
  NestedMap grads;
  {
    TapeScope scope(&tape);
    NestedMap watched = inputs.MapLeaves([&](const NestedMap::Leaf& l) -> NestedMap::Leaf {
      return tape.Watch(std::get<Tensor>(l));
    });
    Tensor loss = ReduceSumAll(Mul(fn(watched), projection));
    grads = Backward(tape, loss, watched);
  }
  const NestedMap oracle = FiniteDifferenceGrad(scalar_loss, inputs, step);
  return MaxRelError(grads, oracle);
}

}  // namespace lark::testing
