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
#include <vector>

#include "lark/tensor.h"

namespace lark {

class NestedMap;

// Reverse-mode gradient tape. Ops record themselves on the active tape; node
// ids are append-ordered, so inputs always precede outputs. A tape is
// single-threaded; independent tapes may run concurrently on distinct threads.
class Tape {
 public:
  // Maps the output gradient to one gradient per recorded input.
  using VjpFn = std::function<std::vector<Tensor>(const Tensor& out_grad)>;

  // Registers a leaf; gradient accumulation stops here.
  Tensor Watch(const Tensor& t);

  // Records an op application. `input_nodes` may contain -1 for constants;
  // the vjp's result for those slots is ignored.
  int Record(std::vector<int> input_nodes, VjpFn vjp);

  // Gradients of a rank-0 loss w.r.t. each tensor in `wrt` (append order).
  // Tensors that did not participate get zeros of their shape.
  std::vector<Tensor> GradientsFor(const Tensor& loss, const std::vector<Tensor>& wrt);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<int> inputs;
    VjpFn vjp;  // null for leaves
  };
  std::vector<Node> nodes_;
};

// Gradients with NestedMap structure: the result mirrors `wrt` with each
// Tensor leaf replaced by its gradient (zeros for non-participating leaves).
NestedMap Backward(Tape& tape, const Tensor& loss, const NestedMap& wrt);

// The active tape is thread-local; ops record only while one is installed.
Tape* ActiveTape();

class TapeScope {
 public:
  explicit TapeScope(Tape* tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Used by op implementations (and custom ops such as fake quantization):
// records `out` as the result of an op over `inputs` when a tape is active
// and any input is on the tape.
Tensor MaybeRecord(Tensor out, const std::vector<const Tensor*>& inputs,
                   Tape::VjpFn vjp);

}  // namespace lark
