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

#include "lark/tape.h"

#include <optional>

#include "lark/nested_map.h"
#include "lark/ops.h"

namespace lark {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape* ActiveTape() { return g_active_tape; }

TapeScope::TapeScope(Tape* tape) : previous_(g_active_tape) { g_active_tape = tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

Tensor Tape::Watch(const Tensor& t) {
  nodes_.push_back(Node{{}, nullptr});
  return t.WithNode(static_cast<int>(nodes_.size()) - 1);
}

int Tape::Record(std::vector<int> input_nodes, VjpFn vjp) {
  nodes_.push_back(Node{std::move(input_nodes), std::move(vjp)});
  return static_cast<int>(nodes_.size()) - 1;
}

std::vector<Tensor> Tape::GradientsFor(const Tensor& loss,
                                       const std::vector<Tensor>& wrt) {
  if (loss.rank() != 0) {
    Fail(ErrorCode::kNotScalarLoss,
         "loss has shape " + ShapeToString(loss.shape()));
  }
  // Gradient math must not be recorded; it would grow the tape mid-walk.
  TapeScope off(nullptr);
  std::vector<std::optional<Tensor>> grads(nodes_.size());
  if (loss.node() >= 0) {
    grads[loss.node()] = Tensor::Scalar(1.0, loss.dtype());
    for (int id = loss.node(); id >= 0; --id) {
      if (!grads[id].has_value() || !nodes_[id].vjp) continue;
      const std::vector<Tensor> input_grads = nodes_[id].vjp(*grads[id]);
      LARK_CHECK(input_grads.size() == nodes_[id].inputs.size());
      for (size_t i = 0; i < input_grads.size(); ++i) {
        const int in = nodes_[id].inputs[i];
        if (in < 0) continue;
        if (!grads[in].has_value()) {
          grads[in] = input_grads[i];
        } else {
          grads[in] = Add(*grads[in], input_grads[i]);
        }
      }
    }
  }
  std::vector<Tensor> out;
  out.reserve(wrt.size());
  for (const Tensor& t : wrt) {
    if (t.node() >= 0 && grads[t.node()].has_value()) {
      out.push_back(*grads[t.node()]);
    } else {
      out.push_back(Tensor::Zeros(t.shape(), t.dtype()));
    }
  }
  return out;
}

NestedMap Backward(Tape& tape, const Tensor& loss, const NestedMap& wrt) {
  std::vector<Tensor> tensors;
  for (const auto& [path, leaf] : wrt.Flatten()) {
    if (std::holds_alternative<Tensor>(leaf)) {
      tensors.push_back(std::get<Tensor>(leaf));
    } else {
      Fail(ErrorCode::kTypeMismatch, "Backward wrt leaf '" + path + "' is not a Tensor");
    }
  }
  std::vector<Tensor> grads = tape.GradientsFor(loss, tensors);
  return wrt.MapLeaves([&, i = size_t{0}](const NestedMap::Leaf&) mutable -> NestedMap::Leaf {
    return grads[i++];
  });
}

Tensor MaybeRecord(Tensor out, const std::vector<const Tensor*>& inputs,
                   Tape::VjpFn vjp) {
  Tape* tape = g_active_tape;
  if (tape == nullptr) return out;
  bool any = false;
  std::vector<int> nodes;
  nodes.reserve(inputs.size());
  for (const Tensor* t : inputs) {
    nodes.push_back(t->node());
    any = any || t->node() >= 0;
  }
  if (!any) return out;
  return out.WithNode(tape->Record(std::move(nodes), std::move(vjp)));
}

}  // namespace lark
