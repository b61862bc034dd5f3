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

#include "lark/base_layer.h"
#include "lark/ops.h"

namespace lark {

// y = act(x . w + b).
// FProp: {input [N,in]} -> {output [N,out]}; theta: {w [in,out], b [out]}.
class FeedForward : public BaseLayer {
 public:
  static Params DefaultParams();
  static const LayerClass* kClass;
  explicit FeedForward(const Params& p);
  NestedMap FProp(const NestedMap& theta, const NestedMap& inputs) const override;
};

// Row lookup into an embedding table.
// FProp: {ids [N]} -> {embeddings [N,D]}; theta: {emb [V,D]}.
class Embedding : public BaseLayer {
 public:
  static Params DefaultParams();
  static const LayerClass* kClass;
  explicit Embedding(const Params& p);
  NestedMap FProp(const NestedMap& theta, const NestedMap& inputs) const override;
};

// Output projection plus weighted token cross-entropy.
// FProp: {input [N,D], class_ids [N], class_weights [N]} ->
//        {total_xent rank-0, total_weight rank-0}.
class SoftmaxLayer : public BaseLayer {
 public:
  static Params DefaultParams();
  static const LayerClass* kClass;
  explicit SoftmaxLayer(const Params& p);
  Tensor Logits(const NestedMap& theta, const Tensor& input) const;
  NestedMap FProp(const NestedMap& theta, const NestedMap& inputs) const override;
};

// Standard LSTM cell with i/f/g/o gates packed along one [in+H, 4H] matrix.
// The forget-gate bias block initializes to p.forget_gate_bias.
// FProp: {act [B,in], padding [B], m [B,H], c [B,H]} -> {m, c}.
// Rows with padding == 1 carry their state through unchanged.
class LSTMCell : public BaseLayer {
 public:
  static Params DefaultParams();
  static const LayerClass* kClass;
  explicit LSTMCell(const Params& p);
  NestedMap FProp(const NestedMap& theta, const NestedMap& inputs) const override;
  int64_t hidden_dim() const { return params().GetInt("hidden_dim"); }
};

// Unrolls a cell over time, carrying state and freezing it where
// paddings == 1.
// FProp: {act [B,T,D], paddings [B,T]} -> {out [B,T,H], m [B,H], c [B,H]}.
class RNN : public BaseLayer {
 public:
  static Params DefaultParams();
  static const LayerClass* kClass;
  explicit RNN(const Params& p);
  NestedMap FProp(const NestedMap& theta, const NestedMap& inputs) const override;
};

// Additive attention: scores v . tanh(w_q q + w_k k_s), masked softmax over
// source positions, context = prob-weighted source sum.
// FProp: {query [B,Q], source [B,S,K], source_paddings [B,S]} ->
//        {context [B,K], probs [B,S]}.
class AdditiveAttention : public BaseLayer {
 public:
  static Params DefaultParams();
  static const LayerClass* kClass;
  explicit AdditiveAttention(const Params& p);
  NestedMap FProp(const NestedMap& theta, const NestedMap& inputs) const override;
};

Tensor ApplyActivation(const std::string& kind, const Tensor& x);

}  // namespace lark
