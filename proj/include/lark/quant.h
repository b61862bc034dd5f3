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

#include <memory>
#include <string>

#include "lark/base_layer.h"
#include "lark/model.h"
#include "lark/nested_map.h"
#include "lark/tensor.h"

namespace lark {

// Running quantization range for one tensor family. The range is tracked as
// an exponential moving average of the batch extrema and always spans zero.
// Frozen domains reject further tracking.
class QuantDomain {
 public:
  // bits == kUnquantizedBits turns quantization off entirely.
  static constexpr int kUnquantizedBits = 0;

  explicit QuantDomain(int bits = 8, double ema_decay = 0.99)
      : bits_(bits), decay_(ema_decay) {}

  bool quantizing() const { return bits_ != kUnquantizedBits; }
  bool initialized() const { return max_ > min_; }
  bool frozen() const { return frozen_; }
  int bits() const { return bits_; }
  double min() const { return min_; }
  double max() const { return max_; }

  // min <- decay*min + (1-decay)*min(t), same for max, then re-span zero.
  // The first call adopts the batch extrema directly.
  void Track(const Tensor& t);

  void Freeze() { frozen_ = true; }
  void SetRange(double min, double max);

 private:
  int bits_;
  double decay_;
  double min_ = 0.0, max_ = 0.0;
  bool seen_ = false;
  bool frozen_ = false;
};

// Quantize-dequantize: clamp to [min,max], snap to the nearest of 2^bits
// uniform levels, map back. The gradient is straight-through inside the range
// and zero outside.
Tensor FakeQuant(const Tensor& t, const QuantDomain& d);

// Wraps an arbitrary inner layer with weight and activation fake
// quantization. With bits == 0 the wrapper is bit-identical to the inner
// layer. Ranges update on training forward passes only; eval never tracks
// and a range eval training never touched makes the wrapper a pass-through.
//
// FProp forwards the inner layer's contract with quantized theta and
// quantized tensor outputs.
class QuantWrapper : public BaseLayer {
 public:
  static Params DefaultParams();
  static const LayerClass* kClass;
  explicit QuantWrapper(const Params& p);
  NestedMap FProp(const NestedMap& theta, const NestedMap& inputs) const override;

 private:
  int bits_;
  double decay_;
  mutable std::map<std::string, QuantDomain> weight_domains_;  // theta path -> domain
  mutable QuantDomain act_domain_;
};

// Forward-only inference export: a self-contained closure over the restored
// theta (is_eval, batch of one, no tape) that decodes step by step with the
// same layer code used in training. Also writes a manifest of input/output
// names and shapes next to the checkpoint.
class InferenceFn {
 public:
  // input: {src_ids [1,S]} -> {hyp_ids [1,T]}
  NestedMap Run(const NestedMap& input) const;

 private:
  friend InferenceFn ExportInference(const Params&, const std::string&, const std::string&);
  std::shared_ptr<const Model> model_;
  NestedMap theta_;
  int beam_size_ = 1;
  int max_len_ = 0;
};

InferenceFn ExportInference(const Params& model_params, const std::string& checkpoint_path,
                            const std::string& manifest_path);

}  // namespace lark
