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

#include "lark/input.h"
#include "lark/layers.h"
#include "lark/model.h"

namespace lark {

// LSTM encoder + LSTM decoder with additive attention over encoder states.
// Trains with teacher forcing; decodes free-running (greedy or beam).
//
// Batch contract:
//   src: {ids [B,T], paddings [B,T]}
//   tgt: {ids [B,T] (bos-prefixed), labels [B,T] (eos-terminated),
//         paddings [B,T], weights [B,T]}
//
// Decode metrics report exact_match: the fraction of rows whose decoded
// sequence (including the closing eos) equals the weighted label prefix.
class AttentionSeq2Seq : public BaseTask {
 public:
  static Params DefaultParams();
  static const LayerClass* kClass;
  explicit AttentionSeq2Seq(const Params& p);

  TaskLoss FPropLoss(const NestedMap& theta, const NestedMap& batch) const override;
  std::unique_ptr<InputGenerator> MakeInput(const Params& input_params) const override;
  NestedMap DecodeBatch(const NestedMap& theta, const NestedMap& batch) const override;
  std::vector<int64_t> DecodeIds(const NestedMap& theta, const std::vector<int64_t>& src_ids,
                                 int beam_size, int max_len) const override;

  int64_t bos_id() const { return params().GetInt("bos_id"); }
  int64_t eos_id() const { return params().GetInt("eos_id"); }

 private:
  // Encoder states [B,T,H] for the given source ids/paddings.
  Tensor Encode(const NestedMap& theta, const Tensor& src_ids,
                const Tensor& src_paddings) const;
  // One decoder step; returns logits [B,V] and advances m/c in place.
  Tensor DecoderStep(const NestedMap& theta, const Tensor& prev_ids, const Tensor& enc_out,
                     const Tensor& src_paddings, const Tensor& step_padding, Tensor* m,
                     Tensor* c) const;
};

// Record processor for `source<TAB>target` lines. The example carries
// src/tgt subtrees per AttentionSeq2Seq's batch contract plus the `length`
// bucketing key (max of source and target lengths).
InputGenerator::ProcessRecordFn MakeSeq2SeqProcessor(
    std::shared_ptr<const VocabFileTokenizer> tokenizer, DType dtype);

}  // namespace lark
