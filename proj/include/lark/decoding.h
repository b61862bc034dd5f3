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

#include <cstdint>
#include <functional>
#include <vector>

#include "lark/nested_map.h"

namespace lark {

// One decoding step: raw logits over the vocab plus the successor state.
struct DecodeStep {
  std::vector<double> logits;
  NestedMap state;
};
using DecodeFn = std::function<DecodeStep(const NestedMap& state, int64_t prev_id)>;

// Length-bounded beam search over cumulative log-probabilities (log-softmax
// of the step logits, no length normalization). Hypotheses that emit `eos`
// are complete; the best complete hypothesis wins, falling back to the best
// partial at max_len when nothing completed. Returned ids exclude bos/eos.
// beam_size == 1 is exactly greedy decoding.
std::vector<int64_t> BeamSearch(const DecodeFn& step_fn, const NestedMap& init_state,
                                int64_t bos, int64_t eos, int beam_size, int max_len);

}  // namespace lark
