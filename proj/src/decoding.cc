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

#include "lark/decoding.h"

#include <algorithm>
#include <cmath>

#include "lark/error.h"

namespace lark {

namespace {

std::vector<double> LogProbs(const std::vector<double>& logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

struct Hypothesis {
  std::vector<int64_t> ids;  // emitted ids, bos/eos excluded
  double score = 0.0;
  int64_t prev_id = 0;
  NestedMap state;
};

}  // namespace

std::vector<int64_t> BeamSearch(const DecodeFn& step_fn, const NestedMap& init_state,
                                int64_t bos, int64_t eos, int beam_size, int max_len) {
  LARK_CHECK(beam_size >= 1);
  LARK_CHECK(max_len >= 1);

  std::vector<Hypothesis> active;
  active.push_back(Hypothesis{{}, 0.0, bos, init_state});
  std::vector<Hypothesis> completed;

  for (int step = 0; step < max_len && !active.empty(); ++step) {
    struct Candidate {
      size_t parent;
      int64_t id;
      double score;
    };
    std::vector<Candidate> candidates;
    std::vector<DecodeStep> steps(active.size());
    for (size_t h = 0; h < active.size(); ++h) {
      steps[h] = step_fn(active[h].state, active[h].prev_id);
      LARK_CHECK(!steps[h].logits.empty());
      const std::vector<double> log_probs = LogProbs(steps[h].logits);
      for (int64_t id = 0; id < static_cast<int64_t>(log_probs.size()); ++id) {
        candidates.push_back(Candidate{h, id, active[h].score + log_probs[id]});
      }
    }
    // Select the top beam_size expansions (eos included, so beam_size == 1 is
    // exactly a greedy rollout). Ties break toward lower token order, which
    // stable_sort preserves from the expansion sequence.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    if (static_cast<int>(candidates.size()) > beam_size) candidates.resize(beam_size);

    std::vector<Hypothesis> next_active;
    for (const Candidate& cand : candidates) {
      Hypothesis hyp = active[cand.parent];
      hyp.score = cand.score;
      hyp.prev_id = cand.id;
      hyp.state = steps[cand.parent].state;
      if (cand.id == eos) {
        completed.push_back(std::move(hyp));
      } else {
        hyp.ids.push_back(cand.id);
        next_active.push_back(std::move(hyp));
      }
    }
    active = std::move(next_active);
  }

  const std::vector<Hypothesis>& pool = completed.empty() ? active : completed;
  LARK_CHECK(!pool.empty());
  const Hypothesis* best = &pool[0];
  for (const Hypothesis& hyp : pool) {
    if (hyp.score > best->score) best = &hyp;
  }
  return best->ids;
}

}  // namespace lark
