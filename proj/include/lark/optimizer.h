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

#include <map>
#include <memory>
#include <string>

#include "lark/hyperparams.h"
#include "lark/tensor.h"

namespace lark {

using GradMap = std::map<std::string, Tensor>;

Params OptimizerParams();   // kind: sgd | adam; beta1, beta2, epsilon
Params LrScheduleParams();  // kind: constant | exponential; decay_rate, decay_steps

// The shared `train` subtree of every task: learning_rate, optimizer,
// clip_gradient_norm, max_steps, lr_schedule, init_from_checkpoint_rules.
Params TrainParams();

// Stateful parameter update rule. Slot state (e.g. Adam moments) is keyed by
// variable name; Apply returns the updated value and advances the slots.
// Whoever owns the optimizer owns the update: the task in local mode, the
// parameter-server shard in async mode, the trainer client in sync mode.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual Tensor Apply(const std::string& name, const Tensor& value,
                       const Tensor& grad, double learning_rate) = 0;

  static std::unique_ptr<Optimizer> Make(const Params& train_params);
};

// learning_rate scaled by the schedule at the given step.
double ScheduleLearningRate(const Params& train_params, int64_t global_step);

// When clip_norm > 0 and the global L2 norm of `grads` exceeds it, scales all
// gradients so the norm equals clip_norm. Returns the pre-clip norm.
double ClipByGlobalNorm(double clip_norm, GradMap* grads);

}  // namespace lark
