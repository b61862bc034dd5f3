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
#include <vector>

#include "lark/base_layer.h"
#include "lark/input.h"
#include "lark/optimizer.h"
#include "lark/rng.h"

namespace lark {

// Metrics are a NestedMap of name -> {value, weight}. Every task metric map
// contains "loss".
NestedMap MakeMetric(double value, double weight);
NestedMap MergeMetrics(const std::vector<NestedMap>& parts);  // weighted mean per name
double MetricValue(const NestedMap& metrics, const std::string& name);
double MetricWeight(const NestedMap& metrics, const std::string& name);

// Forward result of a task: weighted NLL sum, weight sum, and metrics.
struct TaskLoss {
  Tensor nll;
  Tensor weight;
  NestedMap metrics;
};

struct GradResult {
  GradMap grads;   // keyed by full variable name; already clipped
  double loss = 0.0;
  double weight = 0.0;
  NestedMap metrics;
};

// A complete optimization problem: input generator params, a network built
// from layers, a loss, and an optimizer. In local mode the task updates its
// own variables each step.
class BaseTask : public BaseLayer {
 public:
  // BaseLayer params plus `input` and `train` subtrees.
  static Params TaskDefaultParams();

  explicit BaseTask(const Params& p);

  // Loss-bearing forward pass; a pure function of (theta, batch).
  virtual TaskLoss FPropLoss(const NestedMap& theta, const NestedMap& batch) const = 0;

  // Metrics form of FPropLoss; runs check_numerics on the loss.
  NestedMap FProp(const NestedMap& theta, const NestedMap& batch) const override;

  // Builds this task's input generator for the given input params (the
  // task's own, or an eval dataset's).
  virtual std::unique_ptr<InputGenerator> MakeInput(const Params& input_params) const;

  // Free-running decode of a batch -> decode metrics (e.g. exact_match).
  virtual NestedMap DecodeBatch(const NestedMap& theta, const NestedMap& batch) const;
  // Single-sequence decode used by inference export; returns ids, eos
  // excluded.
  virtual std::vector<int64_t> DecodeIds(const NestedMap& theta,
                                         const std::vector<int64_t>& src_ids, int beam_size,
                                         int max_len) const;

  // Gradients of (weighted NLL / total weight) w.r.t. all variables, keyed by
  // full variable name and clipped to train.clip_gradient_norm. No variable
  // is touched. Raises NumericsError on a non-finite loss or gradient (when
  // checks are enabled). Sync workers pass clip=false: the trainer client
  // clips the aggregate once instead.
  GradResult ComputeGradients(const NestedMap& batch, int64_t global_step,
                              bool clip = true) const;

  // One local training step: gradients, then exactly one optimizer update
  // with lr = schedule(global_step). On NumericsError the step aborts with
  // variables unchanged.
  NestedMap TrainStep(const NestedMap& batch, int64_t global_step);

  // Applies precomputed gradients with the task-owned optimizer (used by the
  // sync trainer client, which aggregates before updating).
  void ApplyGradients(const GradMap& grads, int64_t global_step);

  const Params& train_params() const { return params().GetParams("train"); }
  const Params& input_params() const { return params().GetParams("input"); }
  int64_t max_steps() const { return train_params().GetInt("max_steps"); }

  Optimizer* optimizer();

 private:
  std::unique_ptr<Optimizer> optimizer_;
};

// Maps theta-path gradients ("enc.cell.wm") to full variable names
// ("task/enc/cell/wm").
GradMap GradsByVarName(const NestedMap& grads, const std::string& task_full_name);

// Loads each rule's checkpoint and overwrites every variable whose full name
// matches the rule's pattern; later rules win. Rules come from
// train.init_from_checkpoint_rules as [pattern, checkpoint_path] pairs.
void ApplyInitRules(BaseTask* task);

// One Task (single-task) or several Tasks with sharing and sampling
// (multi-task). Tasks are roots of the variable namespace; the model wrapper
// adds no scope of its own.
class Model : public BaseLayer {
 public:
  explicit Model(const Params& p) : BaseLayer(p) {}

  virtual std::vector<BaseTask*> Tasks() const = 0;
  virtual BaseTask* SampleTask(Rng* rng) const = 0;
  BaseTask* TaskByName(const std::string& name) const;

  // Union over tasks; shared cells appear once per task-qualified name.
  VarMap CollectVariables() const override;

  int64_t MaxSteps() const;
};

std::unique_ptr<Model> BuildModel(const Params& model_params);

// Transparent wrapper around one task.
class SingleTaskModel : public Model {
 public:
  static Params DefaultParams();
  static const LayerClass* kClass;
  explicit SingleTaskModel(const Params& p);
  std::vector<BaseTask*> Tasks() const override;
  BaseTask* SampleTask(Rng*) const override { return task_.get(); }

 private:
  std::unique_ptr<BaseTask> task_;
};

// Tasks with sampling probabilities and variable sharing. Sharing modes:
//   none            - all cells distinct
//   shared_encoder  - the named child's cells are shared across tasks
//   regex_shared    - any variable whose full name matches one of the
//                     regexes shares one cell across tasks (matched up by
//                     task-relative path; first task creates, others attach)
class MultiTaskModel : public Model {
 public:
  static Params DefaultParams();
  static const LayerClass* kClass;
  explicit MultiTaskModel(const Params& p);
  std::vector<BaseTask*> Tasks() const override;
  BaseTask* SampleTask(Rng* rng) const override;

  const std::vector<std::pair<std::string, double>>& task_probs() const { return probs_; }

 private:
  std::vector<std::string> task_names_;
  std::vector<std::unique_ptr<BaseTask>> tasks_;
  std::vector<std::pair<std::string, double>> probs_;
};

// Categorical draw proportional to normalized probs; deterministic given the
// rng state.
size_t SampleIndex(const std::vector<std::pair<std::string, double>>& probs, Rng* rng);

}  // namespace lark
