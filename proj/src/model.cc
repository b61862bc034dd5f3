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

#include "lark/model.h"

#include <cmath>
#include <regex>

#include "lark/checkpoint.h"
#include "lark/flags.h"
#include "lark/ops.h"
#include "lark/tape.h"

namespace lark {

NestedMap MakeMetric(double value, double weight) {
  NestedMap m;
  m.Set("value", value);
  m.Set("weight", weight);
  return m;
}

NestedMap MergeMetrics(const std::vector<NestedMap>& parts) {
  std::map<std::string, std::pair<double, double>> sums;  // name -> (v*w sum, w sum)
  for (const NestedMap& part : parts) {
    for (const std::string& name : part.Keys()) {
      const NestedMap& metric = part.sub(name);
      const double w = metric.scalar("weight");
      sums[name].first += metric.scalar("value") * w;
      sums[name].second += w;
    }
  }
  NestedMap out;
  for (const auto& [name, vw] : sums) {
    out.Set(name, MakeMetric(vw.second > 0.0 ? vw.first / vw.second : 0.0, vw.second));
  }
  return out;
}

double MetricValue(const NestedMap& metrics, const std::string& name) {
  return metrics.sub(name).scalar("value");
}

double MetricWeight(const NestedMap& metrics, const std::string& name) {
  return metrics.sub(name).scalar("weight");
}

Params BaseTask::TaskDefaultParams() {
  Params p = BaseLayer::DefaultParams();
  p.Define("input", InputGeneratorParams(), "");
  p.Define("train", TrainParams(), "");
  return p;
}

BaseTask::BaseTask(const Params& p) : BaseLayer(p) {
  if (train_params().GetReal("learning_rate") <= 0.0) {
    Fail(ErrorCode::kParseError, "learning_rate must be > 0");
  }
  if (max_steps() <= 0) Fail(ErrorCode::kParseError, "max_steps must be > 0");
}

Optimizer* BaseTask::optimizer() {
  if (!optimizer_) optimizer_ = Optimizer::Make(train_params());
  return optimizer_.get();
}

NestedMap BaseTask::FProp(const NestedMap& theta, const NestedMap& batch) const {
  TaskLoss result = FPropLoss(theta, batch);
  CheckNumerics(result.nll, full_name() + "/loss");
  return result.metrics;
}

std::unique_ptr<InputGenerator> BaseTask::MakeInput(const Params&) const {
  Fail(ErrorCode::kInternal, "MakeInput not implemented for '" + full_name() + "'");
}

NestedMap BaseTask::DecodeBatch(const NestedMap&, const NestedMap&) const {
  Fail(ErrorCode::kInternal, "DecodeBatch not implemented for '" + full_name() + "'");
}

std::vector<int64_t> BaseTask::DecodeIds(const NestedMap&, const std::vector<int64_t>&,
                                         int, int) const {
  Fail(ErrorCode::kInternal, "DecodeIds not implemented for '" + full_name() + "'");
}

GradMap GradsByVarName(const NestedMap& grads, const std::string& task_full_name) {
  GradMap out;
  for (auto& [path, leaf] : grads.Flatten()) {
    std::string name = path;
    for (char& c : name) {
      if (c == '.') c = '/';
    }
    out.emplace(task_full_name + "/" + name, std::get<Tensor>(leaf));
  }
  return out;
}

GradResult BaseTask::ComputeGradients(const NestedMap& batch, int64_t global_step,
                                      bool clip) const {
  Tape tape;
  NestedMap theta;
  TaskLoss result;
  {
    TapeScope scope(&tape);
    theta = Theta(global_step).MapLeaves([&](const NestedMap::Leaf& l) -> NestedMap::Leaf {
      return tape.Watch(std::get<Tensor>(l));
    });
    result = FPropLoss(theta, batch);
    CheckNumerics(result.nll, full_name() + "/loss");
  }

  GradResult out;
  out.loss = result.weight.scalar() > 0.0 ? result.nll.scalar() / result.weight.scalar() : 0.0;
  out.weight = result.weight.scalar();
  out.metrics = result.metrics;
  if (out.weight == 0.0) return out;  // all-padding batch: nothing to learn from

  // Normalize by total weight so the learning rate is independent of padding
  // and sync gradient averaging composes.
  Tensor mean_loss;
  {
    TapeScope scope(&tape);
    mean_loss = Div(result.nll, result.weight);
  }
  NestedMap grad_tree = Backward(tape, mean_loss, theta);
  out.grads = GradsByVarName(grad_tree, full_name());

  if (CheckNumericsEnabled()) {
    for (const auto& [name, g] : out.grads) {
      if (!g.AllFinite()) Fail(ErrorCode::kNumericsError, "gradient of '" + name + "'");
    }
  }
  if (clip) ClipByGlobalNorm(train_params().GetReal("clip_gradient_norm"), &out.grads);
  return out;
}

void BaseTask::ApplyGradients(const GradMap& grads, int64_t global_step) {
  const double lr = ScheduleLearningRate(train_params(), global_step);
  VarMap vars = CollectVariables();
  for (const auto& [name, grad] : grads) {
    auto it = vars.find(name);
    if (it == vars.end()) Fail(ErrorCode::kUnknownKey, "gradient for unknown '" + name + "'");
    it->second->value = optimizer()->Apply(name, it->second->value, grad, lr);
  }
}

NestedMap BaseTask::TrainStep(const NestedMap& batch, int64_t global_step) {
  LARK_CHECK(!is_eval());
  GradResult grads = ComputeGradients(batch, global_step);
  if (!grads.grads.empty()) ApplyGradients(grads.grads, global_step);
  return grads.metrics;
}

void ApplyInitRules(BaseTask* task) {
  const ParamValue& rules = task->train_params().Get("init_from_checkpoint_rules");
  if (rules.list().empty()) return;
  VarMap vars = task->CollectVariables();
  std::map<std::string, Checkpoint> loaded;
  for (const ParamValue& rule : rules.list()) {
    if (rule.list().size() != 2) {
      Fail(ErrorCode::kParseError, "init rule must be [pattern, checkpoint_path]");
    }
    const std::string& pattern = rule.list()[0].text();
    const std::string& path = rule.list()[1].text();
    if (!loaded.count(path)) loaded.emplace(path, RestoreCheckpoint(path));
    const Checkpoint& ck = loaded.at(path);
    const std::regex re(pattern);
    for (auto& [name, cell] : vars) {
      if (!std::regex_match(name, re)) continue;
      const Tensor* entry = ck.Find(name);
      if (entry == nullptr) {
        Fail(ErrorCode::kCheckpointMissingVariable,
             "'" + name + "' matched rule '" + pattern + "' but is not in " + path);
      }
      if (entry->shape() != cell->value.shape() || entry->dtype() != cell->value.dtype()) {
        Fail(ErrorCode::kShapeMismatch, "'" + name + "' vs checkpoint entry");
      }
      cell->value = *entry;
    }
  }
}

BaseTask* Model::TaskByName(const std::string& name) const {
  for (BaseTask* t : Tasks()) {
    if (t->name() == name) return t;
  }
  Fail(ErrorCode::kUnknownKey, "no task named '" + name + "'");
}

VarMap Model::CollectVariables() const {
  VarMap out;
  for (BaseTask* t : Tasks()) {
    for (auto& [name, cell] : t->CollectVariables()) {
      auto [it, inserted] = out.emplace(name, cell);
      if (!inserted) Fail(ErrorCode::kDuplicateVariable, "'" + name + "' across tasks");
    }
  }
  return out;
}

int64_t Model::MaxSteps() const {
  int64_t steps = 0;
  for (BaseTask* t : Tasks()) steps = std::max(steps, t->max_steps());
  return steps;
}

std::unique_ptr<Model> BuildModel(const Params& model_params) {
  std::unique_ptr<BaseLayer> layer = Instantiate(model_params);
  Model* model = dynamic_cast<Model*>(layer.get());
  if (model == nullptr) {
    Fail(ErrorCode::kTypeMismatch, "params do not describe a model class");
  }
  layer.release();
  return std::unique_ptr<Model>(model);
}

// --------------------------- SingleTaskModel ---------------------------

Params SingleTaskModel::DefaultParams() {
  Params p = BaseLayer::DefaultParams();
  p.Set("cls", ParamValue(kClass));
  p.Define("task", Params(), "the wrapped task's params");
  return p;
}

SingleTaskModel::SingleTaskModel(const Params& p) : Model(p) {
  Params tp = params().GetParams("task").Copy();
  tp.Set("is_eval", ParamValue(is_eval()));
  // Tasks are variable-namespace roots; construct outside any scope.
  VariableScope root("");
  std::unique_ptr<BaseLayer> layer = Instantiate(tp);
  BaseTask* task = dynamic_cast<BaseTask*>(layer.get());
  if (task == nullptr) Fail(ErrorCode::kTypeMismatch, "'task' params are not a task class");
  layer.release();
  task_.reset(task);
}

std::vector<BaseTask*> SingleTaskModel::Tasks() const { return {task_.get()}; }

// ---------------------------- MultiTaskModel ---------------------------

Params MultiTaskModel::DefaultParams() {
  Params p = BaseLayer::DefaultParams();
  p.Set("cls", ParamValue(kClass));
  p.Define("task_params", Params(), "name -> task params");
  p.Define("task_probs", Params(), "name -> sampling weight");
  Params sharing;
  sharing.Define("kind", "none", "none, shared_encoder, or regex_shared");
  sharing.Define("encoder_child", "", "child name for shared_encoder");
  sharing.Define("regexes", std::vector<ParamValue>{}, "full-name patterns for regex_shared");
  p.Define("sharing", sharing, "");
  return p;
}

MultiTaskModel::MultiTaskModel(const Params& p) : Model(p) {
  const Params& task_params = params().GetParams("task_params");
  const Params& task_probs = params().GetParams("task_probs");
  task_names_ = task_params.Keys();
  if (task_names_.empty()) Fail(ErrorCode::kParseError, "multi-task model with no tasks");
  if (task_probs.Keys() != task_names_) {
    Fail(ErrorCode::kParseError, "task_params and task_probs must share the same keys");
  }

  double total = 0.0;
  for (const std::string& name : task_names_) {
    Params tp = task_params.GetParams(name).Copy();
    tp.Set("is_eval", ParamValue(is_eval()));
    VariableScope root("");
    std::unique_ptr<BaseLayer> layer = Instantiate(tp);
    BaseTask* task = dynamic_cast<BaseTask*>(layer.get());
    if (task == nullptr) {
      Fail(ErrorCode::kTypeMismatch, "task '" + name + "' params are not a task class");
    }
    layer.release();
    tasks_.emplace_back(task);

    const double prob = task_probs.GetReal(name);
    if (prob < 0.0) Fail(ErrorCode::kParseError, "negative task prob for '" + name + "'");
    total += prob;
    probs_.emplace_back(name, prob);
  }
  if (total <= 0.0) Fail(ErrorCode::kParseError, "task probs sum to zero");

  const Params& sharing = params().GetParams("sharing");
  const std::string& kind = sharing.GetText("kind");
  if (kind == "none") return;

  // Cells are matched up across tasks by task-relative path; the first task
  // owning a path creates the cell, later tasks attach to it.
  auto relative = [](const BaseTask& task, const std::string& full) {
    return full.substr(task.name().size() + 1);
  };
  if (kind == "shared_encoder") {
    const std::string& child = sharing.GetText("encoder_child");
    const std::string prefix = child + "/";
    std::map<std::string, VarRef> canonical;
    for (auto& task : tasks_) {
      for (auto& [full, cell] : task->CollectVariables()) {
        const std::string rel = relative(*task, full);
        if (rel.rfind(prefix, 0) != 0) continue;
        auto [it, inserted] = canonical.emplace(rel, cell);
        if (!inserted) task->RebindVariable(rel, it->second);
      }
    }
    if (canonical.empty()) {
      Fail(ErrorCode::kUnknownKey, "shared_encoder child '" + child + "' has no variables");
    }
  } else if (kind == "regex_shared") {
    std::vector<std::regex> patterns;
    for (const ParamValue& v : sharing.Get("regexes").list()) patterns.emplace_back(v.text());
    std::map<std::string, VarRef> canonical;
    for (auto& task : tasks_) {
      for (auto& [full, cell] : task->CollectVariables()) {
        bool matched = false;
        for (const std::regex& re : patterns) {
          if (std::regex_match(full, re)) {
            matched = true;
            break;
          }
        }
        if (!matched) continue;
        const std::string rel = relative(*task, full);
        auto [it, inserted] = canonical.emplace(rel, cell);
        if (!inserted) task->RebindVariable(rel, it->second);
      }
    }
  } else {
    Fail(ErrorCode::kParseError, "unknown sharing kind '" + kind + "'");
  }
}

std::vector<BaseTask*> MultiTaskModel::Tasks() const {
  std::vector<BaseTask*> out;
  out.reserve(tasks_.size());
  for (const auto& t : tasks_) out.push_back(t.get());
  return out;
}

size_t SampleIndex(const std::vector<std::pair<std::string, double>>& probs, Rng* rng) {
  double total = 0.0;
  for (const auto& [name, p] : probs) total += p;
  LARK_CHECK(total > 0.0);
  const double draw = rng->Uniform() * total;
  double cumulative = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    cumulative += probs[i].second;
    if (draw < cumulative) return i;
  }
  return probs.size() - 1;
}

BaseTask* MultiTaskModel::SampleTask(Rng* rng) const {
  return tasks_[SampleIndex(probs_, rng)].get();
}

const LayerClass* SingleTaskModel::kClass =
    RegisterLayerClassOf<SingleTaskModel>("SingleTaskModel");
const LayerClass* MultiTaskModel::kClass =
    RegisterLayerClassOf<MultiTaskModel>("MultiTaskModel");

}  // namespace lark
