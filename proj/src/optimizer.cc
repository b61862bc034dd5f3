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

#include "lark/optimizer.h"

#include <cmath>

#include "lark/error.h"

namespace lark {

Params OptimizerParams() {
  Params p;
  p.Define("kind", "sgd", "sgd or adam");
  p.Define("beta1", 0.9, "adam first-moment decay");
  p.Define("beta2", 0.999, "adam second-moment decay");
  p.Define("epsilon", 1e-8, "adam denominator floor");
  return p;
}

Params LrScheduleParams() {
  Params p;
  p.Define("kind", "constant", "constant or exponential");
  p.Define("decay_rate", 1.0, "multiplier applied every decay_steps");
  p.Define("decay_steps", int64_t{1}, "");
  return p;
}

Params TrainParams() {
  Params p;
  p.Define("learning_rate", 0.001, "");
  p.Define("optimizer", OptimizerParams(), "");
  p.Define("clip_gradient_norm", 0.0, "global L2 clip; 0 disables");
  p.Define("max_steps", int64_t{1000}, "training stops after this global step");
  p.Define("lr_schedule", LrScheduleParams(), "");
  p.Define("init_from_checkpoint_rules", std::vector<ParamValue>{},
           "list of [variable-name regex, checkpoint path] pairs");
  return p;
}

double ScheduleLearningRate(const Params& train_params, int64_t global_step) {
  const double lr = train_params.GetReal("learning_rate");
  const Params& sched = train_params.GetParams("lr_schedule");
  const std::string& kind = sched.GetText("kind");
  if (kind == "constant") return lr;
  if (kind == "exponential") {
    const double rate = sched.GetReal("decay_rate");
    const double steps = static_cast<double>(sched.GetInt("decay_steps"));
    return lr * std::pow(rate, static_cast<double>(global_step) / steps);
  }
  Fail(ErrorCode::kParseError, "unknown lr schedule '" + kind + "'");
}

double ClipByGlobalNorm(double clip_norm, GradMap* grads) {
  double sq = 0.0;
  for (const auto& [name, g] : *grads) {
    for (double v : g.data()) sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (clip_norm > 0.0 && norm > clip_norm) {
    const double scale = clip_norm / norm;
    for (auto& [name, g] : *grads) {
      std::vector<double> scaled = g.data();
      for (double& v : scaled) v *= scale;
      g = Tensor::FromVector(g.shape(), std::move(scaled), g.dtype());
    }
  }
  return norm;
}

namespace {

class SgdOptimizer : public Optimizer {
 public:
  Tensor Apply(const std::string&, const Tensor& value, const Tensor& grad,
               double lr) override {
    LARK_CHECK(value.shape() == grad.shape());
    std::vector<double> out = value.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] -= lr * grad.data()[i];
    return Tensor::FromVector(value.shape(), std::move(out), value.dtype());
  }
};

class AdamOptimizer : public Optimizer {
 public:
  AdamOptimizer(double beta1, double beta2, double epsilon)
      : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  Tensor Apply(const std::string& name, const Tensor& value, const Tensor& grad,
               double lr) override {
    LARK_CHECK(value.shape() == grad.shape());
    Slot& slot = slots_[name];
    if (slot.m.empty()) {
      slot.m.assign(value.data().size(), 0.0);
      slot.v.assign(value.data().size(), 0.0);
    }
    LARK_CHECK(slot.m.size() == value.data().size());
    slot.t += 1;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(slot.t));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(slot.t));
    std::vector<double> out = value.data();
    for (size_t i = 0; i < out.size(); ++i) {
      const double g = grad.data()[i];
      slot.m[i] = beta1_ * slot.m[i] + (1.0 - beta1_) * g;
      slot.v[i] = beta2_ * slot.v[i] + (1.0 - beta2_) * g * g;
      const double m_hat = slot.m[i] / bc1;
      const double v_hat = slot.v[i] / bc2;
      out[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon_);
    }
    return Tensor::FromVector(value.shape(), std::move(out), value.dtype());
  }

 private:
  struct Slot {
    std::vector<double> m, v;
    int64_t t = 0;
  };
  double beta1_, beta2_, epsilon_;
  std::map<std::string, Slot> slots_;
};

}  // namespace

std::unique_ptr<Optimizer> Optimizer::Make(const Params& train_params) {
  const Params& p = train_params.GetParams("optimizer");
  const std::string& kind = p.GetText("kind");
  if (kind == "sgd") return std::make_unique<SgdOptimizer>();
  if (kind == "adam") {
    return std::make_unique<AdamOptimizer>(p.GetReal("beta1"), p.GetReal("beta2"),
                                           p.GetReal("epsilon"));
  }
  Fail(ErrorCode::kParseError, "unknown optimizer '" + kind + "'");
}

}  // namespace lark
