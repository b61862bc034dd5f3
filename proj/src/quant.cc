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

#include "lark/quant.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "lark/checkpoint.h"
#include "lark/tape.h"

namespace lark {

void QuantDomain::Track(const Tensor& t) {
  if (frozen_) Fail(ErrorCode::kFrozenDomain, "track on a frozen domain");
  double lo = t.data().empty() ? 0.0 : t.data()[0];
  double hi = lo;
  for (double v : t.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!seen_) {
    min_ = lo;
    max_ = hi;
    seen_ = true;
  } else {
    min_ = decay_ * min_ + (1.0 - decay_) * lo;
    max_ = decay_ * max_ + (1.0 - decay_) * hi;
  }
  // The range always spans zero so clamping can represent exact zeros.
  min_ = std::min(min_, 0.0);
  max_ = std::max(max_, 0.0);
}

void QuantDomain::SetRange(double min, double max) {
  if (frozen_) Fail(ErrorCode::kFrozenDomain, "set range on a frozen domain");
  min_ = std::min(min, 0.0);
  max_ = std::max(max, 0.0);
  seen_ = min_ < max_;
}

Tensor FakeQuant(const Tensor& t, const QuantDomain& d) {
  if (!d.quantizing()) return t;
  if (!d.initialized()) Fail(ErrorCode::kUninitializedDomain, "fake_quant before tracking");
  const double lo = d.min(), hi = d.max();
  const double levels = std::pow(2.0, d.bits()) - 1.0;
  const double scale = (hi - lo) / levels;

  std::vector<double> out(t.data().size());
  for (size_t i = 0; i < out.size(); ++i) {
    const double clamped = std::min(hi, std::max(lo, t.data()[i]));
    out[i] = lo + std::round((clamped - lo) / scale) * scale;
  }
  Tensor result = Tensor::FromVector(t.shape(), std::move(out), t.dtype());
  // Straight-through estimator: pass gradients inside [lo, hi], zero outside.
  return MaybeRecord(std::move(result), {&t}, [t, lo, hi](const Tensor& g) {
    std::vector<double> dg(g.data().size());
    for (size_t i = 0; i < dg.size(); ++i) {
      const double x = t.data()[i];
      dg[i] = (x >= lo && x <= hi) ? g.data()[i] : 0.0;
    }
    return std::vector<Tensor>{Tensor::FromVector(g.shape(), std::move(dg), g.dtype())};
  });
}

// ----------------------------- QuantWrapper ----------------------------

Params QuantWrapper::DefaultParams() {
  Params p = BaseLayer::DefaultParams();
  p.Set("cls", ParamValue(kClass));
  p.Define("inner", Params(), "params of the wrapped layer");
  p.Define("bits", int64_t{8}, "quantization bits; 0 disables");
  p.Define("ema_decay", 0.99, "range tracking decay");
  return p;
}

QuantWrapper::QuantWrapper(const Params& p)
    : BaseLayer(p),
      bits_(static_cast<int>(params().GetInt("bits"))),
      decay_(params().GetReal("ema_decay")),
      act_domain_(bits_, decay_) {
  CreateChild("inner", params().GetParams("inner"));
}

NestedMap QuantWrapper::FProp(const NestedMap& theta, const NestedMap& inputs) const {
  const NestedMap& inner_theta = theta.sub("inner");
  if (bits_ == QuantDomain::kUnquantizedBits) {
    return child("inner")->FProp(inner_theta, inputs);
  }
  // Domains mutate only on the training path (single writer); eval reads
  // whatever ranges training produced and quantizes nothing it never saw.
  const bool training = !is_eval();
  NestedMap quant_theta =
      inner_theta.MapLeaves([&](const std::string& path, const NestedMap::Leaf& leaf)
                                -> NestedMap::Leaf {
        const Tensor& value = std::get<Tensor>(leaf);
        QuantDomain* domain = nullptr;
        if (training) {
          domain = &weight_domains_.try_emplace(path, bits_, decay_).first->second;
          if (!domain->frozen()) domain->Track(value);
        } else {
          auto it = weight_domains_.find(path);
          if (it == weight_domains_.end()) return leaf;
          domain = &it->second;
        }
        if (!domain->initialized()) return leaf;  // constant-zero weights
        return FakeQuant(value, *domain);
      });
  NestedMap out = child("inner")->FProp(quant_theta, inputs);
  return out.MapLeaves([&](const NestedMap::Leaf& leaf) -> NestedMap::Leaf {
    if (!std::holds_alternative<Tensor>(leaf)) return leaf;
    const Tensor& value = std::get<Tensor>(leaf);
    if (training && !act_domain_.frozen()) act_domain_.Track(value);
    if (!act_domain_.initialized()) return leaf;
    return FakeQuant(value, act_domain_);
  });
}

// ---------------------------- inference export --------------------------

NestedMap InferenceFn::Run(const NestedMap& input) const {
  const Tensor& ids = input.tensor("src_ids");
  if (ids.rank() != 2 || ids.dim(0) != 1) {
    Fail(ErrorCode::kShapeMismatch, "inference expects src_ids [1,S]");
  }
  std::vector<int64_t> src_ids;
  for (int64_t i = 0; i < ids.dim(1); ++i) {
    src_ids.push_back(std::llround(ids.data()[i]));
  }
  BaseTask* task = model_->Tasks()[0];
  const std::vector<int64_t> hyp =
      task->DecodeIds(theta_, src_ids, beam_size_, max_len_);
  std::vector<double> hyp_data(hyp.begin(), hyp.end());
  NestedMap out;
  out.Set("hyp_ids", Tensor::FromVector({1, static_cast<int64_t>(hyp.size())},
                                        std::move(hyp_data), ids.dtype()));
  return out;
}

InferenceFn ExportInference(const Params& model_params, const std::string& checkpoint_path,
                            const std::string& manifest_path) {
  Params p = model_params.Copy();
  p.Set("is_eval", ParamValue(true));
  std::shared_ptr<Model> model = BuildModel(p);
  VarMap vars = model->CollectVariables();
  RestoreIntoVars(RestoreCheckpoint(checkpoint_path), &vars);

  BaseTask* task = model->Tasks()[0];
  InferenceFn fn;
  fn.model_ = model;
  fn.theta_ = task->Theta();
  fn.beam_size_ = static_cast<int>(task->params().Has("beam_size")
                                       ? task->params().GetInt("beam_size")
                                       : 1);
  fn.max_len_ = static_cast<int>(task->params().Has("max_decode_len")
                                     ? task->params().GetInt("max_decode_len")
                                     : 0);

  if (!manifest_path.empty()) {
    std::ofstream out(manifest_path, std::ios::trunc);
    if (!out) Fail(ErrorCode::kIoError, "cannot write manifest '" + manifest_path + "'");
    out << "input src_ids [1,-1]\n";
    out << "output hyp_ids [1,-1]\n";
  }
  return fn;
}

const LayerClass* QuantWrapper::kClass = RegisterLayerClassOf<QuantWrapper>("QuantWrapper");

}  // namespace lark
