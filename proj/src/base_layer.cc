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

#include "lark/base_layer.h"

#include <cmath>
#include <map>

namespace lark {

namespace {
thread_local std::string g_scope;

std::map<std::string, LayerClass>& ClassRegistry() {
  static auto* registry = new std::map<std::string, LayerClass>();
  return *registry;
}
}  // namespace

const LayerClass* RegisterLayerClass(LayerClass cls) {
  auto& registry = ClassRegistry();
  auto [it, inserted] = registry.emplace(cls.name, std::move(cls));
  if (!inserted) Fail(ErrorCode::kDuplicateKey, "layer class '" + it->first + "'");
  return &it->second;
}

const LayerClass* FindLayerClass(const std::string& name) {
  auto& registry = ClassRegistry();
  auto it = registry.find(name);
  return it == registry.end() ? nullptr : &it->second;
}

const std::string& LayerClassName(const LayerClass* cls) {
  LARK_CHECK(cls != nullptr);
  return cls->name;
}

std::unique_ptr<BaseLayer> Instantiate(const Params& p) {
  const LayerClass* cls = p.GetLayerClass("cls");
  if (cls == nullptr) Fail(ErrorCode::kMissingCls, "params have no class to instantiate");
  if (p.GetText("name").empty()) {
    Fail(ErrorCode::kMissingName, "instantiating '" + cls->name + "' without a name");
  }
  return cls->make(p);
}

VariableScope::VariableScope(const std::string& prefix) : previous_(g_scope) {
  g_scope = prefix;
}
VariableScope::~VariableScope() { g_scope = previous_; }
const std::string& VariableScope::Current() { return g_scope; }

DType DTypeFromName(const std::string& name) {
  if (name == "float32") return DType::kFloat32;
  if (name == "float64") return DType::kFloat64;
  Fail(ErrorCode::kParseError, "unknown dtype '" + name + "'");
}

Params InitializerSpec::ToParams(Kind kind, double scale) {
  Params p;
  const char* name = "xavier";
  switch (kind) {
    case Kind::kConstant: name = "constant"; break;
    case Kind::kUniform: name = "uniform"; break;
    case Kind::kGaussian: name = "gaussian"; break;
    case Kind::kXavier: name = "xavier"; break;
  }
  p.Define("kind", name, "one of constant, uniform, gaussian, xavier");
  p.Define("scale", scale, "constant value, half-width, stddev, or xavier gain");
  return p;
}

InitializerSpec InitializerSpec::FromParams(const Params& p) {
  InitializerSpec spec;
  const std::string& kind = p.GetText("kind");
  if (kind == "constant") {
    spec.kind = Kind::kConstant;
  } else if (kind == "uniform") {
    spec.kind = Kind::kUniform;
  } else if (kind == "gaussian") {
    spec.kind = Kind::kGaussian;
  } else if (kind == "xavier") {
    spec.kind = Kind::kXavier;
  } else {
    Fail(ErrorCode::kParseError, "unknown initializer kind '" + kind + "'");
  }
  spec.scale = p.GetReal("scale");
  if (spec.scale < 0.0) Fail(ErrorCode::kParseError, "initializer scale must be >= 0");
  return spec;
}

Params BaseLayer::DefaultParams() {
  Params p;
  p.Define("cls", ParamValue(static_cast<const LayerClass*>(nullptr)), "layer class");
  p.Define("name", "", "layer name; segments form the variable name prefix");
  p.Define("params_init", InitializerSpec::Xavier(), "default variable initializer");
  p.Define("dtype", "float32", "variable and activation dtype");
  p.Define("is_eval", false, "evaluation mode: disables variational noise");
  p.Define("random_seed", int64_t{0}, "base seed for init and noise draws");
  p.Define("vn_scale", 0.0, "variational noise stddev; 0 disables");
  return p;
}

BaseLayer::BaseLayer(const Params& p) : params_(p) {
  params_.Seal();
  name_ = params_.GetText("name");
  if (name_.empty()) Fail(ErrorCode::kMissingName, "layer constructed without a name");
  full_name_ = g_scope.empty() ? name_ : g_scope + "/" + name_;
  is_eval_ = params_.GetBool("is_eval");
  dtype_ = DTypeFromName(params_.GetText("dtype"));
  vn_scale_ = params_.GetReal("vn_scale");
  if (vn_scale_ < 0.0) Fail(ErrorCode::kParseError, "vn_scale must be >= 0");
  random_seed_ = params_.GetInt("random_seed");
}

NestedMap BaseLayer::FProp(const NestedMap&, const NestedMap&) const {
  Fail(ErrorCode::kInternal, "FProp not implemented for '" + full_name_ + "'");
}

void BaseLayer::CheckMutable(const std::string& what) const {
  if (frozen_) {
    Fail(ErrorCode::kPostConstructionCreate,
         what + " on '" + full_name_ + "' after construction");
  }
}

void BaseLayer::CreateVariable(const std::string& name, std::vector<int64_t> shape,
                               const InitializerSpec& init) {
  const std::string full = full_name_ + "/" + name;
  Rng rng(MixSeed(static_cast<uint64_t>(random_seed_), full));
  const int64_t n = NumElements(shape);
  std::vector<double> values(n);
  switch (init.kind) {
    case InitializerSpec::Kind::kConstant:
      for (double& v : values) v = init.scale;
      break;
    case InitializerSpec::Kind::kUniform:
      for (double& v : values) v = rng.Uniform(-init.scale, init.scale);
      break;
    case InitializerSpec::Kind::kGaussian:
      for (double& v : values) v = rng.Gaussian() * init.scale;
      break;
    case InitializerSpec::Kind::kXavier: {
      // fan_in = product of leading dims, fan_out = trailing dim.
      double fan_in = 1.0, fan_out = 1.0;
      if (!shape.empty()) {
        fan_out = static_cast<double>(shape.back());
        for (size_t i = 0; i + 1 < shape.size(); ++i) fan_in *= static_cast<double>(shape[i]);
      }
      const double limit = init.scale * std::sqrt(6.0 / (fan_in + fan_out));
      for (double& v : values) v = rng.Uniform(-limit, limit);
      break;
    }
  }
  CreateVariableWithInit(name, Tensor::FromVector(std::move(shape), std::move(values), dtype_));
}

void BaseLayer::CreateVariableWithInit(const std::string& name, Tensor initial_value) {
  CheckMutable("CreateVariable('" + name + "')");
  if (own_vars_.count(name) || children_.count(name)) {
    Fail(ErrorCode::kDuplicateVariable, "'" + name + "' in '" + full_name_ + "'");
  }
  const std::string full = full_name_ + "/" + name;
  own_vars_[name] = std::make_shared<Variable>(Variable{full, std::move(initial_value)});
  var_order_.push_back(name);
}

void BaseLayer::CreateChild(const std::string& name, const Params& child_params) {
  CheckMutable("CreateChild('" + name + "')");
  if (children_.count(name) || own_vars_.count(name)) {
    Fail(ErrorCode::kDuplicateChild, "'" + name + "' in '" + full_name_ + "'");
  }
  Params cp = child_params.Copy();
  cp.Set("name", ParamValue(name));
  // Mode, dtype, seed and noise scale propagate down the tree; the whole
  // tree must agree on them for theta structures to line up.
  cp.Set("is_eval", ParamValue(is_eval_));
  cp.Set("dtype", ParamValue(params_.GetText("dtype")));
  cp.Set("random_seed", ParamValue(random_seed_));
  cp.Set("vn_scale", ParamValue(vn_scale_));
  std::unique_ptr<BaseLayer> child;
  {
    VariableScope scope(full_name_);
    child = Instantiate(cp);
  }
  children_[name] = std::move(child);
  child_order_.push_back(name);
}

BaseLayer* BaseLayer::child(const std::string& name) const {
  auto it = children_.find(name);
  return it == children_.end() ? nullptr : it->second.get();
}

NestedMap BaseLayer::Vars() const {
  frozen_ = true;
  NestedMap out;
  for (const auto& [name, cell] : own_vars_) out.Set(name, cell);
  for (const auto& [name, child] : children_) out.Set(name, child->Vars());
  return out;
}

NestedMap BaseLayer::Theta(int64_t global_step) const {
  frozen_ = true;
  NestedMap out;
  for (const auto& [name, cell] : own_vars_) {
    Tensor value = cell->value;
    if (!is_eval_ && vn_scale_ > 0.0) {
      Rng rng(MixSeed(MixSeed(static_cast<uint64_t>(random_seed_),
                              static_cast<uint64_t>(global_step)),
                      cell->name));
      std::vector<double> noisy = value.data();
      for (double& v : noisy) v += rng.Gaussian() * vn_scale_;
      value = Tensor::FromVector(value.shape(), std::move(noisy), value.dtype());
    }
    out.Set(name, value);
  }
  for (const auto& [name, child] : children_) out.Set(name, child->Theta(global_step));
  return out;
}

VarMap BaseLayer::CollectVariables() const {
  frozen_ = true;
  VarMap out;
  // Names are structural (this layer's path), so a cell shared from another
  // task still surfaces under this task's own name.
  for (const auto& [name, cell] : own_vars_) out[full_name_ + "/" + name] = cell;
  for (const auto& [name, child] : children_) {
    for (auto& [full, cell] : child->CollectVariables()) {
      auto [it, inserted] = out.emplace(full, cell);
      if (!inserted) Fail(ErrorCode::kDuplicateVariable, "full name '" + full + "'");
    }
  }
  return out;
}

VarRef BaseLayer::FindVariableCell(const std::string& path) const {
  const size_t slash = path.find('/');
  if (slash == std::string::npos) {
    auto it = own_vars_.find(path);
    return it == own_vars_.end() ? nullptr : it->second;
  }
  BaseLayer* c = child(path.substr(0, slash));
  return c == nullptr ? nullptr : c->FindVariableCell(path.substr(slash + 1));
}

void BaseLayer::RebindVariable(const std::string& path, VarRef cell) {
  const size_t slash = path.find('/');
  if (slash != std::string::npos) {
    BaseLayer* c = child(path.substr(0, slash));
    if (c == nullptr) Fail(ErrorCode::kUnknownKey, "no child at '" + path + "'");
    c->RebindVariable(path.substr(slash + 1), std::move(cell));
    return;
  }
  auto it = own_vars_.find(path);
  if (it == own_vars_.end()) {
    Fail(ErrorCode::kUnknownKey, "no variable '" + path + "' in '" + full_name_ + "'");
  }
  if (it->second->value.shape() != cell->value.shape() ||
      it->second->value.dtype() != cell->value.dtype()) {
    Fail(ErrorCode::kSharedShapeMismatch,
         "'" + it->second->name + "' " + ShapeToString(it->second->value.shape()) +
             " cannot share storage with '" + cell->name + "' " +
             ShapeToString(cell->value.shape()));
  }
  it->second = std::move(cell);
}

}  // namespace lark
