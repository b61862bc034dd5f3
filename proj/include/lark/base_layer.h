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

#include "lark/hyperparams.h"
#include "lark/layer_registry.h"
#include "lark/nested_map.h"
#include "lark/rng.h"
#include "lark/tensor.h"
#include "lark/variable.h"

namespace lark {

// How a variable's initial value is drawn. The draw is a deterministic
// function of (random_seed, full variable name), so two instantiations with
// the same seed hold identical bytes.
struct InitializerSpec {
  enum class Kind { kConstant, kUniform, kGaussian, kXavier };
  Kind kind = Kind::kXavier;
  double scale = 1.0;

  static Params ToParams(Kind kind, double scale);
  static InitializerSpec FromParams(const Params& p);
  static Params Constant(double value) { return ToParams(Kind::kConstant, value); }
  static Params Uniform(double scale) { return ToParams(Kind::kUniform, scale); }
  static Params Gaussian(double scale) { return ToParams(Kind::kGaussian, scale); }
  static Params Xavier(double scale = 1.0) { return ToParams(Kind::kXavier, scale); }
};

// Base class of every layer (and, transitively, tasks and models). A layer
// owns its params (a sealed private copy), its child layers, and its variable
// cells. FProp reads variable values exclusively through the theta argument,
// never through the cells, so the same layer can run concurrently against
// different variable snapshots.
class BaseLayer {
 public:
  explicit BaseLayer(const Params& p);
  virtual ~BaseLayer() = default;
  BaseLayer(const BaseLayer&) = delete;
  BaseLayer& operator=(const BaseLayer&) = delete;

  // Common layer params: cls, name, params_init, dtype, is_eval, random_seed,
  // vn_scale. Concrete classes extend this in their DefaultParams().
  static Params DefaultParams();

  const Params& params() const { return params_; }
  const std::string& name() const { return name_; }
  // Slash-joined path from the root layer, including this layer's name.
  const std::string& full_name() const { return full_name_; }
  bool is_eval() const { return is_eval_; }
  DType dtype() const { return dtype_; }

  // Pure function of (theta, inputs, params, per-call noise). The default
  // raises; layers with a forward computation override it.
  virtual NestedMap FProp(const NestedMap& theta, const NestedMap& inputs) const;

  // Variable cells, mirroring the child-layer tree. Structure is identical to
  // Theta()'s.
  NestedMap Vars() const;

  // Variable values for one forward call: the raw value, or value plus
  // variational noise (stddev vn_scale) when training with vn enabled. Noise
  // is freshly sampled per call, seeded from (random_seed, step, var name).
  NestedMap Theta(int64_t global_step = 0) const;

  // All variables of this layer and its children keyed by full name. Full
  // names are unique by construction.
  virtual VarMap CollectVariables() const;

  // Points an existing variable at a different storage cell (variable
  // sharing across tasks). `path` is slash-joined and relative to this layer,
  // e.g. "enc/cell/wm". Raises SharedShapeMismatch when shapes differ.
  void RebindVariable(const std::string& path, VarRef cell);
  // The cell at a relative slash path; nullptr when absent.
  VarRef FindVariableCell(const std::string& path) const;

  BaseLayer* child(const std::string& name) const;
  const std::vector<std::string>& child_names() const { return child_order_; }

 protected:
  // Construction-time only. Registers storage in vars and defines the theta
  // view. Raises DuplicateVariable / PostConstructionCreate.
  void CreateVariable(const std::string& name, std::vector<int64_t> shape,
                      const InitializerSpec& init);
  // Same, but with an explicit initial value (e.g. structured biases).
  void CreateVariableWithInit(const std::string& name, Tensor initial_value);

  // Instantiates child_params (with its name set to `name`) under this
  // layer's scope and registers it. Construction-time only.
  void CreateChild(const std::string& name, const Params& child_params);

  template <typename T>
  T* child_as(const std::string& name) const {
    return dynamic_cast<T*>(child(name));
  }

 private:
  void CheckMutable(const std::string& what) const;

  Params params_;
  std::string name_;
  std::string full_name_;
  bool is_eval_ = false;
  DType dtype_ = DType::kFloat32;
  double vn_scale_ = 0.0;
  int64_t random_seed_ = 0;

  // First access to vars/theta freezes construction.
  mutable bool frozen_ = false;

  std::vector<std::string> var_order_;
  std::map<std::string, VarRef> own_vars_;
  std::vector<std::string> child_order_;
  std::map<std::string, std::unique_ptr<BaseLayer>> children_;
};

// Active construction scope; layers constructed while one is installed become
// children of that prefix.
class VariableScope {
 public:
  explicit VariableScope(const std::string& prefix);
  ~VariableScope();
  static const std::string& Current();

 private:
  std::string previous_;
};

DType DTypeFromName(const std::string& name);

}  // namespace lark
