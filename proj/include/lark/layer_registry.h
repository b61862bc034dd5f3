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

#include <functional>
#include <memory>
#include <string>

#include "lark/hyperparams.h"

namespace lark {

class BaseLayer;

// A registered layer class: the target of a Params `cls` reference. Equivalent
// construction paths — SomeLayer(p) directly, or Instantiate(p) through
// p.cls — run the same factory.
struct LayerClass {
  std::string name;
  std::function<Params()> default_params;
  std::function<std::unique_ptr<BaseLayer>(const Params&)> make;
};

// Registration happens once per class at static-init time; duplicate names
// raise DuplicateKey.
const LayerClass* RegisterLayerClass(LayerClass cls);
const LayerClass* FindLayerClass(const std::string& name);  // nullptr if absent
const std::string& LayerClassName(const LayerClass* cls);

template <typename T>
const LayerClass* RegisterLayerClassOf(const std::string& name) {
  return RegisterLayerClass(LayerClass{
      name,
      []() { return T::DefaultParams(); },
      [](const Params& p) -> std::unique_ptr<BaseLayer> { return std::make_unique<T>(p); }});
}

// Constructs the layer class referenced by p.cls, passing p. Requires a
// non-null cls and a non-empty name.
std::unique_ptr<BaseLayer> Instantiate(const Params& p);

}  // namespace lark
