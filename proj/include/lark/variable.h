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

#include "lark/tensor.h"

namespace lark {

// A variable storage cell. The cell itself is the unit of sharing: two layers
// whose vars hold the same Variable pointer see each other's updates. The
// Tensor value is immutable; updates swap in a new Tensor. Writes happen only
// between training steps (or under the owning runner's serialization).
struct Variable {
  std::string name;  // full slash-joined name, unique within a task
  Tensor value;
};

using VarRef = std::shared_ptr<Variable>;

// Full name -> cell, ordered by name for deterministic iteration.
using VarMap = std::map<std::string, VarRef>;

inline int64_t VariableByteSize(const Variable& v) {
  return v.value.num_elements() * static_cast<int64_t>(DTypeSize(v.value.dtype()));
}

}  // namespace lark
