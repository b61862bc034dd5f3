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

#include "lark/nested_map.h"
#include "lark/tensor.h"

namespace lark {

// Central-difference gradient oracle: (f(x+h) - f(x-h)) / 2h per coordinate
// of every Tensor leaf in `at`. Uses forward evaluation only, so it is
// independent of the tape-based backward path it is used to check.
NestedMap FiniteDifferenceGrad(const std::function<double(const NestedMap&)>& f,
                               const NestedMap& at, double step);

// |a-b| / max(1, |a|, |b|).
double RelError(double a, double b);

// Maximum RelError over all corresponding Tensor-leaf elements. Structures
// must match.
double MaxRelError(const NestedMap& a, const NestedMap& b);
double MaxRelError(const Tensor& a, const Tensor& b);

}  // namespace lark
