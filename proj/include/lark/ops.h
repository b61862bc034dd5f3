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

#include <string>
#include <vector>

#include "lark/tensor.h"

namespace lark {

// All ops are differentiable w.r.t. their real-valued inputs and record
// themselves on the active tape. Binary elementwise ops require equal shapes
// or a rank-0 operand on either side (scalar broadcast); operands must share
// a dtype (use Cast first).

// Elementwise.
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Div(const Tensor& a, const Tensor& b);
Tensor Neg(const Tensor& a);
Tensor Tanh(const Tensor& a);
Tensor Sigmoid(const Tensor& a);
Tensor Relu(const Tensor& a);
Tensor Exp(const Tensor& a);
Tensor Log(const Tensor& a);
Tensor Sqrt(const Tensor& a);

// x [N,D] plus a bias row b [D], broadcast across rows.
Tensor AddBias(const Tensor& x, const Tensor& b);
// x [N,D] with row n scaled by s[n]; s is [N].
Tensor ScaleRows(const Tensor& x, const Tensor& s);

// Structure.
Tensor MatMul(const Tensor& a, const Tensor& b);  // [m,k]x[k,n] -> [m,n]
Tensor Transpose(const Tensor& a);                // rank-2
Tensor Concat(const std::vector<Tensor>& parts, int axis);
Tensor Slice(const Tensor& t, int axis, int64_t start, int64_t len);
Tensor Reshape(const Tensor& t, std::vector<int64_t> shape);
Tensor ReduceSum(const Tensor& t, int axis);
Tensor ReduceMean(const Tensor& t, int axis);
Tensor ReduceSumAll(const Tensor& t);   // rank-0
Tensor ReduceMeanAll(const Tensor& t);  // rank-0

// Row lookup: params [V,D], ids [N] (integral values) -> [N,D].
Tensor Gather(const Tensor& params, const Tensor& ids);
// out[n] = t[n, ids[n]] for t [N,V], ids [N] -> [N].
Tensor SelectColumns(const Tensor& t, const Tensor& ids);

Tensor Softmax(const Tensor& t, int axis);
Tensor LogSoftmax(const Tensor& t, int axis);

// Weighted token-level negative log-likelihood over logits [N,V] with label
// ids [N] and per-position weights [N] in {0,1} (or fractional). Returns the
// weighted NLL sum and the weight sum, both rank-0.
struct CrossEntropyResult {
  Tensor nll_sum;
  Tensor weight_sum;
};
CrossEntropyResult CrossEntropy(const Tensor& logits, const Tensor& label_ids,
                                const Tensor& weights);

Tensor Cast(const Tensor& t, DType dtype);

// Constants matching another tensor's dtype (and shape, for FullLike).
inline Tensor ScalarLike(const Tensor& t, double v) {
  return Tensor::Scalar(v, t.dtype());
}
inline Tensor FullLike(const Tensor& t, double v) {
  return Tensor::Full(t.shape(), v, t.dtype());
}

// Returns t unchanged when finite everywhere or when numerics checks are
// disabled; otherwise raises NumericsError carrying `context`.
Tensor CheckNumerics(const Tensor& t, const std::string& context);

}  // namespace lark
