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

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "lark/error.h"

namespace lark {

enum class DType : uint8_t { kFloat32 = 0, kFloat64 = 1 };

inline size_t DTypeSize(DType d) { return d == DType::kFloat32 ? 4 : 8; }
const char* DTypeName(DType d);

int64_t NumElements(const std::vector<int64_t>& shape);
std::string ShapeToString(const std::vector<int64_t>& shape);

// Dense row-major numeric array. Storage is shared and immutable; tensors are
// cheap value types. Elements are held as double regardless of dtype; a
// kFloat32 tensor always holds values already rounded to float precision, so
// a 4-byte on-disk round trip is bit-exact.
class Tensor {
 public:
  // Rank-0 float64 zero.
  Tensor();

  static Tensor Zeros(std::vector<int64_t> shape, DType dtype = DType::kFloat64);
  static Tensor Full(std::vector<int64_t> shape, double value,
                     DType dtype = DType::kFloat64);
  static Tensor Scalar(double value, DType dtype = DType::kFloat64);
  static Tensor FromVector(std::vector<int64_t> shape, std::vector<double> values,
                           DType dtype = DType::kFloat64);

  const std::vector<int64_t>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int axis) const;
  int64_t num_elements() const { return static_cast<int64_t>(data_->size()); }
  DType dtype() const { return dtype_; }

  const std::vector<double>& data() const { return *data_; }
  double at(std::initializer_list<int64_t> index) const;
  // Value of a rank-0 tensor.
  double scalar() const;

  bool AllFinite() const;

  // Tape node id; -1 when the tensor is a constant for gradient purposes.
  int node() const { return node_; }
  Tensor WithNode(int node) const;

  // Exact equality: shape, dtype and element values.
  bool operator==(const Tensor& other) const;
  bool operator!=(const Tensor& other) const { return !(*this == other); }

  // Little-endian element bytes at the dtype's width.
  std::vector<uint8_t> RawBytes() const;
  static Tensor FromRawBytes(std::vector<int64_t> shape, DType dtype,
                             const std::vector<uint8_t>& bytes);

  std::string ToString() const;  // debug form

 private:
  struct Uninitialized {};
  explicit Tensor(Uninitialized) {}

  std::shared_ptr<const std::vector<double>> data_;
  std::vector<int64_t> shape_;
  DType dtype_ = DType::kFloat64;
  int node_ = -1;
};

// Rounds v to the representable value of the given dtype.
double RoundToDType(DType dtype, double v);

}  // namespace lark
