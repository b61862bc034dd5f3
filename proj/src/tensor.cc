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

#include "lark/tensor.h"

#include <atomic>
#include <cmath>
#include <cstring>
#include <sstream>

#include "lark/flags.h"

namespace lark {

namespace {
std::atomic<bool> g_check_numerics{true};
std::atomic<bool> g_asserts{true};
}  // namespace

bool CheckNumericsEnabled() { return g_check_numerics.load(); }
void SetCheckNumericsEnabled(bool enabled) { g_check_numerics.store(enabled); }
bool AssertsEnabled() { return g_asserts.load(); }
void SetAssertsEnabled(bool enabled) { g_asserts.store(enabled); }

const char* DTypeName(DType d) {
  return d == DType::kFloat32 ? "float32" : "float64";
}

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInternal: return "Internal";
    case ErrorCode::kDuplicateKey: return "DuplicateKey";
    case ErrorCode::kSealedParams: return "SealedParams";
    case ErrorCode::kInvalidKeyName: return "InvalidKeyName";
    case ErrorCode::kUnknownKey: return "UnknownKey";
    case ErrorCode::kTypeMismatch: return "TypeMismatch";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kMissingCls: return "MissingCls";
    case ErrorCode::kMissingName: return "MissingName";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDTypeMismatch: return "DTypeMismatch";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kNotScalarLoss: return "NotScalarLoss";
    case ErrorCode::kNumericsError: return "NumericsError";
    case ErrorCode::kDuplicateVariable: return "DuplicateVariable";
    case ErrorCode::kPostConstructionCreate: return "PostConstructionCreate";
    case ErrorCode::kDuplicateChild: return "DuplicateChild";
    case ErrorCode::kUnknownReaderKind: return "UnknownReaderKind";
    case ErrorCode::kNoFilesMatched: return "NoFilesMatched";
    case ErrorCode::kVocabMissingSpecialToken: return "VocabMissingSpecialToken";
    case ErrorCode::kSharedShapeMismatch: return "SharedShapeMismatch";
    case ErrorCode::kCheckpointMissingVariable: return "CheckpointMissingVariable";
    case ErrorCode::kDuplicateModelName: return "DuplicateModelName";
    case ErrorCode::kUnknownModel: return "UnknownModel";
    case ErrorCode::kUnknownDataset: return "UnknownDataset";
    case ErrorCode::kCorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kUnavailablePs: return "UnavailablePs";
    case ErrorCode::kWorkerFailure: return "WorkerFailure";
    case ErrorCode::kUninitializedDomain: return "UninitializedDomain";
    case ErrorCode::kFrozenDomain: return "FrozenDomain";
  }
  return "Unknown";
}

int64_t NumElements(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) Fail(ErrorCode::kShapeMismatch, "negative extent in shape");
    n *= d;
  }
  return n;
}

std::string ShapeToString(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

double RoundToDType(DType dtype, double v) {
  return dtype == DType::kFloat32 ? static_cast<double>(static_cast<float>(v)) : v;
}

Tensor::Tensor() : Tensor(Scalar(0.0)) {}

Tensor Tensor::FromVector(std::vector<int64_t> shape, std::vector<double> values,
                          DType dtype) {
  if (NumElements(shape) != static_cast<int64_t>(values.size())) {
    Fail(ErrorCode::kShapeMismatch,
         "value count " + std::to_string(values.size()) + " does not match shape " +
             ShapeToString(shape));
  }
  if (dtype == DType::kFloat32) {
    for (double& v : values) v = RoundToDType(dtype, v);
  }
  Tensor t{Uninitialized{}};
  t.shape_ = std::move(shape);
  t.dtype_ = dtype;
  t.data_ = std::make_shared<const std::vector<double>>(std::move(values));
  t.node_ = -1;
  return t;
}

Tensor Tensor::Zeros(std::vector<int64_t> shape, DType dtype) {
  return Full(std::move(shape), 0.0, dtype);
}

Tensor Tensor::Full(std::vector<int64_t> shape, double value, DType dtype) {
  std::vector<double> values(NumElements(shape), RoundToDType(dtype, value));
  return FromVector(std::move(shape), std::move(values), dtype);
}

Tensor Tensor::Scalar(double value, DType dtype) {
  return FromVector({}, {value}, dtype);
}

int64_t Tensor::dim(int axis) const {
  if (axis < 0 || axis >= rank()) {
    Fail(ErrorCode::kIndexOutOfRange,
         "axis " + std::to_string(axis) + " for rank " + std::to_string(rank()));
  }
  return shape_[axis];
}

double Tensor::at(std::initializer_list<int64_t> index) const {
  if (static_cast<int>(index.size()) != rank()) {
    Fail(ErrorCode::kIndexOutOfRange, "index rank mismatch");
  }
  int64_t flat = 0;
  int axis = 0;
  for (int64_t i : index) {
    if (i < 0 || i >= shape_[axis]) Fail(ErrorCode::kIndexOutOfRange, "index out of bounds");
    flat = flat * shape_[axis] + i;
    ++axis;
  }
  return (*data_)[flat];
}

double Tensor::scalar() const {
  if (rank() != 0) {
    Fail(ErrorCode::kShapeMismatch, "scalar() on tensor of shape " + ShapeToString(shape_));
  }
  return (*data_)[0];
}

bool Tensor::AllFinite() const {
  for (double v : *data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::WithNode(int node) const {
  Tensor t = *this;
  t.node_ = node;
  return t;
}

bool Tensor::operator==(const Tensor& other) const {
  if (shape_ != other.shape_ || dtype_ != other.dtype_) return false;
  const auto& a = *data_;
  const auto& b = *other.data_;
  for (size_t i = 0; i < a.size(); ++i) {
    // Bit-level comparison so that NaN == NaN and -0.0 != 0.0.
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
  }
  return true;
}

std::vector<uint8_t> Tensor::RawBytes() const {
  const auto& d = *data_;
  std::vector<uint8_t> out(d.size() * DTypeSize(dtype_));
  if (dtype_ == DType::kFloat32) {
    for (size_t i = 0; i < d.size(); ++i) {
      float f = static_cast<float>(d[i]);
      std::memcpy(out.data() + i * 4, &f, 4);
    }
  } else {
    std::memcpy(out.data(), d.data(), out.size());
  }
  return out;
}

Tensor Tensor::FromRawBytes(std::vector<int64_t> shape, DType dtype,
                            const std::vector<uint8_t>& bytes) {
  const int64_t n = NumElements(shape);
  if (bytes.size() != static_cast<size_t>(n) * DTypeSize(dtype)) {
    Fail(ErrorCode::kCorruptCheckpoint, "raw byte length does not match shape");
  }
  std::vector<double> values(n);
  if (dtype == DType::kFloat32) {
    for (int64_t i = 0; i < n; ++i) {
      float f;
      std::memcpy(&f, bytes.data() + i * 4, 4);
      values[i] = static_cast<double>(f);
    }
  } else {
    std::memcpy(values.data(), bytes.data(), bytes.size());
  }
  return FromVector(std::move(shape), std::move(values), dtype);
}

std::string Tensor::ToString() const {
  std::ostringstream os;
  os << DTypeName(dtype_) << ShapeToString(shape_) << "{";
  const auto& d = *data_;
  const size_t limit = 16;
  for (size_t i = 0; i < d.size() && i < limit; ++i) {
    if (i) os << ", ";
    os << d[i];
  }
  if (d.size() > limit) os << ", ...";
  os << "}";
  return os.str();
}

}  // namespace lark
