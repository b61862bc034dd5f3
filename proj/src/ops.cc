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

#include "lark/ops.h"

#include <algorithm>
#include <cmath>

#include "lark/flags.h"
#include "lark/tape.h"

namespace lark {

namespace {

void CheckSameDType(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dtype() != b.dtype()) {
    Fail(ErrorCode::kDTypeMismatch,
         std::string(op) + ": " + DTypeName(a.dtype()) + " vs " + DTypeName(b.dtype()));
  }
}

template <typename F>
Tensor MapUnary(const Tensor& a, F f) {
  std::vector<double> out(a.data().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = f(a.data()[i]);
  return Tensor::FromVector(a.shape(), std::move(out), a.dtype());
}

// Elementwise with rank-0 broadcast on either side.
template <typename F>
Tensor MapBinary(const Tensor& a, const Tensor& b, F f, const char* op) {
  CheckSameDType(a, b, op);
  if (a.shape() == b.shape()) {
    std::vector<double> out(a.data().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = f(a.data()[i], b.data()[i]);
    return Tensor::FromVector(a.shape(), std::move(out), a.dtype());
  }
  if (a.rank() == 0) {
    const double av = a.scalar();
    std::vector<double> out(b.data().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = f(av, b.data()[i]);
    return Tensor::FromVector(b.shape(), std::move(out), b.dtype());
  }
  if (b.rank() == 0) {
    const double bv = b.scalar();
    std::vector<double> out(a.data().size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = f(a.data()[i], bv);
    return Tensor::FromVector(a.shape(), std::move(out), a.dtype());
  }
  Fail(ErrorCode::kShapeMismatch, std::string(op) + ": " + ShapeToString(a.shape()) +
                                      " vs " + ShapeToString(b.shape()));
}

// Reduces a gradient back to the shape of a (possibly rank-0 broadcast)
// operand.
Tensor Unbroadcast(const Tensor& grad, const Tensor& operand) {
  if (grad.shape() == operand.shape()) return grad;
  LARK_CHECK(operand.rank() == 0);
  double sum = 0.0;
  for (double v : grad.data()) sum += v;
  return Tensor::Scalar(RoundToDType(grad.dtype(), sum), grad.dtype());
}

struct AxisSpans {
  int64_t outer;  // product of dims before axis
  int64_t k;      // extent of axis
  int64_t inner;  // product of dims after axis
};

AxisSpans SpansFor(const Tensor& t, int axis) {
  if (axis < 0 || axis >= t.rank()) {
    Fail(ErrorCode::kIndexOutOfRange,
         "axis " + std::to_string(axis) + " for shape " + ShapeToString(t.shape()));
  }
  AxisSpans s{1, t.shape()[axis], 1};
  for (int i = 0; i < axis; ++i) s.outer *= t.shape()[i];
  for (int i = axis + 1; i < t.rank(); ++i) s.inner *= t.shape()[i];
  return s;
}

std::vector<int64_t> IdsOf(const Tensor& ids, int64_t bound, const char* op) {
  std::vector<int64_t> out(ids.data().size());
  for (size_t i = 0; i < out.size(); ++i) {
    const int64_t id = std::llround(ids.data()[i]);
    if (id < 0 || id >= bound) {
      Fail(ErrorCode::kIndexOutOfRange, std::string(op) + ": id " + std::to_string(id) +
                                            " outside [0," + std::to_string(bound) + ")");
    }
    out[i] = id;
  }
  return out;
}

}  // namespace

Tensor Add(const Tensor& a, const Tensor& b) {
  Tensor out = MapBinary(a, b, [](double x, double y) { return x + y; }, "add");
  return MaybeRecord(std::move(out), {&a, &b}, [a, b](const Tensor& g) {
    return std::vector<Tensor>{Unbroadcast(g, a), Unbroadcast(g, b)};
  });
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  Tensor out = MapBinary(a, b, [](double x, double y) { return x - y; }, "sub");
  return MaybeRecord(std::move(out), {&a, &b}, [a, b](const Tensor& g) {
    return std::vector<Tensor>{Unbroadcast(g, a), Unbroadcast(Neg(g), b)};
  });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  Tensor out = MapBinary(a, b, [](double x, double y) { return x * y; }, "mul");
  return MaybeRecord(std::move(out), {&a, &b}, [a, b](const Tensor& g) {
    return std::vector<Tensor>{Unbroadcast(Mul(g, b), a), Unbroadcast(Mul(g, a), b)};
  });
}

Tensor Div(const Tensor& a, const Tensor& b) {
  Tensor out = MapBinary(a, b, [](double x, double y) { return x / y; }, "div");
  return MaybeRecord(std::move(out), {&a, &b}, [a, b](const Tensor& g) {
    Tensor da = Div(g, b);
    Tensor db = Neg(Mul(da, Div(a, b)));  // -g*a/b^2, shaped like g
    return std::vector<Tensor>{Unbroadcast(da, a), Unbroadcast(db, b)};
  });
}

Tensor Neg(const Tensor& a) {
  Tensor out = MapUnary(a, [](double x) { return -x; });
  return MaybeRecord(std::move(out), {&a},
                     [](const Tensor& g) { return std::vector<Tensor>{Neg(g)}; });
}

Tensor Tanh(const Tensor& a) {
  Tensor out = MapUnary(a, [](double x) { return std::tanh(x); });
  return MaybeRecord(out, {&a}, [out](const Tensor& g) {
    Tensor one_minus_y2 = MapUnary(out, [](double y) { return 1.0 - y * y; });
    return std::vector<Tensor>{Mul(g, one_minus_y2)};
  });
}

Tensor Sigmoid(const Tensor& a) {
  Tensor out = MapUnary(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return MaybeRecord(out, {&a}, [out](const Tensor& g) {
    Tensor dydx = MapUnary(out, [](double y) { return y * (1.0 - y); });
    return std::vector<Tensor>{Mul(g, dydx)};
  });
}

Tensor Relu(const Tensor& a) {
  Tensor out = MapUnary(a, [](double x) { return x > 0.0 ? x : 0.0; });
  return MaybeRecord(std::move(out), {&a}, [a](const Tensor& g) {
    Tensor mask = MapUnary(a, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
    return std::vector<Tensor>{Mul(g, mask)};
  });
}

Tensor Exp(const Tensor& a) {
  Tensor out = MapUnary(a, [](double x) { return std::exp(x); });
  return MaybeRecord(out, {&a}, [out](const Tensor& g) {
    return std::vector<Tensor>{Mul(g, out)};
  });
}

Tensor Log(const Tensor& a) {
  Tensor out = MapUnary(a, [](double x) { return std::log(x); });
  return MaybeRecord(std::move(out), {&a}, [a](const Tensor& g) {
    return std::vector<Tensor>{Div(g, a)};
  });
}

Tensor Sqrt(const Tensor& a) {
  Tensor out = MapUnary(a, [](double x) { return std::sqrt(x); });
  return MaybeRecord(out, {&a}, [out](const Tensor& g) {
    Tensor half_inv = MapUnary(out, [](double y) { return 0.5 / y; });
    return std::vector<Tensor>{Mul(g, half_inv)};
  });
}

Tensor AddBias(const Tensor& x, const Tensor& b) {
  CheckSameDType(x, b, "add_bias");
  if (x.rank() < 1 || b.rank() != 1 || x.shape().back() != b.dim(0)) {
    Fail(ErrorCode::kShapeMismatch, "add_bias: " + ShapeToString(x.shape()) + " + " +
                                        ShapeToString(b.shape()));
  }
  const int64_t d = b.dim(0);
  std::vector<double> out(x.data().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] + b.data()[i % d];
  Tensor result = Tensor::FromVector(x.shape(), std::move(out), x.dtype());
  return MaybeRecord(std::move(result), {&x, &b}, [d, dt = x.dtype()](const Tensor& g) {
    std::vector<double> db(d, 0.0);
    for (size_t i = 0; i < g.data().size(); ++i) db[i % d] += g.data()[i];
    for (double& v : db) v = RoundToDType(dt, v);
    return std::vector<Tensor>{g, Tensor::FromVector({d}, std::move(db), dt)};
  });
}

Tensor ScaleRows(const Tensor& x, const Tensor& s) {
  CheckSameDType(x, s, "scale_rows");
  if (x.rank() < 1 || s.rank() != 1 || x.dim(0) != s.dim(0)) {
    Fail(ErrorCode::kShapeMismatch, "scale_rows: " + ShapeToString(x.shape()) + " by " +
                                        ShapeToString(s.shape()));
  }
  const int64_t rows = x.dim(0);
  const int64_t cols = x.num_elements() / std::max<int64_t>(rows, 1);
  std::vector<double> out(x.data().size());
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t c = 0; c < cols; ++c) out[r * cols + c] = x.data()[r * cols + c] * s.data()[r];
  }
  Tensor result = Tensor::FromVector(x.shape(), std::move(out), x.dtype());
  return MaybeRecord(std::move(result), {&x, &s}, [x, s, rows, cols](const Tensor& g) {
    std::vector<double> dx(g.data().size());
    std::vector<double> ds(rows, 0.0);
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t c = 0; c < cols; ++c) {
        const int64_t i = r * cols + c;
        dx[i] = g.data()[i] * s.data()[r];
        ds[r] += g.data()[i] * x.data()[i];
      }
    }
    for (double& v : ds) v = RoundToDType(g.dtype(), v);
    return std::vector<Tensor>{Tensor::FromVector(x.shape(), std::move(dx), g.dtype()),
                               Tensor::FromVector({rows}, std::move(ds), g.dtype())};
  });
}

namespace {
// Raw [m,k]x[k,n] product without recording.
Tensor MatMulRaw(const Tensor& a, const Tensor& b) {
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  const auto& ad = a.data();
  const auto& bd = b.data();
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t p = 0; p < k; ++p) {
      const double av = ad[i * k + p];
      if (av == 0.0) continue;
      const double* brow = bd.data() + p * n;
      double* orow = out.data() + i * n;
      for (int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return Tensor::FromVector({m, n}, std::move(out), a.dtype());
}

Tensor TransposeRaw(const Tensor& a) {
  const int64_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) out[j * m + i] = a.data()[i * n + j];
  }
  return Tensor::FromVector({n, m}, std::move(out), a.dtype());
}
}  // namespace

Tensor MatMul(const Tensor& a, const Tensor& b) {
  CheckSameDType(a, b, "matmul");
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    Fail(ErrorCode::kShapeMismatch, "matmul: " + ShapeToString(a.shape()) + " x " +
                                        ShapeToString(b.shape()));
  }
  Tensor out = MatMulRaw(a, b);
  return MaybeRecord(std::move(out), {&a, &b}, [a, b](const Tensor& g) {
    return std::vector<Tensor>{MatMulRaw(g, TransposeRaw(b)), MatMulRaw(TransposeRaw(a), g)};
  });
}

Tensor Transpose(const Tensor& a) {
  if (a.rank() != 2) {
    Fail(ErrorCode::kShapeMismatch, "transpose: rank-2 required, got " +
                                        ShapeToString(a.shape()));
  }
  Tensor out = TransposeRaw(a);
  return MaybeRecord(std::move(out), {&a}, [](const Tensor& g) {
    return std::vector<Tensor>{TransposeRaw(g)};
  });
}

Tensor Concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) Fail(ErrorCode::kShapeMismatch, "concat of zero tensors");
  const Tensor& first = parts[0];
  std::vector<int64_t> shape = first.shape();
  if (axis < 0 || axis >= first.rank()) {
    Fail(ErrorCode::kIndexOutOfRange, "concat axis " + std::to_string(axis));
  }
  int64_t total_k = 0;
  for (const Tensor& p : parts) {
    CheckSameDType(first, p, "concat");
    if (p.rank() != first.rank()) Fail(ErrorCode::kShapeMismatch, "concat rank mismatch");
    for (int i = 0; i < first.rank(); ++i) {
      if (i != axis && p.shape()[i] != first.shape()[i]) {
        Fail(ErrorCode::kShapeMismatch, "concat: " + ShapeToString(first.shape()) +
                                            " vs " + ShapeToString(p.shape()));
      }
    }
    total_k += p.shape()[axis];
  }
  shape[axis] = total_k;

  AxisSpans out_spans{1, total_k, 1};
  for (int i = 0; i < axis; ++i) out_spans.outer *= shape[i];
  for (int i = axis + 1; i < static_cast<int>(shape.size()); ++i) out_spans.inner *= shape[i];
  std::vector<double> out(NumElements(shape));
  int64_t offset_k = 0;
  for (const Tensor& p : parts) {
    const AxisSpans ps = SpansFor(p, axis);
    for (int64_t o = 0; o < ps.outer; ++o) {
      const double* src = p.data().data() + o * ps.k * ps.inner;
      double* dst = out.data() + (o * out_spans.k + offset_k) * out_spans.inner;
      std::copy(src, src + ps.k * ps.inner, dst);
    }
    offset_k += p.shape()[axis];
  }
  Tensor result = Tensor::FromVector(std::move(shape), std::move(out), first.dtype());

  std::vector<const Tensor*> input_ptrs;
  input_ptrs.reserve(parts.size());
  for (const Tensor& p : parts) input_ptrs.push_back(&p);
  std::vector<int64_t> part_dims;
  for (const Tensor& p : parts) part_dims.push_back(p.shape()[axis]);
  return MaybeRecord(std::move(result), input_ptrs, [part_dims, axis](const Tensor& g) {
    std::vector<Tensor> grads;
    int64_t off = 0;
    for (int64_t d : part_dims) {
      grads.push_back(Slice(g, axis, off, d));
      off += d;
    }
    return grads;
  });
}

Tensor Slice(const Tensor& t, int axis, int64_t start, int64_t len) {
  const AxisSpans s = SpansFor(t, axis);
  if (start < 0 || len < 0 || start + len > s.k) {
    Fail(ErrorCode::kIndexOutOfRange, "slice [" + std::to_string(start) + "," +
                                          std::to_string(start + len) + ") of extent " +
                                          std::to_string(s.k));
  }
  std::vector<int64_t> shape = t.shape();
  shape[axis] = len;
  std::vector<double> out(NumElements(shape));
  for (int64_t o = 0; o < s.outer; ++o) {
    const double* src = t.data().data() + (o * s.k + start) * s.inner;
    std::copy(src, src + len * s.inner, out.data() + o * len * s.inner);
  }
  Tensor result = Tensor::FromVector(std::move(shape), std::move(out), t.dtype());
  return MaybeRecord(std::move(result), {&t}, [t, axis, start, len, s](const Tensor& g) {
    std::vector<double> dt(t.data().size(), 0.0);
    for (int64_t o = 0; o < s.outer; ++o) {
      const double* src = g.data().data() + o * len * s.inner;
      std::copy(src, src + len * s.inner, dt.data() + (o * s.k + start) * s.inner);
    }
    return std::vector<Tensor>{Tensor::FromVector(t.shape(), std::move(dt), t.dtype())};
  });
}

Tensor Reshape(const Tensor& t, std::vector<int64_t> shape) {
  if (NumElements(shape) != t.num_elements()) {
    Fail(ErrorCode::kShapeMismatch, "reshape " + ShapeToString(t.shape()) + " -> " +
                                        ShapeToString(shape));
  }
  Tensor out = Tensor::FromVector(shape, t.data(), t.dtype());
  return MaybeRecord(std::move(out), {&t}, [orig = t.shape()](const Tensor& g) {
    return std::vector<Tensor>{Tensor::FromVector(orig, g.data(), g.dtype())};
  });
}

Tensor ReduceSum(const Tensor& t, int axis) {
  const AxisSpans s = SpansFor(t, axis);
  std::vector<int64_t> shape;
  for (int i = 0; i < t.rank(); ++i) {
    if (i != axis) shape.push_back(t.shape()[i]);
  }
  std::vector<double> out(s.outer * s.inner, 0.0);
  for (int64_t o = 0; o < s.outer; ++o) {
    for (int64_t k = 0; k < s.k; ++k) {
      for (int64_t i = 0; i < s.inner; ++i) {
        out[o * s.inner + i] += t.data()[(o * s.k + k) * s.inner + i];
      }
    }
  }
  Tensor result = Tensor::FromVector(std::move(shape), std::move(out), t.dtype());
  return MaybeRecord(std::move(result), {&t}, [t, s](const Tensor& g) {
    std::vector<double> dt(t.data().size());
    for (int64_t o = 0; o < s.outer; ++o) {
      for (int64_t k = 0; k < s.k; ++k) {
        for (int64_t i = 0; i < s.inner; ++i) {
          dt[(o * s.k + k) * s.inner + i] = g.data()[o * s.inner + i];
        }
      }
    }
    return std::vector<Tensor>{Tensor::FromVector(t.shape(), std::move(dt), t.dtype())};
  });
}

Tensor ReduceMean(const Tensor& t, int axis) {
  const int64_t k = SpansFor(t, axis).k;
  if (k == 0) Fail(ErrorCode::kShapeMismatch, "reduce_mean over empty axis");
  return Div(ReduceSum(t, axis), Tensor::Scalar(static_cast<double>(k), t.dtype()));
}

Tensor ReduceSumAll(const Tensor& t) {
  double sum = 0.0;
  for (double v : t.data()) sum += v;
  Tensor out = Tensor::Scalar(RoundToDType(t.dtype(), sum), t.dtype());
  return MaybeRecord(std::move(out), {&t}, [shape = t.shape(), dt = t.dtype()](const Tensor& g) {
    return std::vector<Tensor>{Tensor::Full(shape, g.scalar(), dt)};
  });
}

Tensor ReduceMeanAll(const Tensor& t) {
  if (t.num_elements() == 0) Fail(ErrorCode::kShapeMismatch, "reduce_mean of empty tensor");
  return Div(ReduceSumAll(t), Tensor::Scalar(static_cast<double>(t.num_elements()), t.dtype()));
}

Tensor Gather(const Tensor& params, const Tensor& ids) {
  if (params.rank() != 2 || ids.rank() != 1) {
    Fail(ErrorCode::kShapeMismatch, "gather: params " + ShapeToString(params.shape()) +
                                        ", ids " + ShapeToString(ids.shape()));
  }
  const int64_t v = params.dim(0), d = params.dim(1), n = ids.dim(0);
  const std::vector<int64_t> idx = IdsOf(ids, v, "gather");
  std::vector<double> out(n * d);
  for (int64_t r = 0; r < n; ++r) {
    const double* src = params.data().data() + idx[r] * d;
    std::copy(src, src + d, out.data() + r * d);
  }
  Tensor result = Tensor::FromVector({n, d}, std::move(out), params.dtype());
  return MaybeRecord(std::move(result), {&params}, [idx, v, d, n, dt = params.dtype(),
                                                    shape = params.shape()](const Tensor& g) {
    std::vector<double> dp(v * d, 0.0);
    for (int64_t r = 0; r < n; ++r) {
      for (int64_t c = 0; c < d; ++c) dp[idx[r] * d + c] += g.data()[r * d + c];
    }
    for (double& x : dp) x = RoundToDType(dt, x);
    return std::vector<Tensor>{Tensor::FromVector(shape, std::move(dp), dt)};
  });
}

Tensor SelectColumns(const Tensor& t, const Tensor& ids) {
  if (t.rank() != 2 || ids.rank() != 1 || t.dim(0) != ids.dim(0)) {
    Fail(ErrorCode::kShapeMismatch, "select_columns: " + ShapeToString(t.shape()) +
                                        ", ids " + ShapeToString(ids.shape()));
  }
  const int64_t n = t.dim(0), v = t.dim(1);
  const std::vector<int64_t> idx = IdsOf(ids, v, "select_columns");
  std::vector<double> out(n);
  for (int64_t r = 0; r < n; ++r) out[r] = t.data()[r * v + idx[r]];
  Tensor result = Tensor::FromVector({n}, std::move(out), t.dtype());
  return MaybeRecord(std::move(result), {&t},
                     [idx, n, v, dt = t.dtype(), shape = t.shape()](const Tensor& g) {
    std::vector<double> dt_data(n * v, 0.0);
    for (int64_t r = 0; r < n; ++r) dt_data[r * v + idx[r]] = g.data()[r];
    return std::vector<Tensor>{Tensor::FromVector(shape, std::move(dt_data), dt)};
  });
}

namespace {
// f receives the lane values and writes the transformed lane in place.
template <typename F>
Tensor MapLanes(const Tensor& t, int axis, F f) {
  const AxisSpans s = SpansFor(t, axis);
  std::vector<double> out(t.data().size());
  std::vector<double> lane(s.k);
  for (int64_t o = 0; o < s.outer; ++o) {
    for (int64_t i = 0; i < s.inner; ++i) {
      for (int64_t k = 0; k < s.k; ++k) lane[k] = t.data()[(o * s.k + k) * s.inner + i];
      f(lane);
      for (int64_t k = 0; k < s.k; ++k) out[(o * s.k + k) * s.inner + i] = lane[k];
    }
  }
  return Tensor::FromVector(t.shape(), std::move(out), t.dtype());
}

void SoftmaxLane(std::vector<double>& lane) {
  double mx = lane[0];
  for (double v : lane) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : lane) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : lane) v /= sum;
}

void LogSoftmaxLane(std::vector<double>& lane) {
  double mx = lane[0];
  for (double v : lane) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : lane) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  for (double& v : lane) v -= lse;
}
}  // namespace

Tensor Softmax(const Tensor& t, int axis) {
  if (SpansFor(t, axis).k == 0) Fail(ErrorCode::kShapeMismatch, "softmax over empty axis");
  Tensor out = MapLanes(t, axis, SoftmaxLane);
  return MaybeRecord(out, {&t}, [out, axis](const Tensor& g) {
    // dx = y * (g - sum_k(g*y)) per lane.
    const AxisSpans s = SpansFor(out, axis);
    std::vector<double> dx(g.data().size());
    for (int64_t o = 0; o < s.outer; ++o) {
      for (int64_t i = 0; i < s.inner; ++i) {
        double dot = 0.0;
        for (int64_t k = 0; k < s.k; ++k) {
          const int64_t at = (o * s.k + k) * s.inner + i;
          dot += g.data()[at] * out.data()[at];
        }
        for (int64_t k = 0; k < s.k; ++k) {
          const int64_t at = (o * s.k + k) * s.inner + i;
          dx[at] = RoundToDType(g.dtype(), out.data()[at] * (g.data()[at] - dot));
        }
      }
    }
    return std::vector<Tensor>{Tensor::FromVector(g.shape(), std::move(dx), g.dtype())};
  });
}

Tensor LogSoftmax(const Tensor& t, int axis) {
  if (SpansFor(t, axis).k == 0) Fail(ErrorCode::kShapeMismatch, "log_softmax over empty axis");
  Tensor out = MapLanes(t, axis, LogSoftmaxLane);
  return MaybeRecord(out, {&t}, [out, axis](const Tensor& g) {
    // dx = g - softmax(x) * sum_k(g) per lane; softmax(x) = exp(out).
    const AxisSpans s = SpansFor(out, axis);
    std::vector<double> dx(g.data().size());
    for (int64_t o = 0; o < s.outer; ++o) {
      for (int64_t i = 0; i < s.inner; ++i) {
        double gsum = 0.0;
        for (int64_t k = 0; k < s.k; ++k) gsum += g.data()[(o * s.k + k) * s.inner + i];
        for (int64_t k = 0; k < s.k; ++k) {
          const int64_t at = (o * s.k + k) * s.inner + i;
          dx[at] = RoundToDType(g.dtype(), g.data()[at] - std::exp(out.data()[at]) * gsum);
        }
      }
    }
    return std::vector<Tensor>{Tensor::FromVector(g.shape(), std::move(dx), g.dtype())};
  });
}

CrossEntropyResult CrossEntropy(const Tensor& logits, const Tensor& label_ids,
                                const Tensor& weights) {
  if (logits.rank() != 2 || label_ids.rank() != 1 || weights.rank() != 1 ||
      logits.dim(0) != label_ids.dim(0) || logits.dim(0) != weights.dim(0)) {
    Fail(ErrorCode::kShapeMismatch,
         "cross_entropy: logits " + ShapeToString(logits.shape()) + ", labels " +
             ShapeToString(label_ids.shape()) + ", weights " + ShapeToString(weights.shape()));
  }
  if (AssertsEnabled()) {
    for (double w : weights.data()) {
      if (w != 0.0 && w != 1.0) {
        Fail(ErrorCode::kShapeMismatch, "cross_entropy: weights must be 0 or 1");
      }
    }
  }
  Tensor log_probs = LogSoftmax(logits, 1);
  Tensor picked = SelectColumns(log_probs, label_ids);
  Tensor nll = Neg(ReduceSumAll(Mul(picked, weights)));
  Tensor wsum = ReduceSumAll(weights);
  return CrossEntropyResult{std::move(nll), std::move(wsum)};
}

Tensor Cast(const Tensor& t, DType dtype) {
  if (t.dtype() == dtype) return t;
  Tensor out = Tensor::FromVector(t.shape(), t.data(), dtype);
  return MaybeRecord(std::move(out), {&t}, [dt = t.dtype()](const Tensor& g) {
    return std::vector<Tensor>{Cast(g, dt)};
  });
}

Tensor CheckNumerics(const Tensor& t, const std::string& context) {
  if (CheckNumericsEnabled() && !t.AllFinite()) {
    Fail(ErrorCode::kNumericsError, context);
  }
  return MaybeRecord(t, {&t}, [](const Tensor& g) { return std::vector<Tensor>{g}; });
}

}  // namespace lark
