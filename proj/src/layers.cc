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

#include "lark/layers.h"

namespace lark {

Tensor ApplyActivation(const std::string& kind, const Tensor& x) {
  if (kind == "tanh") return Tanh(x);
  if (kind == "sigmoid") return Sigmoid(x);
  if (kind == "relu") return Relu(x);
  if (kind == "none") return x;
  Fail(ErrorCode::kParseError, "unknown activation '" + kind + "'");
}

// --------------------------- FeedForward ---------------------------

Params FeedForward::DefaultParams() {
  Params p = BaseLayer::DefaultParams();
  p.Set("cls", ParamValue(kClass));
  p.Define("input_dim", int64_t{0}, "");
  p.Define("output_dim", int64_t{0}, "");
  p.Define("activation", "tanh", "tanh, sigmoid, relu, or none");
  return p;
}

FeedForward::FeedForward(const Params& p) : BaseLayer(p) {
  const int64_t in = params().GetInt("input_dim");
  const int64_t out = params().GetInt("output_dim");
  LARK_CHECK(in > 0 && out > 0);
  CreateVariable("w", {in, out}, InitializerSpec::FromParams(params().GetParams("params_init")));
  CreateVariable("b", {out}, InitializerSpec::FromParams(InitializerSpec::Constant(0.0)));
}

NestedMap FeedForward::FProp(const NestedMap& theta, const NestedMap& inputs) const {
  Tensor y = AddBias(MatMul(inputs.tensor("input"), theta.tensor("w")), theta.tensor("b"));
  NestedMap out;
  out.Set("output", ApplyActivation(params().GetText("activation"), y));
  return out;
}

// ---------------------------- Embedding ----------------------------

Params Embedding::DefaultParams() {
  Params p = BaseLayer::DefaultParams();
  p.Set("cls", ParamValue(kClass));
  p.Define("vocab_size", int64_t{0}, "");
  p.Define("embedding_dim", int64_t{0}, "");
  return p;
}

Embedding::Embedding(const Params& p) : BaseLayer(p) {
  const int64_t v = params().GetInt("vocab_size");
  const int64_t d = params().GetInt("embedding_dim");
  LARK_CHECK(v > 0 && d > 0);
  CreateVariable("emb", {v, d},
                 InitializerSpec::FromParams(params().GetParams("params_init")));
}

NestedMap Embedding::FProp(const NestedMap& theta, const NestedMap& inputs) const {
  NestedMap out;
  out.Set("embeddings", Gather(theta.tensor("emb"), inputs.tensor("ids")));
  return out;
}

// --------------------------- SoftmaxLayer --------------------------

Params SoftmaxLayer::DefaultParams() {
  Params p = BaseLayer::DefaultParams();
  p.Set("cls", ParamValue(kClass));
  p.Define("input_dim", int64_t{0}, "");
  p.Define("num_classes", int64_t{0}, "");
  return p;
}

SoftmaxLayer::SoftmaxLayer(const Params& p) : BaseLayer(p) {
  const int64_t in = params().GetInt("input_dim");
  const int64_t classes = params().GetInt("num_classes");
  LARK_CHECK(in > 0 && classes > 0);
  CreateVariable("w", {in, classes},
                 InitializerSpec::FromParams(params().GetParams("params_init")));
  CreateVariable("b", {classes}, InitializerSpec::FromParams(InitializerSpec::Constant(0.0)));
}

Tensor SoftmaxLayer::Logits(const NestedMap& theta, const Tensor& input) const {
  return AddBias(MatMul(input, theta.tensor("w")), theta.tensor("b"));
}

NestedMap SoftmaxLayer::FProp(const NestedMap& theta, const NestedMap& inputs) const {
  CrossEntropyResult xent =
      CrossEntropy(Logits(theta, inputs.tensor("input")), inputs.tensor("class_ids"),
                   inputs.tensor("class_weights"));
  NestedMap out;
  out.Set("total_xent", xent.nll_sum);
  out.Set("total_weight", xent.weight_sum);
  return out;
}

// ----------------------------- LSTMCell ----------------------------

Params LSTMCell::DefaultParams() {
  Params p = BaseLayer::DefaultParams();
  p.Set("cls", ParamValue(kClass));
  p.Define("input_dim", int64_t{0}, "");
  p.Define("hidden_dim", int64_t{0}, "");
  p.Define("forget_gate_bias", 1.0, "initial bias of the forget gate block");
  return p;
}

LSTMCell::LSTMCell(const Params& p) : BaseLayer(p) {
  const int64_t in = params().GetInt("input_dim");
  const int64_t h = params().GetInt("hidden_dim");
  LARK_CHECK(in > 0 && h > 0);
  CreateVariable("wm", {in + h, 4 * h},
                 InitializerSpec::FromParams(params().GetParams("params_init")));
  // Bias blocks [i, f, g, o]; forget block starts at forget_gate_bias.
  std::vector<double> bias(4 * h, 0.0);
  const double fb = params().GetReal("forget_gate_bias");
  for (int64_t j = h; j < 2 * h; ++j) bias[j] = fb;
  CreateVariableWithInit("b", Tensor::FromVector({4 * h}, std::move(bias), dtype()));
}

NestedMap LSTMCell::FProp(const NestedMap& theta, const NestedMap& inputs) const {
  const int64_t h = hidden_dim();
  const Tensor& m_prev = inputs.tensor("m");
  const Tensor& c_prev = inputs.tensor("c");
  const Tensor& padding = inputs.tensor("padding");

  Tensor xm = Concat({inputs.tensor("act"), m_prev}, 1);
  Tensor gates = AddBias(MatMul(xm, theta.tensor("wm")), theta.tensor("b"));
  Tensor i_gate = Sigmoid(Slice(gates, 1, 0, h));
  Tensor f_gate = Sigmoid(Slice(gates, 1, h, h));
  Tensor g_cand = Tanh(Slice(gates, 1, 2 * h, h));
  Tensor o_gate = Sigmoid(Slice(gates, 1, 3 * h, h));

  Tensor c_new = Add(Mul(f_gate, c_prev), Mul(i_gate, g_cand));
  Tensor m_new = Mul(o_gate, Tanh(c_new));

  // Padded rows carry their previous state through.
  Tensor live = Sub(FullLike(padding, 1.0), padding);
  NestedMap out;
  out.Set("c", Add(ScaleRows(c_prev, padding), ScaleRows(c_new, live)));
  out.Set("m", Add(ScaleRows(m_prev, padding), ScaleRows(m_new, live)));
  return out;
}

// ------------------------------- RNN -------------------------------

Params RNN::DefaultParams() {
  Params p = BaseLayer::DefaultParams();
  p.Set("cls", ParamValue(kClass));
  p.Define("cell", LSTMCell::DefaultParams(), "recurrent cell params template");
  return p;
}

RNN::RNN(const Params& p) : BaseLayer(p) {
  CreateChild("cell", params().GetParams("cell"));
}

NestedMap RNN::FProp(const NestedMap& theta, const NestedMap& inputs) const {
  const Tensor& act = inputs.tensor("act");
  const Tensor& paddings = inputs.tensor("paddings");
  if (act.rank() != 3 || paddings.rank() != 2 || act.dim(0) != paddings.dim(0) ||
      act.dim(1) != paddings.dim(1)) {
    Fail(ErrorCode::kShapeMismatch, "rnn: act " + ShapeToString(act.shape()) +
                                        ", paddings " + ShapeToString(paddings.shape()));
  }
  const int64_t b = act.dim(0), t_len = act.dim(1), d = act.dim(2);
  const auto* cell = child_as<LSTMCell>("cell");
  const int64_t h = cell->hidden_dim();

  Tensor m = Tensor::Zeros({b, h}, act.dtype());
  Tensor c = Tensor::Zeros({b, h}, act.dtype());
  std::vector<Tensor> outputs;
  outputs.reserve(t_len);
  for (int64_t t = 0; t < t_len; ++t) {
    NestedMap step;
    step.Set("act", Reshape(Slice(act, 1, t, 1), {b, d}));
    step.Set("padding", Reshape(Slice(paddings, 1, t, 1), {b}));
    step.Set("m", m);
    step.Set("c", c);
    NestedMap next = cell->FProp(theta.sub("cell"), step);
    m = next.tensor("m");
    c = next.tensor("c");
    outputs.push_back(Reshape(m, {b, 1, h}));
  }
  NestedMap out;
  out.Set("out", t_len > 0 ? Concat(outputs, 1) : Tensor::Zeros({b, 0, h}, act.dtype()));
  out.Set("m", m);
  out.Set("c", c);
  return out;
}

// ------------------------ AdditiveAttention ------------------------

Params AdditiveAttention::DefaultParams() {
  Params p = BaseLayer::DefaultParams();
  p.Set("cls", ParamValue(kClass));
  p.Define("query_dim", int64_t{0}, "");
  p.Define("source_dim", int64_t{0}, "");
  p.Define("hidden_dim", int64_t{0}, "");
  return p;
}

AdditiveAttention::AdditiveAttention(const Params& p) : BaseLayer(p) {
  const int64_t q = params().GetInt("query_dim");
  const int64_t s = params().GetInt("source_dim");
  const int64_t h = params().GetInt("hidden_dim");
  LARK_CHECK(q > 0 && s > 0 && h > 0);
  const InitializerSpec init =
      InitializerSpec::FromParams(params().GetParams("params_init"));
  CreateVariable("w_q", {q, h}, init);
  CreateVariable("w_k", {s, h}, init);
  CreateVariable("v", {h, 1}, init);
}

NestedMap AdditiveAttention::FProp(const NestedMap& theta, const NestedMap& inputs) const {
  const Tensor& query = inputs.tensor("query");
  const Tensor& source = inputs.tensor("source");
  const Tensor& source_paddings = inputs.tensor("source_paddings");
  if (source.rank() != 3 || query.rank() != 2 || source_paddings.rank() != 2) {
    Fail(ErrorCode::kShapeMismatch, "attention: query " + ShapeToString(query.shape()) +
                                        ", source " + ShapeToString(source.shape()));
  }
  const int64_t b = source.dim(0), s_len = source.dim(1), k_dim = source.dim(2);

  Tensor q_proj = MatMul(query, theta.tensor("w_q"));  // [B,A]
  std::vector<Tensor> keys;                            // [B,K] per position
  std::vector<Tensor> scores;                          // [B,1] per position
  keys.reserve(s_len);
  for (int64_t s = 0; s < s_len; ++s) {
    Tensor k_s = Reshape(Slice(source, 1, s, 1), {b, k_dim});
    Tensor k_proj = MatMul(k_s, theta.tensor("w_k"));
    scores.push_back(MatMul(Tanh(Add(q_proj, k_proj)), theta.tensor("v")));
    keys.push_back(std::move(k_s));
  }
  Tensor e = Concat(scores, 1);  // [B,S]
  // Padded positions get a large negative score; softmax sends them to 0.
  Tensor masked = Add(e, Mul(source_paddings, ScalarLike(e, -1e9)));
  Tensor probs = Softmax(masked, 1);

  Tensor context = Tensor::Zeros({b, k_dim}, source.dtype());
  for (int64_t s = 0; s < s_len; ++s) {
    Tensor p_s = Reshape(Slice(probs, 1, s, 1), {b});
    context = Add(context, ScaleRows(keys[s], p_s));
  }
  NestedMap out;
  out.Set("context", std::move(context));
  out.Set("probs", std::move(probs));
  return out;
}

const LayerClass* FeedForward::kClass = RegisterLayerClassOf<FeedForward>("FeedForward");
const LayerClass* Embedding::kClass = RegisterLayerClassOf<Embedding>("Embedding");
const LayerClass* SoftmaxLayer::kClass = RegisterLayerClassOf<SoftmaxLayer>("Softmax");
const LayerClass* LSTMCell::kClass = RegisterLayerClassOf<LSTMCell>("LSTMCell");
const LayerClass* RNN::kClass = RegisterLayerClassOf<RNN>("RNN");
const LayerClass* AdditiveAttention::kClass =
    RegisterLayerClassOf<AdditiveAttention>("AdditiveAttention");

}  // namespace lark
