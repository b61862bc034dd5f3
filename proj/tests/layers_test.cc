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

#include <cmath>

#include "doctest.h"
#include "grad_harness.h"
#include "test_util.h"

namespace lark {
namespace {

using testing::GradCheckError;
using testing::Raises;
using testing::RandomTensor;

Params Ff(int64_t in, int64_t out, const std::string& dtype = "float32") {
  Params p = FeedForward::DefaultParams();
  p.Set("name", ParamValue("ff"));
  p.Set("input_dim", ParamValue(in));
  p.Set("output_dim", ParamValue(out));
  p.Set("dtype", ParamValue(dtype));
  return p;
}

TEST_CASE("xavier init is reproducible across instantiations") {
  Params p = Ff(4, 4);
  p.Set("random_seed", ParamValue(int64_t{11}));
  FeedForward a(p), b(p);
  CHECK(a.CollectVariables().at("ff/w")->value ==
        b.CollectVariables().at("ff/w")->value);

  Params q = p.Copy();
  q.Set("random_seed", ParamValue(int64_t{12}));
  FeedForward c(q);
  CHECK_FALSE(a.CollectVariables().at("ff/w")->value ==
              c.CollectVariables().at("ff/w")->value);
}

TEST_CASE("constant init with scale zero is a zero tensor") {
  Params p = Ff(3, 2);
  p.Set("params_init", ParamValue(InitializerSpec::Constant(0.0)));
  FeedForward layer(p);
  CHECK(layer.CollectVariables().at("ff/w")->value == Tensor::Zeros({3, 2}, DType::kFloat32));
}

TEST_CASE("theta equals vars when noise is off or in eval mode") {
  Params p = Ff(3, 3);
  p.Set("vn_scale", ParamValue(0.1));
  p.Set("is_eval", ParamValue(true));
  FeedForward eval_layer(p);
  CHECK(eval_layer.Theta().tensor("w") ==
        eval_layer.CollectVariables().at("ff/w")->value);

  Params q = Ff(3, 3);
  q.Set("vn_scale", ParamValue(0.1));
  FeedForward train_layer(q);
  const Tensor raw = train_layer.CollectVariables().at("ff/w")->value;
  const Tensor noisy = train_layer.Theta(0).tensor("w");
  CHECK_FALSE(noisy == raw);
  // Noise is a deterministic function of (seed, step, name).
  CHECK(train_layer.Theta(0).tensor("w") == noisy);
  CHECK_FALSE(train_layer.Theta(1).tensor("w") == noisy);
}

TEST_CASE("vn-disabled theta matches vars exactly") {
  Params p = Ff(2, 2);
  FeedForward layer(p);
  CHECK(layer.Theta().tensor("w") == layer.CollectVariables().at("ff/w")->value);
  CHECK(NestedMap::SameStructure(layer.Theta(), layer.Vars()));
}

// A parent exposing the construction hooks for error-path tests.
class ParentLayer : public BaseLayer {
 public:
  static Params DefaultParams() {
    Params p = BaseLayer::DefaultParams();
    p.Set("cls", ParamValue(kClass));
    return p;
  }
  static const LayerClass* kClass;
  explicit ParentLayer(const Params& p) : BaseLayer(p) {
    CreateVariable("own", {2}, InitializerSpec{InitializerSpec::Kind::kConstant, 1.0});
    CreateChild("rnn", Ff(2, 2));
  }
  using BaseLayer::CreateChild;
  using BaseLayer::CreateVariable;
};
const LayerClass* ParentLayer::kClass = RegisterLayerClassOf<ParentLayer>("ParentLayer");

TEST_CASE("child variables are scoped under the parent path") {
  Params p = ParentLayer::DefaultParams();
  p.Set("name", ParamValue("enc"));
  ParentLayer parent(p);
  VarMap vars = parent.CollectVariables();
  CHECK(vars.count("enc/own") == 1);
  CHECK(vars.count("enc/rnn/w") == 1);
  CHECK(vars.count("enc/rnn/b") == 1);
  // Parent theta mirrors the child structure.
  CHECK(parent.Theta().sub("rnn").Has("w"));
  CHECK(NestedMap::SameStructure(parent.Theta().sub("rnn"),
                                 parent.child("rnn")->Theta()));
}

TEST_CASE("construction-time guards") {
  Params p = ParentLayer::DefaultParams();
  p.Set("name", ParamValue("enc"));
  ParentLayer parent(p);
  CHECK(Raises(ErrorCode::kDuplicateChild, [&] { parent.CreateChild("rnn", Ff(2, 2)); }));
  CHECK(Raises(ErrorCode::kDuplicateVariable, [&] {
    parent.CreateVariable("own", {2}, InitializerSpec{InitializerSpec::Kind::kConstant, 0.0});
  }));
  parent.Vars();  // freezes construction
  CHECK(Raises(ErrorCode::kPostConstructionCreate, [&] {
    parent.CreateVariable("late", {2}, InitializerSpec{InitializerSpec::Kind::kConstant, 0.0});
  }));
  CHECK(Raises(ErrorCode::kPostConstructionCreate,
               [&] { parent.CreateChild("late_child", Ff(2, 2)); }));
}

TEST_CASE("feedforward with identity weights is the identity") {
  Params p = Ff(3, 3, "float64");
  p.Set("activation", ParamValue("none"));
  FeedForward layer(p);
  layer.CollectVariables().at("ff/w")->value =
      Tensor::FromVector({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Rng rng(17);
  Tensor x = RandomTensor(rng, {4, 3});
  NestedMap in;
  in.Set("input", x);
  CHECK(layer.FProp(layer.Theta(), in).tensor("output") == x);
}

TEST_CASE("fprop is a pure function of theta and inputs") {
  Params p = Ff(3, 2, "float64");
  FeedForward layer(p);
  Rng rng(23);
  NestedMap in;
  in.Set("input", RandomTensor(rng, {2, 3}));
  NestedMap theta = layer.Theta();
  CHECK(layer.FProp(theta, in).tensor("output") ==
        layer.FProp(theta, in).tensor("output"));

  // theta is the source of truth: perturbing it changes the output even
  // though the stored variables are untouched.
  NestedMap perturbed = theta.MapLeaves([](const NestedMap::Leaf& l) -> NestedMap::Leaf {
    return Add(std::get<Tensor>(l), ScalarLike(std::get<Tensor>(l), 0.25));
  });
  CHECK_FALSE(layer.FProp(perturbed, in).tensor("output") ==
              layer.FProp(layer.Theta(), in).tensor("output"));
}

Params Lstm(int64_t in, int64_t hidden, const std::string& dtype = "float64") {
  Params p = LSTMCell::DefaultParams();
  p.Set("name", ParamValue("cell"));
  p.Set("input_dim", ParamValue(in));
  p.Set("hidden_dim", ParamValue(hidden));
  p.Set("dtype", ParamValue(dtype));
  return p;
}

TEST_CASE("lstm cell with zero weights and inputs stays at zero") {
  LSTMCell cell(Lstm(3, 4));
  VarMap vars = cell.CollectVariables();
  vars.at("cell/wm")->value = Tensor::Zeros({7, 16});
  vars.at("cell/b")->value = Tensor::Zeros({16});

  NestedMap in;
  in.Set("act", Tensor::Zeros({2, 3}));
  in.Set("padding", Tensor::Zeros({2}));
  in.Set("m", Tensor::Zeros({2, 4}));
  in.Set("c", Tensor::Zeros({2, 4}));
  NestedMap out = cell.FProp(cell.Theta(), in);
  CHECK(out.tensor("m") == Tensor::Zeros({2, 4}));
  CHECK(out.tensor("c") == Tensor::Zeros({2, 4}));
}

TEST_CASE("lstm default bias opens the forget gate") {
  LSTMCell cell(Lstm(2, 3));
  const Tensor& b = cell.CollectVariables().at("cell/b")->value;
  // Blocks [i, f, g, o]: forget block at [h, 2h).
  for (int64_t j = 0; j < 12; ++j) {
    CHECK(b.data()[j] == (j >= 3 && j < 6 ? 1.0 : 0.0));
  }
}

TEST_CASE("attention over a single unpadded position weights it fully") {
  Params p = AdditiveAttention::DefaultParams();
  p.Set("name", ParamValue("atten"));
  p.Set("query_dim", ParamValue(int64_t{3}));
  p.Set("source_dim", ParamValue(int64_t{3}));
  p.Set("hidden_dim", ParamValue(int64_t{4}));
  p.Set("dtype", ParamValue("float64"));
  AdditiveAttention atten(p);

  Rng rng(31);
  NestedMap in;
  in.Set("query", RandomTensor(rng, {2, 3}));
  in.Set("source", RandomTensor(rng, {2, 1, 3}));
  in.Set("source_paddings", Tensor::Zeros({2, 1}));
  NestedMap out = atten.FProp(atten.Theta(), in);
  CHECK(out.tensor("probs") == Tensor::Full({2, 1}, 1.0));
}

Params RnnParams(int64_t in, int64_t hidden) {
  Params p = RNN::DefaultParams();
  p.Set("name", ParamValue("rnn"));
  p.Set("cell", ParamValue(Lstm(in, hidden)));
  p.Set("dtype", ParamValue("float64"));
  return p;
}

TEST_CASE("rnn holds state through padded steps") {
  RNN rnn(RnnParams(2, 3));
  Rng rng(41);
  Tensor act3 = RandomTensor(rng, {1, 3, 2});
  Tensor act2 = Slice(act3, 1, 0, 2);

  NestedMap in3;
  in3.Set("act", act3);
  in3.Set("paddings", Tensor::FromVector({1, 3}, {0, 0, 1}));
  NestedMap in2;
  in2.Set("act", act2);
  in2.Set("paddings", Tensor::Zeros({1, 2}));

  NestedMap theta = rnn.Theta();
  NestedMap out3 = rnn.FProp(theta, in3);
  NestedMap out2 = rnn.FProp(theta, in2);
  CHECK(out3.tensor("m") == out2.tensor("m"));
  CHECK(out3.tensor("c") == out2.tensor("c"));
  // Unpadded output positions agree exactly.
  CHECK(Slice(out3.tensor("out"), 1, 0, 2) == out2.tensor("out"));
}

TEST_CASE("gradients of every concrete layer pass the oracle") {
  Rng rng(20260202);
  uint64_t seed = 7000;

  {
    Params p = Ff(3, 2, "float64");
    FeedForward layer(p);
    NestedMap inputs = layer.Theta();
    inputs.Set("input", RandomTensor(rng, {4, 3}));
    const double err = GradCheckError(
        [&](const NestedMap& m) {
          NestedMap in;
          in.Set("input", m.tensor("input"));
          return layer.FProp(m, in).tensor("output");
        },
        inputs, seed++);
    INFO("feedforward");
    CHECK(err <= 1e-5);
  }
  {
    Params p = Embedding::DefaultParams();
    p.Set("name", ParamValue("emb"));
    p.Set("vocab_size", ParamValue(int64_t{5}));
    p.Set("embedding_dim", ParamValue(int64_t{3}));
    p.Set("dtype", ParamValue("float64"));
    Embedding layer(p);
    const Tensor ids = Tensor::FromVector({4}, {0, 3, 3, 1});
    const double err = GradCheckError(
        [&](const NestedMap& m) {
          NestedMap in;
          in.Set("ids", ids);
          return layer.FProp(m, in).tensor("embeddings");
        },
        layer.Theta(), seed++);
    INFO("embedding");
    CHECK(err <= 1e-5);
  }
  {
    Params p = SoftmaxLayer::DefaultParams();
    p.Set("name", ParamValue("softmax"));
    p.Set("input_dim", ParamValue(int64_t{3}));
    p.Set("num_classes", ParamValue(int64_t{4}));
    p.Set("dtype", ParamValue("float64"));
    SoftmaxLayer layer(p);
    const Tensor ids = Tensor::FromVector({5}, {0, 1, 2, 3, 1});
    const Tensor weights = Tensor::FromVector({5}, {1, 1, 0, 1, 1});
    NestedMap inputs = layer.Theta();
    inputs.Set("input", RandomTensor(rng, {5, 3}));
    const double err = GradCheckError(
        [&](const NestedMap& m) {
          NestedMap in;
          in.Set("input", m.tensor("input"));
          in.Set("class_ids", ids);
          in.Set("class_weights", weights);
          return layer.FProp(m, in).tensor("total_xent");
        },
        inputs, seed++);
    INFO("softmax");
    CHECK(err <= 1e-5);
  }
  {
    LSTMCell cell(Lstm(3, 4));
    NestedMap inputs = cell.Theta();
    inputs.Set("act", RandomTensor(rng, {2, 3}));
    inputs.Set("m", RandomTensor(rng, {2, 4}, 0.5));
    inputs.Set("c", RandomTensor(rng, {2, 4}, 0.5));
    const Tensor padding = Tensor::FromVector({2}, {0, 1});
    const double err = GradCheckError(
        [&](const NestedMap& m) {
          NestedMap in;
          in.Set("act", m.tensor("act"));
          in.Set("m", m.tensor("m"));
          in.Set("c", m.tensor("c"));
          in.Set("padding", padding);
          NestedMap out = cell.FProp(m, in);
          return Concat({out.tensor("m"), out.tensor("c")}, 1);
        },
        inputs, seed++);
    INFO("lstm_cell");
    CHECK(err <= 1e-5);
  }
  {
    Params p = AdditiveAttention::DefaultParams();
    p.Set("name", ParamValue("atten"));
    p.Set("query_dim", ParamValue(int64_t{4}));
    p.Set("source_dim", ParamValue(int64_t{3}));
    p.Set("hidden_dim", ParamValue(int64_t{5}));
    p.Set("dtype", ParamValue("float64"));
    AdditiveAttention layer(p);
    const Tensor paddings = Tensor::FromVector({2, 3}, {0, 0, 1, 0, 0, 0});
    NestedMap inputs = layer.Theta();
    inputs.Set("query", RandomTensor(rng, {2, 4}));
    inputs.Set("source", RandomTensor(rng, {2, 3, 3}));
    const double err = GradCheckError(
        [&](const NestedMap& m) {
          NestedMap in;
          in.Set("query", m.tensor("query"));
          in.Set("source", m.tensor("source"));
          in.Set("source_paddings", paddings);
          return layer.FProp(m, in).tensor("context");
        },
        inputs, seed++);
    INFO("attention");
    CHECK(err <= 1e-5);
  }
  {
    RNN rnn(RnnParams(2, 3));
    const Tensor paddings = Tensor::FromVector({2, 3}, {0, 0, 1, 0, 0, 0});
    NestedMap inputs = rnn.Theta();
    inputs.Set("act", RandomTensor(rng, {2, 3, 2}));
    const double err = GradCheckError(
        [&](const NestedMap& m) {
          NestedMap in;
          in.Set("act", m.tensor("act"));
          in.Set("paddings", paddings);
          return rnn.FProp(m, in).tensor("out");
        },
        inputs, seed++);
    INFO("rnn");
    CHECK(err <= 1e-5);
  }
}

}  // namespace
}  // namespace lark
