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

#include "lark/hyperparams.h"

#include "doctest.h"
#include "lark/base_layer.h"
#include "lark/layers.h"
#include "test_util.h"

namespace lark {
namespace {

using testing::Raises;

TEST_CASE("define and get round-trip") {
  Params p;
  p.Define("learning_rate", 0.001, "step size");
  CHECK(p.GetReal("learning_rate") == 0.001);
  CHECK(p.Doc("learning_rate") == "step size");
}

TEST_CASE("duplicate define raises") {
  Params p;
  p.Define("learning_rate", 0.001, "");
  CHECK(Raises(ErrorCode::kDuplicateKey,
               [&] { p.Define("learning_rate", 0.01, ""); }));
}

TEST_CASE("invalid key names are rejected") {
  Params p;
  CHECK(Raises(ErrorCode::kInvalidKeyName, [&] { p.Define("LearningRate", 1, ""); }));
  CHECK(Raises(ErrorCode::kInvalidKeyName, [&] { p.Define("9lr", 1, ""); }));
  CHECK(Raises(ErrorCode::kInvalidKeyName, [&] { p.Define("", 1, ""); }));
}

TEST_CASE("nested task params mirror multi-task input wiring") {
  Params task1;
  task1.Define("file_pattern", "text:/tmp/x", "");
  Params p;
  p.Define("task1", task1, "");
  CHECK(p.GetText("task1.file_pattern") == "text:/tmp/x");
}

TEST_CASE("dotted get/set with declared keys") {
  Params train;
  train.Define("max_steps", int64_t{100}, "");
  Params p;
  p.Define("train", train, "");
  p.Set("train.max_steps", ParamValue(int64_t{1000}));
  CHECK(p.GetInt("train.max_steps") == 1000);
}

TEST_CASE("unknown key signals a typo") {
  Params p;
  p.Define("learning_rate", 0.001, "");
  CHECK(Raises(ErrorCode::kUnknownKey, [&] { p.Get("learnig_rate"); }));
  CHECK(Raises(ErrorCode::kUnknownKey, [&] { p.Set("lr", ParamValue(1.0)); }));
}

TEST_CASE("set is type-checked against the default") {
  Params p;
  p.Define("name", "", "");
  CHECK(Raises(ErrorCode::kTypeMismatch, [&] { p.Set("name", ParamValue(int64_t{5})); }));
  p.Define("anything", ParamValue(), "null default accepts all");
  p.Set("anything", ParamValue(3.5));
  CHECK(p.GetReal("anything") == 3.5);
  p.Define("rate", 0.5, "");
  p.Set("rate", ParamValue(int64_t{2}));  // int promotes into real keys
  CHECK(p.GetReal("rate") == 2.0);
}

Params ThreeLevelTree() {
  Params inner;
  inner.Define("dim", int64_t{8}, "");
  Params mid;
  mid.Define("inner", inner, "");
  mid.Define("flag", true, "");
  Params p;
  p.Define("mid", mid, "");
  p.Define("name", "tree", "");
  p.Define("values", std::vector<ParamValue>{1.5, ParamValue("x")}, "");
  return p;
}

TEST_CASE("copy is deep and serializes identically") {
  Params p = ThreeLevelTree();
  Params q = p.Copy();
  CHECK(q.ToText() == p.ToText());
  q.Set("mid.inner.dim", ParamValue(int64_t{9}));
  CHECK(p.GetInt("mid.inner.dim") == 8);
  CHECK(q.GetInt("mid.inner.dim") == 9);
  CHECK(Params().Copy().ToText() == "");
}

TEST_CASE("to_text canonical rendering") {
  Params p;
  p.Define("name", "my_task", "");
  p.Define("lr", 0.001, "");
  CHECK(p.ToText() == "name : \"my_task\"\nlr : 0.001\n");
  CHECK(Params().ToText() == "");

  Params q;
  q.Define("flag", true, "");
  q.Define("off", false, "");
  q.Define("n", int64_t{-3}, "");
  q.Define("cls", ParamValue(static_cast<const LayerClass*>(nullptr)), "");
  CHECK(q.ToText() == "flag : True\noff : False\nn : -3\ncls : None\n");
}

TEST_CASE("to_text quotes and escapes text") {
  Params p;
  p.Define("s", "a\\b \"quoted\"\nnext", "");
  CHECK(p.ToText() == "s : \"a\\\\b \\\"quoted\\\"\\nnext\"\n");
}

Params RandomTree(Rng& rng, int depth) {
  Params p;
  const int keys = 1 + static_cast<int>(rng.UniformInt(4));
  for (int i = 0; i < keys; ++i) {
    const std::string key = "k" + std::to_string(i);
    switch (depth > 0 ? rng.UniformInt(5) : rng.UniformInt(4)) {
      case 0: p.Define(key, rng.Gaussian(), ""); break;
      case 1: p.Define(key, static_cast<int64_t>(rng.UniformInt(1000)), ""); break;
      case 2: p.Define(key, rng.Uniform() < 0.5, ""); break;
      case 3: p.Define(key, "t" + std::to_string(rng.UniformInt(100)), ""); break;
      default: p.Define(key, RandomTree(rng, depth - 1), ""); break;
    }
  }
  return p;
}

TEST_CASE("to_text of a copy is stable over random trees") {
  Rng rng(20260420);
  for (int trial = 0; trial < 50; ++trial) {
    Params p = RandomTree(rng, 3);
    CHECK(p.Copy().ToText() == p.ToText());
  }
}

TEST_CASE("apply_overrides parses by declared type") {
  Params train;
  train.Define("learning_rate", 0.001, "");
  train.Define("max_steps", int64_t{100}, "");
  Params p;
  p.Define("train", train, "");
  p.Define("a", int64_t{0}, "");

  p.ApplyOverrides("train.learning_rate=0.01");
  CHECK(p.GetReal("train.learning_rate") == 0.01);

  p.ApplyOverrides("a=1;a=2");
  CHECK(p.GetInt("a") == 2);  // last wins

  CHECK(Raises(ErrorCode::kParseError, [&] { p.ApplyOverrides("train.max_steps=ten"); }));
  CHECK(Raises(ErrorCode::kUnknownKey, [&] { p.ApplyOverrides("train.maxsteps=10"); }));
  CHECK(Raises(ErrorCode::kParseError, [&] { p.ApplyOverrides("no_equals_sign"); }));
}

TEST_CASE("override composition is associative") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    Params base;
    base.Define("a", int64_t{0}, "");
    base.Define("b", 0.0, "");
    base.Define("c", "", "");
    auto assignment = [&] {
      switch (rng.UniformInt(3)) {
        case 0: return "a=" + std::to_string(rng.UniformInt(100));
        case 1: return "b=" + std::to_string(rng.UniformInt(100)) + ".5";
        default: return "c=t" + std::to_string(rng.UniformInt(100));
      }
    };
    std::string s1 = assignment() + ";" + assignment();
    std::string s2 = assignment() + ";" + assignment();
    Params joint = base.Copy();
    joint.ApplyOverrides(s1 + ";" + s2);
    Params sequential = base.Copy();
    sequential.ApplyOverrides(s1);
    sequential.ApplyOverrides(s2);
    CHECK(joint.ToText() == sequential.ToText());
  }
}

TEST_CASE("override file applies before inline spec") {
  testing::TempDir dir("overrides");
  testing::WriteFile(dir.file("o.txt"), "# comment\na=1\nb=2.5\n");
  Params p;
  p.Define("a", int64_t{0}, "");
  p.Define("b", 0.0, "");
  p.ApplyOverridesFromFile(dir.file("o.txt"));
  p.ApplyOverrides("a=7");
  CHECK(p.GetInt("a") == 7);
  CHECK(p.GetReal("b") == 2.5);
}

TEST_CASE("instantiate constructs through cls like a direct call") {
  Params p = FeedForward::DefaultParams();
  p.Set("name", ParamValue("ff"));
  p.Set("input_dim", ParamValue(int64_t{3}));
  p.Set("output_dim", ParamValue(int64_t{2}));

  std::unique_ptr<BaseLayer> via_cls = Instantiate(p);
  FeedForward direct(p);
  CHECK(via_cls->params().ToText() == direct.params().ToText());

  // Same seed, same variable bytes.
  std::unique_ptr<BaseLayer> again = Instantiate(p);
  auto a = via_cls->CollectVariables();
  auto b = again->CollectVariables();
  REQUIRE(a.size() == b.size());
  for (const auto& [name, cell] : a) {
    CHECK(cell->value == b.at(name)->value);
  }
}

TEST_CASE("instantiate requires cls and name") {
  Params p = BaseLayer::DefaultParams();
  p.Set("name", ParamValue("x"));
  CHECK(Raises(ErrorCode::kMissingCls, [&] { Instantiate(p); }));

  Params q = FeedForward::DefaultParams();
  q.Set("input_dim", ParamValue(int64_t{2}));
  q.Set("output_dim", ParamValue(int64_t{2}));
  CHECK(Raises(ErrorCode::kMissingName, [&] { Instantiate(q); }));
}

TEST_CASE("layer construction seals its params") {
  Params p = FeedForward::DefaultParams();
  p.Set("name", ParamValue("ff"));
  p.Set("input_dim", ParamValue(int64_t{2}));
  p.Set("output_dim", ParamValue(int64_t{2}));
  FeedForward layer(p);
  Params copy = layer.params().Copy();
  CHECK(copy.sealed());
  CHECK(Raises(ErrorCode::kSealedParams, [&] { copy.Define("extra", 1.0, ""); }));
  // The layer's own construction-time params object stays usable.
  CHECK_FALSE(p.sealed());
}

TEST_CASE("overriding a registered class reference by name") {
  Params p;
  p.Define("cls", ParamValue(FeedForward::kClass), "");
  p.ApplyOverrides("cls=LSTMCell");
  CHECK(LayerClassName(p.GetLayerClass("cls")) == "LSTMCell");
  CHECK(Raises(ErrorCode::kParseError, [&] { p.ApplyOverrides("cls=NoSuchLayer"); }));
}

}  // namespace
}  // namespace lark
