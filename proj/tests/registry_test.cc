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

#include "lark/registry.h"

#include "doctest.h"
#include "lark/layers.h"
#include "lark/model.h"
#include "lark/toy_tasks.h"
#include "test_util.h"

namespace lark {
namespace {

using testing::Raises;

Params TinyTask() {
  // Shaped like a task params for wrapping purposes: cls, name, input.
  Params p;
  p.Define("cls", ParamValue(FeedForward::kClass), "");
  p.Define("name", "tiny", "");
  p.Define("input", Params(), "");
  return p;
}

Params TinyInput() {
  Params p;
  p.Define("file_pattern", "text:/nowhere/*", "");
  return p;
}

void RegisterTiny(ModelRegistry& registry, const std::string& key) {
  registry.RegisterSingle(key, TinyTask,
                          {{Dataset::kTrain, TinyInput}, {Dataset::kDev, TinyInput}});
}

TEST_CASE("registration and lookup") {
  ModelRegistry registry;
  RegisterTiny(registry, "image.mnist.LeNet5");
  CHECK(registry.HasModel("image.mnist.LeNet5"));
  Params p = registry.GetModelParams("image.mnist.LeNet5", Dataset::kTrain, "");
  // Single-task entries come back wrapped in the single-task model class.
  CHECK(LayerClassName(p.GetLayerClass("cls")) == "SingleTaskModel");
  CHECK(p.GetText("task.input.file_pattern") == "text:/nowhere/*");
}

TEST_CASE("duplicate keys are rejected") {
  ModelRegistry registry;
  RegisterTiny(registry, "a.b.C");
  CHECK(Raises(ErrorCode::kDuplicateModelName, [&] { RegisterTiny(registry, "a.b.C"); }));
}

TEST_CASE("unknown model lists near misses") {
  ModelRegistry registry;
  RegisterTiny(registry, "image.mnist.LeNet5");
  RegisterTiny(registry, "toy.copy.Machine");
  try {
    registry.GetModelParams("image.mnist.LeNet9", Dataset::kTrain, "");
    FAIL("expected UnknownModel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kUnknownModel);
    CHECK(std::string(e.what()).find("image.mnist.LeNet5") != std::string::npos);
  }
}

TEST_CASE("missing dataset is an error, not a fallback") {
  ModelRegistry registry;
  registry.RegisterSingle("x.y.Z", TinyTask, {{Dataset::kTrain, TinyInput}});
  CHECK(Raises(ErrorCode::kUnknownDataset,
               [&] { registry.GetModelParams("x.y.Z", Dataset::kTest, ""); }));
  CHECK(registry.HasDataset("x.y.Z", Dataset::kTrain));
  CHECK_FALSE(registry.HasDataset("x.y.Z", Dataset::kDev));
}

TEST_CASE("overrides are reflected in the returned params") {
  RegisterToyTasks();
  Params p = ModelRegistry::Global().GetModelParams(
      "toy.copy.CopyLstm", Dataset::kTrain, "task.train.learning_rate=0.5");
  CHECK(p.GetReal("task.train.learning_rate") == 0.5);
}

TEST_CASE("lookups are referentially transparent") {
  RegisterToyTasks();
  const std::string overrides = "task.train.max_steps=77";
  Params a = ModelRegistry::Global().GetModelParams("toy.copy.CopyLstm", Dataset::kTrain,
                                                    overrides);
  Params b = ModelRegistry::Global().GetModelParams("toy.copy.CopyLstm", Dataset::kTrain,
                                                    overrides);
  CHECK(a.ToText() == b.ToText());
}

TEST_CASE("list_models is sorted and stable") {
  ModelRegistry registry;
  CHECK(registry.ListModels().empty());
  RegisterTiny(registry, "z.last.Entry");
  RegisterTiny(registry, "a.first.Entry");
  const std::vector<std::string> expected = {"a.first.Entry", "z.last.Entry"};
  CHECK(registry.ListModels() == expected);
  CHECK(registry.ListModels() == expected);
}

TEST_CASE("registration order does not affect lookups") {
  ModelRegistry forward, backward;
  RegisterTiny(forward, "a.a.A");
  RegisterTiny(forward, "b.b.B");
  RegisterTiny(backward, "b.b.B");
  RegisterTiny(backward, "a.a.A");
  CHECK(forward.GetModelParams("a.a.A", Dataset::kTrain, "").ToText() ==
        backward.GetModelParams("a.a.A", Dataset::kTrain, "").ToText());
  CHECK(forward.ListModels() == backward.ListModels());
}

TEST_CASE("toy configs resolve and instantiate") {
  RegisterToyTasks();
  CHECK(ModelRegistry::Global().HasModel("toy.copy.CopyLstm"));
  CHECK(ModelRegistry::Global().HasModel("toy.multi.CopyReverse"));
  Params p =
      ModelRegistry::Global().GetModelParams("toy.copy.CopyLstm", Dataset::kDev, "");
  std::unique_ptr<Model> model = BuildModel(p);
  CHECK(model->Tasks().size() == 1);
}

}  // namespace
}  // namespace lark
