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

#include "lark/checkpoint.h"

#include <fstream>

#include "doctest.h"
#include "test_util.h"

namespace lark {
namespace {

using testing::Raises;
using testing::RandomTensor;
using testing::TempDir;

VarMap RandomVars(Rng& rng, int count) {
  VarMap vars;
  for (int i = 0; i < count; ++i) {
    const std::string name = "layer" + std::to_string(i) + "/w";
    std::vector<int64_t> shape;
    const int rank = static_cast<int>(rng.UniformInt(3));
    for (int d = 0; d < rank; ++d) shape.push_back(1 + rng.UniformInt(5));
    const DType dtype = rng.Uniform() < 0.5 ? DType::kFloat32 : DType::kFloat64;
    vars[name] =
        std::make_shared<Variable>(Variable{name, RandomTensor(rng, shape, 2.0, dtype)});
  }
  return vars;
}

TEST_CASE("save then restore is bit-exact") {
  TempDir dir("ckpt");
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    VarMap vars = RandomVars(rng, 1 + static_cast<int>(rng.UniformInt(6)));
    const std::string path = SaveCheckpoint(dir.path(), trial, vars);
    Checkpoint ck = RestoreCheckpoint(path);
    CHECK(ck.step == trial);
    REQUIRE(ck.entries.size() == vars.size());
    for (const auto& [name, cell] : vars) {
      const Tensor* entry = ck.Find(name);
      REQUIRE(entry != nullptr);
      CHECK(*entry == cell->value);
      CHECK(entry->RawBytes() == cell->value.RawBytes());
    }
  }
}

TEST_CASE("latest checkpoint tracks the max step") {
  TempDir dir("latest");
  CHECK_FALSE(LatestCheckpoint(dir.path()).has_value());
  Rng rng(12);
  VarMap vars = RandomVars(rng, 2);
  SaveCheckpoint(dir.path(), 100, vars);
  SaveCheckpoint(dir.path(), 200, vars);
  auto latest = LatestCheckpoint(dir.path());
  REQUIRE(latest.has_value());
  CHECK(latest->first == 200);
  Checkpoint ck = RestoreCheckpoint(latest->second);
  CHECK(ck.step == 200);
}

TEST_CASE("corrupt checkpoints are detected") {
  TempDir dir("corrupt");
  Rng rng(13);
  VarMap vars = RandomVars(rng, 3);
  const std::string path = SaveCheckpoint(dir.path(), 1, vars);

  // Truncated file.
  {
    std::string content = testing::ReadFile(path);
    testing::WriteFile(dir.file("truncated.lngv"),
                       content.substr(0, content.size() / 2));
    CHECK(Raises(ErrorCode::kCorruptCheckpoint,
                 [&] { RestoreCheckpoint(dir.file("truncated.lngv")); }));
  }
  // Bad magic.
  {
    std::string content = testing::ReadFile(path);
    content[0] = 'X';
    testing::WriteFile(dir.file("badmagic.lngv"), content);
    CHECK(Raises(ErrorCode::kCorruptCheckpoint,
                 [&] { RestoreCheckpoint(dir.file("badmagic.lngv")); }));
  }
  CHECK(Raises(ErrorCode::kIoError, [&] { RestoreCheckpoint(dir.file("absent.lngv")); }));
}

TEST_CASE("restore into vars requires every variable") {
  TempDir dir("restorevars");
  Rng rng(14);
  VarMap vars = RandomVars(rng, 3);
  const std::string path = SaveCheckpoint(dir.path(), 5, vars);
  Checkpoint ck = RestoreCheckpoint(path);

  VarMap fresh;
  for (const auto& [name, cell] : vars) {
    fresh[name] = std::make_shared<Variable>(
        Variable{name, Tensor::Zeros(cell->value.shape(), cell->value.dtype())});
  }
  RestoreIntoVars(ck, &fresh);
  for (const auto& [name, cell] : fresh) CHECK(cell->value == vars.at(name)->value);

  VarMap extra = fresh;
  const std::string name = "not_in_checkpoint/w";
  extra[name] = std::make_shared<Variable>(Variable{name, Tensor::Zeros({2})});
  CHECK(Raises(ErrorCode::kCheckpointMissingVariable, [&] { RestoreIntoVars(ck, &extra); }));
}

TEST_CASE("same-step rewrite replaces the file atomically") {
  TempDir dir("rewrite");
  Rng rng(15);
  VarMap a = RandomVars(rng, 2);
  SaveCheckpoint(dir.path(), 7, a);
  VarMap b;
  for (const auto& [name, cell] : a) {
    b[name] = std::make_shared<Variable>(
        Variable{name, Tensor::Zeros(cell->value.shape(), cell->value.dtype())});
  }
  SaveCheckpoint(dir.path(), 7, b);
  auto latest = LatestCheckpoint(dir.path());
  REQUIRE(latest.has_value());
  Checkpoint ck = RestoreCheckpoint(latest->second);
  for (const auto& [name, cell] : b) CHECK(*ck.Find(name) == cell->value);
}

}  // namespace
}  // namespace lark
