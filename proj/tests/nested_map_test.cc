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

#include "lark/nested_map.h"

#include "doctest.h"
#include "test_util.h"

namespace lark {
namespace {

using testing::Raises;

TEST_CASE("flatten is depth-first and key-sorted") {
  NestedMap inner;
  inner.Set("c", int64_t{2});
  NestedMap m;
  m.Set("a", int64_t{1});
  m.Set("b", inner);
  auto flat = m.Flatten();
  REQUIRE(flat.size() == 2);
  CHECK(flat[0].first == "a");
  CHECK(std::get<int64_t>(flat[0].second) == 1);
  CHECK(flat[1].first == "b.c");
  CHECK(std::get<int64_t>(flat[1].second) == 2);

  CHECK(NestedMap().Flatten().empty());
}

TEST_CASE("pack substitutes leaves in flatten order") {
  NestedMap inner;
  inner.Set("c", int64_t{0});
  NestedMap tmpl;
  tmpl.Set("a", int64_t{0});
  tmpl.Set("b", inner);

  NestedMap packed = NestedMap::Pack(tmpl, {NestedMap::Leaf(int64_t{7}),
                                            NestedMap::Leaf(int64_t{8})});
  CHECK(packed.integer("a") == 7);
  CHECK(packed.sub("b").integer("c") == 8);

  CHECK(Raises(ErrorCode::kLengthMismatch, [&] { NestedMap::Pack(tmpl, {}); }));

  // pack(m, flatten(m).leaves) == m
  std::vector<NestedMap::Leaf> leaves;
  for (auto& [path, leaf] : packed.Flatten()) leaves.push_back(leaf);
  CHECK(NestedMap::Pack(packed, leaves) == packed);
}

TEST_CASE("map_leaves preserves structure") {
  NestedMap m;
  m.Set("a", int64_t{1});
  m.Set("b", int64_t{2});
  NestedMap plus = m.MapLeaves([](const NestedMap::Leaf& l) -> NestedMap::Leaf {
    return std::get<int64_t>(l) + 1;
  });
  CHECK(plus.integer("a") == 2);
  CHECK(plus.integer("b") == 3);

  NestedMap empty;
  CHECK(empty.MapLeaves([](const NestedMap::Leaf& l) { return l; }).empty());
}

NestedMap RandomTree(Rng& rng, int depth, int* counter) {
  NestedMap m;
  const int keys = 1 + static_cast<int>(rng.UniformInt(3));
  for (int i = 0; i < keys; ++i) {
    const std::string key = "k" + std::to_string(rng.UniformInt(1000));
    if (depth > 0 && rng.Uniform() < 0.4) {
      m.Set(key, RandomTree(rng, depth - 1, counter));
    } else {
      m.Set(key, static_cast<int64_t>((*counter)++));
    }
  }
  return m;
}

TEST_CASE("flatten then pack is the identity over random trees") {
  Rng rng(424242);
  for (int trial = 0; trial < 100; ++trial) {
    int counter = 0;
    NestedMap m = RandomTree(rng, 3, &counter);
    auto flat = m.Flatten();
    std::vector<NestedMap::Leaf> leaves;
    for (auto& [path, leaf] : flat) leaves.push_back(leaf);
    NestedMap packed = NestedMap::Pack(m, leaves);
    CHECK(packed == m);
    auto reflat = packed.Flatten();
    REQUIRE(reflat.size() == flat.size());
    for (size_t i = 0; i < flat.size(); ++i) {
      CHECK(reflat[i].first == flat[i].first);
      CHECK(std::get<int64_t>(reflat[i].second) == std::get<int64_t>(flat[i].second));
    }
    // structure(map_leaves(m, f)) == structure(m)
    NestedMap mapped = m.MapLeaves([](const NestedMap::Leaf& l) -> NestedMap::Leaf {
      return std::get<int64_t>(l) * 3;
    });
    CHECK(NestedMap::SameStructure(mapped, m));
  }
}

TEST_CASE("keys must be identifiers and lookups are checked") {
  NestedMap m;
  CHECK(Raises(ErrorCode::kInvalidKeyName, [&] { m.Set("bad key", int64_t{1}); }));
  CHECK(Raises(ErrorCode::kInvalidKeyName, [&] { m.Set("1abc", int64_t{1}); }));
  m.Set("x", int64_t{1});
  CHECK(Raises(ErrorCode::kUnknownKey, [&] { m.leaf("y"); }));
  CHECK(Raises(ErrorCode::kTypeMismatch, [&] { m.sub("x"); }));
}

TEST_CASE("deep copy independence") {
  NestedMap inner;
  inner.Set("v", 1.5);
  NestedMap m;
  m.Set("sub", inner);
  NestedMap copy = m;
  // Mutating the copy's subtree must not leak into the original.
  NestedMap replacement;
  replacement.Set("v", 99.0);
  copy.Set("sub", replacement);
  CHECK(m.sub("sub").scalar("v") == 1.5);
  CHECK(copy.sub("sub").scalar("v") == 99.0);
}

}  // namespace
}  // namespace lark
