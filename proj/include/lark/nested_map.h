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
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "lark/tensor.h"
#include "lark/variable.h"

namespace lark {

// Generic tree-of-maps data carrier for batches, thetas, gradients, and
// metrics. Keys are identifiers; flatten order is depth-first with keys
// sorted at each level, so it is total and stable. Value semantics with deep
// copies; treat instances as immutable once handed off.
class NestedMap {
 public:
  using Leaf = std::variant<Tensor, VarRef, double, int64_t, std::string>;

  NestedMap() = default;
  NestedMap(const NestedMap& other);
  NestedMap& operator=(const NestedMap& other);
  NestedMap(NestedMap&&) = default;
  NestedMap& operator=(NestedMap&&) = default;

  bool empty() const { return entries_.empty(); }

  // `key` must be a single identifier. Setting an existing key replaces it.
  void Set(const std::string& key, Leaf leaf);
  void Set(const std::string& key, NestedMap sub);
  void Set(const std::string& key, Tensor t) { Set(key, Leaf(std::move(t))); }
  void Set(const std::string& key, VarRef v) { Set(key, Leaf(std::move(v))); }
  void Set(const std::string& key, double v) { Set(key, Leaf(v)); }
  void Set(const std::string& key, int64_t v) { Set(key, Leaf(v)); }
  void Set(const std::string& key, const char* v) { Set(key, Leaf(std::string(v))); }
  void Set(const std::string& key, std::string v) { Set(key, Leaf(std::move(v))); }

  bool Has(const std::string& key) const;
  bool IsSub(const std::string& key) const;
  void Remove(const std::string& key) { entries_.erase(key); }

  const Leaf& leaf(const std::string& key) const;
  const NestedMap& sub(const std::string& key) const;
  const Tensor& tensor(const std::string& key) const;
  double scalar(const std::string& key) const;  // double or int64 leaf
  int64_t integer(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  const VarRef& var(const std::string& key) const;

  // Dotted-path lookups.
  const Leaf& LeafAt(const std::string& path) const;
  const Tensor& TensorAt(const std::string& path) const;
  const NestedMap& SubAt(const std::string& path) const;

  std::vector<std::string> Keys() const;  // sorted

  // Depth-first, key-sorted traversal of leaves as (dotted path, leaf).
  std::vector<std::pair<std::string, Leaf>> Flatten() const;

  // Inverse of Flatten for a fixed structure: same tree shape as `structure`
  // with leaves substituted in flatten order. LengthMismatch when the leaf
  // count differs.
  static NestedMap Pack(const NestedMap& structure, const std::vector<Leaf>& leaves);

  NestedMap MapLeaves(const std::function<Leaf(const std::string& path, const Leaf&)>& fn) const;
  NestedMap MapLeaves(const std::function<Leaf(const Leaf&)>& fn) const;

  static bool SameStructure(const NestedMap& a, const NestedMap& b);

  bool operator==(const NestedMap& other) const;
  bool operator!=(const NestedMap& other) const { return !(*this == other); }

  std::string ToString() const;  // debug form

 private:
  struct Entry;
  using EntryMap = std::map<std::string, Entry>;

  struct Entry {
    // Subtrees are held by pointer; copies are deep.
    std::variant<Leaf, std::shared_ptr<NestedMap>> value;
  };

  void FlattenInto(const std::string& prefix,
                   std::vector<std::pair<std::string, Leaf>>* out) const;
  const NestedMap* Descend(const std::string& path, std::string* last) const;

  EntryMap entries_;
};

}  // namespace lark
