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

#include <sstream>

namespace lark {

namespace {

bool IsIdentifier(const std::string& key) {
  if (key.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(key[0])) && key[0] != '_') return false;
  for (char c : key) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

}  // namespace

NestedMap::NestedMap(const NestedMap& other) { *this = other; }

NestedMap& NestedMap::operator=(const NestedMap& other) {
  if (this == &other) return *this;
  entries_.clear();
  for (const auto& [key, entry] : other.entries_) {
    if (std::holds_alternative<Leaf>(entry.value)) {
      entries_[key] = Entry{std::get<Leaf>(entry.value)};
    } else {
      entries_[key] = Entry{std::make_shared<NestedMap>(
          *std::get<std::shared_ptr<NestedMap>>(entry.value))};
    }
  }
  return *this;
}

void NestedMap::Set(const std::string& key, Leaf leaf) {
  if (!IsIdentifier(key)) Fail(ErrorCode::kInvalidKeyName, "NestedMap key '" + key + "'");
  entries_[key] = Entry{std::move(leaf)};
}

void NestedMap::Set(const std::string& key, NestedMap sub) {
  if (!IsIdentifier(key)) Fail(ErrorCode::kInvalidKeyName, "NestedMap key '" + key + "'");
  entries_[key] = Entry{std::make_shared<NestedMap>(std::move(sub))};
}

bool NestedMap::Has(const std::string& key) const { return entries_.count(key) > 0; }

bool NestedMap::IsSub(const std::string& key) const {
  auto it = entries_.find(key);
  return it != entries_.end() &&
         std::holds_alternative<std::shared_ptr<NestedMap>>(it->second.value);
}

const NestedMap::Leaf& NestedMap::leaf(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) Fail(ErrorCode::kUnknownKey, "NestedMap key '" + key + "'");
  if (!std::holds_alternative<Leaf>(it->second.value)) {
    Fail(ErrorCode::kTypeMismatch, "key '" + key + "' holds a submap, not a leaf");
  }
  return std::get<Leaf>(it->second.value);
}

const NestedMap& NestedMap::sub(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) Fail(ErrorCode::kUnknownKey, "NestedMap key '" + key + "'");
  if (!std::holds_alternative<std::shared_ptr<NestedMap>>(it->second.value)) {
    Fail(ErrorCode::kTypeMismatch, "key '" + key + "' holds a leaf, not a submap");
  }
  return *std::get<std::shared_ptr<NestedMap>>(it->second.value);
}

const Tensor& NestedMap::tensor(const std::string& key) const {
  const Leaf& l = leaf(key);
  if (!std::holds_alternative<Tensor>(l)) {
    Fail(ErrorCode::kTypeMismatch, "key '" + key + "' is not a Tensor leaf");
  }
  return std::get<Tensor>(l);
}

double NestedMap::scalar(const std::string& key) const {
  const Leaf& l = leaf(key);
  if (std::holds_alternative<double>(l)) return std::get<double>(l);
  if (std::holds_alternative<int64_t>(l)) return static_cast<double>(std::get<int64_t>(l));
  Fail(ErrorCode::kTypeMismatch, "key '" + key + "' is not a scalar leaf");
}

int64_t NestedMap::integer(const std::string& key) const {
  const Leaf& l = leaf(key);
  if (!std::holds_alternative<int64_t>(l)) {
    Fail(ErrorCode::kTypeMismatch, "key '" + key + "' is not an integer leaf");
  }
  return std::get<int64_t>(l);
}

const std::string& NestedMap::text(const std::string& key) const {
  const Leaf& l = leaf(key);
  if (!std::holds_alternative<std::string>(l)) {
    Fail(ErrorCode::kTypeMismatch, "key '" + key + "' is not a text leaf");
  }
  return std::get<std::string>(l);
}

const VarRef& NestedMap::var(const std::string& key) const {
  const Leaf& l = leaf(key);
  if (!std::holds_alternative<VarRef>(l)) {
    Fail(ErrorCode::kTypeMismatch, "key '" + key + "' is not a variable leaf");
  }
  return std::get<VarRef>(l);
}

const NestedMap* NestedMap::Descend(const std::string& path, std::string* last) const {
  const NestedMap* m = this;
  size_t start = 0;
  while (true) {
    size_t dot = path.find('.', start);
    if (dot == std::string::npos) {
      *last = path.substr(start);
      return m;
    }
    m = &m->sub(path.substr(start, dot - start));
    start = dot + 1;
  }
}

const NestedMap::Leaf& NestedMap::LeafAt(const std::string& path) const {
  std::string last;
  const NestedMap* m = Descend(path, &last);
  return m->leaf(last);
}

const Tensor& NestedMap::TensorAt(const std::string& path) const {
  std::string last;
  const NestedMap* m = Descend(path, &last);
  return m->tensor(last);
}

const NestedMap& NestedMap::SubAt(const std::string& path) const {
  std::string last;
  const NestedMap* m = Descend(path, &last);
  return m->sub(last);
}

std::vector<std::string> NestedMap::Keys() const {
  std::vector<std::string> keys;
  keys.reserve(entries_.size());
  for (const auto& [key, entry] : entries_) keys.push_back(key);
  return keys;
}

void NestedMap::FlattenInto(const std::string& prefix,
                            std::vector<std::pair<std::string, Leaf>>* out) const {
  for (const auto& [key, entry] : entries_) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (std::holds_alternative<Leaf>(entry.value)) {
      out->emplace_back(path, std::get<Leaf>(entry.value));
    } else {
      std::get<std::shared_ptr<NestedMap>>(entry.value)->FlattenInto(path, out);
    }
  }
}

std::vector<std::pair<std::string, NestedMap::Leaf>> NestedMap::Flatten() const {
  std::vector<std::pair<std::string, Leaf>> out;
  FlattenInto("", &out);
  return out;
}

NestedMap NestedMap::Pack(const NestedMap& structure, const std::vector<Leaf>& leaves) {
  size_t next = 0;
  NestedMap out = structure.MapLeaves([&](const std::string&, const Leaf&) -> Leaf {
    if (next >= leaves.size()) {
      Fail(ErrorCode::kLengthMismatch, "pack: too few leaves for structure");
    }
    return leaves[next++];
  });
  if (next != leaves.size()) {
    Fail(ErrorCode::kLengthMismatch,
         "pack: " + std::to_string(leaves.size()) + " leaves for a structure of " +
             std::to_string(next));
  }
  return out;
}

NestedMap NestedMap::MapLeaves(
    const std::function<Leaf(const std::string& path, const Leaf&)>& fn) const {
  // Iterate in flatten order so that Pack substitution is well-defined.
  NestedMap out;
  for (const auto& [key, entry] : entries_) {
    if (std::holds_alternative<Leaf>(entry.value)) {
      out.Set(key, fn(key, std::get<Leaf>(entry.value)));
    } else {
      const NestedMap& child = *std::get<std::shared_ptr<NestedMap>>(entry.value);
      out.Set(key, child.MapLeaves([&, k = key](const std::string& path, const Leaf& l) {
        return fn(k + "." + path, l);
      }));
    }
  }
  return out;
}

NestedMap NestedMap::MapLeaves(const std::function<Leaf(const Leaf&)>& fn) const {
  return MapLeaves([&](const std::string&, const Leaf& l) { return fn(l); });
}

bool NestedMap::SameStructure(const NestedMap& a, const NestedMap& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  auto ia = a.entries_.begin();
  auto ib = b.entries_.begin();
  for (; ia != a.entries_.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    const bool sub_a = std::holds_alternative<std::shared_ptr<NestedMap>>(ia->second.value);
    const bool sub_b = std::holds_alternative<std::shared_ptr<NestedMap>>(ib->second.value);
    if (sub_a != sub_b) return false;
    if (sub_a && !SameStructure(*std::get<std::shared_ptr<NestedMap>>(ia->second.value),
                                *std::get<std::shared_ptr<NestedMap>>(ib->second.value))) {
      return false;
    }
  }
  return true;
}

namespace {
bool LeafEquals(const NestedMap::Leaf& a, const NestedMap::Leaf& b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      [&](const auto& va) {
        using T = std::decay_t<decltype(va)>;
        return va == std::get<T>(b);
      },
      a);
}
}  // namespace

bool NestedMap::operator==(const NestedMap& other) const {
  if (!SameStructure(*this, other)) return false;
  auto fa = Flatten();
  auto fb = other.Flatten();
  for (size_t i = 0; i < fa.size(); ++i) {
    if (!LeafEquals(fa[i].second, fb[i].second)) return false;
  }
  return true;
}

std::string NestedMap::ToString() const {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& [path, l] : Flatten()) {
    if (!first) os << ", ";
    first = false;
    os << path << ": ";
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Tensor>) {
            os << v.ToString();
          } else if constexpr (std::is_same_v<T, VarRef>) {
            os << "var(" << (v ? v->name : "null") << ")";
          } else {
            os << v;
          }
        },
        l);
  }
  os << "}";
  return os.str();
}

}  // namespace lark
