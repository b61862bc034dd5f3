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
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace lark {

class Params;
struct LayerClass;  // see layer_registry.h

// One hyperparameter value: Null, bool, integer, real, text, list, nested
// Params, or a reference to a registered layer class. Copies are deep.
class ParamValue {
 public:
  enum class Kind { kNull, kBool, kInt, kReal, kText, kList, kParams, kLayerClass };

  ParamValue() : kind_(Kind::kNull) {}
  ParamValue(bool v) : kind_(Kind::kBool), bool_(v) {}
  ParamValue(int v) : kind_(Kind::kInt), int_(v) {}
  ParamValue(int64_t v) : kind_(Kind::kInt), int_(v) {}
  ParamValue(double v) : kind_(Kind::kReal), real_(v) {}
  ParamValue(const char* v) : kind_(Kind::kText), text_(v) {}
  ParamValue(std::string v) : kind_(Kind::kText), text_(std::move(v)) {}
  ParamValue(std::vector<ParamValue> v) : kind_(Kind::kList), list_(std::move(v)) {}
  ParamValue(Params p);
  // A null class reference still has Kind::kLayerClass; instantiate rejects it.
  ParamValue(const LayerClass* cls) : kind_(Kind::kLayerClass), cls_(cls) {}

  ParamValue(const ParamValue& other);
  ParamValue& operator=(const ParamValue& other);
  ParamValue(ParamValue&&) = default;
  ParamValue& operator=(ParamValue&&) = default;

  Kind kind() const { return kind_; }
  bool is_null() const { return kind_ == Kind::kNull; }

  bool bool_value() const;
  int64_t int_value() const;
  double real_value() const;  // accepts kInt with promotion
  const std::string& text() const;
  const std::vector<ParamValue>& list() const;
  const Params& params() const;
  Params& params();
  const LayerClass* layer_class() const;

  // Canonical single-value rendering used by Params::ToText.
  std::string Render() const;

  static const char* KindName(Kind k);

 private:
  Kind kind_;
  bool bool_ = false;
  int64_t int_ = 0;
  double real_ = 0.0;
  std::string text_;
  std::vector<ParamValue> list_;
  std::shared_ptr<Params> params_;  // deep-copied
  const LayerClass* cls_ = nullptr;
};

// Hierarchical configuration object with explicitly declared keys. Every key
// must be introduced by Define before it can be read or written; access to an
// undeclared key raises UnknownKey. Key order is definition order and is
// stable across copies; copies are deep.
class Params {
 public:
  Params() = default;
  Params(const Params&) = default;  // ParamValue copies are deep
  Params& operator=(const Params&) = default;
  Params(Params&&) = default;
  Params& operator=(Params&&) = default;

  // Declares a new key. Key names match [a-z][a-z0-9_]*. The default's kind
  // becomes the key's declared type; Null defaults accept any later value.
  Params& Define(const std::string& key, ParamValue default_value, const std::string& doc);

  // Dotted-path accessors; every path segment must be a declared key and all
  // non-final segments must hold nested Params.
  const ParamValue& Get(std::string_view path) const;
  void Set(std::string_view path, ParamValue value);

  bool Has(std::string_view path) const;

  // Typed conveniences.
  bool GetBool(std::string_view path) const { return Get(path).bool_value(); }
  int64_t GetInt(std::string_view path) const { return Get(path).int_value(); }
  double GetReal(std::string_view path) const { return Get(path).real_value(); }
  const std::string& GetText(std::string_view path) const { return Get(path).text(); }
  const Params& GetParams(std::string_view path) const { return Get(path).params(); }
  Params* MutableParams(std::string_view path);
  const LayerClass* GetLayerClass(std::string_view path) const {
    return Get(path).layer_class();
  }

  // Deep, fully independent copy (same as the copy constructor; kept as an
  // explicit operation).
  Params Copy() const { return *this; }

  // When sealed, Define raises SealedParams. Sealing is recursive. Set of an
  // existing key stays allowed; layers keep a private sealed copy.
  void Seal();
  bool sealed() const { return sealed_; }

  // Canonical text: one line per leaf, `dotted.path : value`, keys in
  // definition order depth-first.
  std::string ToText() const;

  // spec := assignment (';' assignment)*, assignment := dotted.path=literal.
  // Literals parse according to the declared type of the key; later
  // assignments win.
  void ApplyOverrides(std::string_view spec);
  // One assignment per line; blank lines and '#' comment lines are skipped.
  void ApplyOverridesFromFile(const std::string& path);

  // Keys in definition order.
  std::vector<std::string> Keys() const;
  const std::string& Doc(const std::string& key) const;

 private:
  struct Entry {
    std::string key;
    ParamValue value;
    ParamValue::Kind declared;  // kind of the default at Define time
    std::string doc;
  };

  Entry* FindEntry(std::string_view key);
  const Entry* FindEntry(std::string_view key) const;
  void ToTextInto(const std::string& prefix, std::string* out) const;
  void SetParsed(std::string_view path, std::string_view literal);

  std::vector<Entry> entries_;
  bool sealed_ = false;
};

}  // namespace lark
