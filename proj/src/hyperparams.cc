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

#include <charconv>
#include <cstdlib>
#include <fstream>

#include "lark/error.h"
#include "lark/layer_registry.h"

namespace lark {

namespace {

bool IsParamKey(std::string_view key) {
  if (key.empty()) return false;
  if (key[0] < 'a' || key[0] > 'z') return false;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

std::string RenderReal(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string QuoteText(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += "\"";
  return out;
}

std::string UnquoteText(std::string_view s) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') return std::string(s);
  std::string out;
  for (size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\' && i + 2 < s.size()) {
      ++i;
      switch (s[i]) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: out += s[i];
      }
    } else {
      out += s[i];
    }
  }
  return out;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool ParseIntLiteral(std::string_view text, int64_t* out) {
  if (text.empty()) return false;
  auto r = std::from_chars(text.data(), text.data() + text.size(), *out);
  return r.ec == std::errc() && r.ptr == text.data() + text.size();
}

bool ParseRealLiteral(std::string_view text, double* out) {
  if (text.empty()) return false;
  std::string buf(text);
  char* end = nullptr;
  *out = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size();
}

bool ParseBoolLiteral(std::string_view text, bool* out) {
  if (text == "true" || text == "True") {
    *out = true;
    return true;
  }
  if (text == "false" || text == "False") {
    *out = false;
    return true;
  }
  return false;
}

}  // namespace

ParamValue::ParamValue(Params p)
    : kind_(Kind::kParams), params_(std::make_shared<Params>(std::move(p))) {}

ParamValue::ParamValue(const ParamValue& other) { *this = other; }

ParamValue& ParamValue::operator=(const ParamValue& other) {
  if (this == &other) return *this;
  kind_ = other.kind_;
  bool_ = other.bool_;
  int_ = other.int_;
  real_ = other.real_;
  text_ = other.text_;
  list_ = other.list_;
  cls_ = other.cls_;
  params_ = other.params_ ? std::make_shared<Params>(*other.params_) : nullptr;
  return *this;
}

const char* ParamValue::KindName(Kind k) {
  switch (k) {
    case Kind::kNull: return "null";
    case Kind::kBool: return "bool";
    case Kind::kInt: return "int";
    case Kind::kReal: return "real";
    case Kind::kText: return "text";
    case Kind::kList: return "list";
    case Kind::kParams: return "params";
    case Kind::kLayerClass: return "layer_class";
  }
  return "?";
}

namespace {
[[noreturn]] void WrongKind(ParamValue::Kind have, ParamValue::Kind want) {
  Fail(ErrorCode::kTypeMismatch, std::string("value is ") + ParamValue::KindName(have) +
                                     ", wanted " + ParamValue::KindName(want));
}
}  // namespace

bool ParamValue::bool_value() const {
  if (kind_ != Kind::kBool) WrongKind(kind_, Kind::kBool);
  return bool_;
}

int64_t ParamValue::int_value() const {
  if (kind_ != Kind::kInt) WrongKind(kind_, Kind::kInt);
  return int_;
}

double ParamValue::real_value() const {
  if (kind_ == Kind::kInt) return static_cast<double>(int_);
  if (kind_ != Kind::kReal) WrongKind(kind_, Kind::kReal);
  return real_;
}

const std::string& ParamValue::text() const {
  if (kind_ != Kind::kText) WrongKind(kind_, Kind::kText);
  return text_;
}

const std::vector<ParamValue>& ParamValue::list() const {
  if (kind_ != Kind::kList) WrongKind(kind_, Kind::kList);
  return list_;
}

const Params& ParamValue::params() const {
  if (kind_ != Kind::kParams) WrongKind(kind_, Kind::kParams);
  return *params_;
}

Params& ParamValue::params() {
  if (kind_ != Kind::kParams) WrongKind(kind_, Kind::kParams);
  return *params_;
}

const LayerClass* ParamValue::layer_class() const {
  if (kind_ != Kind::kLayerClass) WrongKind(kind_, Kind::kLayerClass);
  return cls_;
}

std::string ParamValue::Render() const {
  switch (kind_) {
    case Kind::kNull: return "None";
    case Kind::kBool: return bool_ ? "True" : "False";
    case Kind::kInt: return std::to_string(int_);
    case Kind::kReal: return RenderReal(real_);
    case Kind::kText: return QuoteText(text_);
    case Kind::kList: {
      std::string out = "[";
      for (size_t i = 0; i < list_.size(); ++i) {
        if (i) out += ", ";
        out += list_[i].Render();
      }
      return out + "]";
    }
    case Kind::kParams: return "{...}";  // nested params render via ToText lines
    case Kind::kLayerClass: return cls_ ? LayerClassName(cls_) : "None";
  }
  return "?";
}

Params::Entry* Params::FindEntry(std::string_view key) {
  for (Entry& e : entries_) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

const Params::Entry* Params::FindEntry(std::string_view key) const {
  for (const Entry& e : entries_) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

Params& Params::Define(const std::string& key, ParamValue default_value,
                       const std::string& doc) {
  if (sealed_) Fail(ErrorCode::kSealedParams, "define '" + key + "' on sealed params");
  if (!IsParamKey(key)) Fail(ErrorCode::kInvalidKeyName, "'" + key + "'");
  if (FindEntry(key) != nullptr) Fail(ErrorCode::kDuplicateKey, "'" + key + "'");
  const ParamValue::Kind declared = default_value.kind();
  entries_.push_back(Entry{key, std::move(default_value), declared, doc});
  return *this;
}

const ParamValue& Params::Get(std::string_view path) const {
  const size_t dot = path.find('.');
  const std::string_view head = path.substr(0, dot);
  const Entry* e = FindEntry(head);
  if (e == nullptr) {
    Fail(ErrorCode::kUnknownKey, "'" + std::string(head) +
                                     "' (while resolving '" + std::string(path) + "')");
  }
  if (dot == std::string_view::npos) return e->value;
  if (e->value.kind() != ParamValue::Kind::kParams) {
    Fail(ErrorCode::kTypeMismatch,
         "'" + std::string(head) + "' is not nested Params in '" + std::string(path) + "'");
  }
  return e->value.params().Get(path.substr(dot + 1));
}

bool Params::Has(std::string_view path) const {
  const size_t dot = path.find('.');
  const Entry* e = FindEntry(path.substr(0, dot));
  if (e == nullptr) return false;
  if (dot == std::string_view::npos) return true;
  if (e->value.kind() != ParamValue::Kind::kParams) return false;
  return e->value.params().Has(path.substr(dot + 1));
}

void Params::Set(std::string_view path, ParamValue value) {
  const size_t dot = path.find('.');
  const std::string_view head = path.substr(0, dot);
  Entry* e = FindEntry(head);
  if (e == nullptr) {
    Fail(ErrorCode::kUnknownKey, "'" + std::string(head) +
                                     "' (while resolving '" + std::string(path) + "')");
  }
  if (dot != std::string_view::npos) {
    if (e->value.kind() != ParamValue::Kind::kParams) {
      Fail(ErrorCode::kTypeMismatch,
           "'" + std::string(head) + "' is not nested Params in '" + std::string(path) + "'");
    }
    e->value.params().Set(path.substr(dot + 1), std::move(value));
    return;
  }
  // Type check against the declared kind. Null declarations accept anything;
  // int literals promote into real keys; Null may be assigned into class keys
  // (clearing them) but not vice versa.
  const ParamValue::Kind want = e->declared;
  const ParamValue::Kind have = value.kind();
  const bool ok = want == ParamValue::Kind::kNull || have == want ||
                  (want == ParamValue::Kind::kReal && have == ParamValue::Kind::kInt);
  if (!ok) {
    Fail(ErrorCode::kTypeMismatch, "key '" + std::string(head) + "' declared " +
                                       ParamValue::KindName(want) + ", assigned " +
                                       ParamValue::KindName(have));
  }
  if (want == ParamValue::Kind::kReal && have == ParamValue::Kind::kInt) {
    e->value = ParamValue(value.real_value());
  } else {
    e->value = std::move(value);
  }
}

Params* Params::MutableParams(std::string_view path) {
  const size_t dot = path.find('.');
  const std::string_view head = path.substr(0, dot);
  Entry* e = FindEntry(head);
  if (e == nullptr) Fail(ErrorCode::kUnknownKey, "'" + std::string(head) + "'");
  if (e->value.kind() != ParamValue::Kind::kParams) {
    Fail(ErrorCode::kTypeMismatch, "'" + std::string(head) + "' is not nested Params");
  }
  if (dot == std::string_view::npos) return &e->value.params();
  return e->value.params().MutableParams(path.substr(dot + 1));
}

void Params::Seal() {
  sealed_ = true;
  for (Entry& e : entries_) {
    if (e.value.kind() == ParamValue::Kind::kParams) e.value.params().Seal();
  }
}

void Params::ToTextInto(const std::string& prefix, std::string* out) const {
  for (const Entry& e : entries_) {
    const std::string path = prefix.empty() ? e.key : prefix + "." + e.key;
    if (e.value.kind() == ParamValue::Kind::kParams) {
      e.value.params().ToTextInto(path, out);
    } else {
      *out += path;
      *out += " : ";
      *out += e.value.Render();
      *out += "\n";
    }
  }
}

std::string Params::ToText() const {
  std::string out;
  ToTextInto("", &out);
  return out;
}

void Params::SetParsed(std::string_view path, std::string_view literal) {
  // Resolve the declared kind first so parsing matches the key's type.
  const size_t dot = path.rfind('.');
  const Params* owner = this;
  if (dot != std::string_view::npos) {
    const ParamValue& v = Get(path.substr(0, dot));
    if (v.kind() != ParamValue::Kind::kParams) {
      Fail(ErrorCode::kTypeMismatch, "'" + std::string(path.substr(0, dot)) +
                                         "' is not nested Params");
    }
    owner = &v.params();
  }
  const std::string_view key = dot == std::string_view::npos ? path : path.substr(dot + 1);
  const Entry* e = owner->FindEntry(key);
  if (e == nullptr) Fail(ErrorCode::kUnknownKey, "'" + std::string(path) + "'");

  auto parse_error = [&](const char* what) {
    Fail(ErrorCode::kParseError, "cannot parse '" + std::string(literal) + "' as " + what +
                                     " for key '" + std::string(path) + "'");
  };

  switch (e->declared) {
    case ParamValue::Kind::kBool: {
      bool b;
      if (!ParseBoolLiteral(literal, &b)) parse_error("bool");
      Set(path, ParamValue(b));
      return;
    }
    case ParamValue::Kind::kInt: {
      int64_t i;
      if (!ParseIntLiteral(literal, &i)) parse_error("integer");
      Set(path, ParamValue(i));
      return;
    }
    case ParamValue::Kind::kReal: {
      double d;
      if (!ParseRealLiteral(literal, &d)) parse_error("real");
      Set(path, ParamValue(d));
      return;
    }
    case ParamValue::Kind::kText:
      Set(path, ParamValue(UnquoteText(literal)));
      return;
    case ParamValue::Kind::kLayerClass: {
      const LayerClass* cls = FindLayerClass(std::string(literal));
      if (cls == nullptr) parse_error("registered layer class");
      Set(path, ParamValue(cls));
      return;
    }
    case ParamValue::Kind::kNull: {
      // No declared type; infer int, then real, then bool, else text.
      int64_t i;
      double d;
      bool b;
      if (ParseIntLiteral(literal, &i)) {
        Set(path, ParamValue(i));
      } else if (ParseRealLiteral(literal, &d)) {
        Set(path, ParamValue(d));
      } else if (ParseBoolLiteral(literal, &b)) {
        Set(path, ParamValue(b));
      } else {
        Set(path, ParamValue(UnquoteText(literal)));
      }
      return;
    }
    case ParamValue::Kind::kList:
    case ParamValue::Kind::kParams:
      parse_error("overridable value (list/params keys cannot be overridden)");
  }
}

void Params::ApplyOverrides(std::string_view spec) {
  size_t start = 0;
  while (start <= spec.size()) {
    size_t semi = spec.find(';', start);
    if (semi == std::string_view::npos) semi = spec.size();
    const std::string_view assignment = Trim(spec.substr(start, semi - start));
    start = semi + 1;
    if (assignment.empty()) continue;
    const size_t eq = assignment.find('=');
    if (eq == std::string_view::npos) {
      Fail(ErrorCode::kParseError, "missing '=' in override '" + std::string(assignment) + "'");
    }
    const std::string_view path = Trim(assignment.substr(0, eq));
    const std::string_view literal = Trim(assignment.substr(eq + 1));
    if (path.empty()) {
      Fail(ErrorCode::kParseError, "empty path in override '" + std::string(assignment) + "'");
    }
    SetParsed(path, literal);
  }
}

void Params::ApplyOverridesFromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIoError, "cannot read override file '" + path + "'");
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    ApplyOverrides(t);
  }
}

std::vector<std::string> Params::Keys() const {
  std::vector<std::string> keys;
  keys.reserve(entries_.size());
  for (const Entry& e : entries_) keys.push_back(e.key);
  return keys;
}

const std::string& Params::Doc(const std::string& key) const {
  const Entry* e = FindEntry(key);
  if (e == nullptr) Fail(ErrorCode::kUnknownKey, "'" + key + "'");
  return e->doc;
}

}  // namespace lark
