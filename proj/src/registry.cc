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

#include <algorithm>

#include "lark/error.h"
#include "lark/model.h"

namespace lark {

const char* DatasetName(Dataset d) {
  switch (d) {
    case Dataset::kTrain: return "Train";
    case Dataset::kDev: return "Dev";
    case Dataset::kTest: return "Test";
  }
  return "?";
}

ModelRegistry& ModelRegistry::Global() {
  static auto* registry = new ModelRegistry();
  return *registry;
}

void ModelRegistry::RegisterSingle(const std::string& key, ParamsBuilder task,
                                   std::map<Dataset, ParamsBuilder> datasets) {
  if (entries_.count(key)) Fail(ErrorCode::kDuplicateModelName, "'" + key + "'");
  if (!datasets.count(Dataset::kTrain)) {
    Fail(ErrorCode::kParseError, "'" + key + "' must provide a Train dataset");
  }
  entries_[key] = Entry{false, std::move(task), std::move(datasets)};
}

void ModelRegistry::RegisterMulti(const std::string& key, ParamsBuilder model,
                                  std::map<Dataset, ParamsBuilder> datasets) {
  if (entries_.count(key)) Fail(ErrorCode::kDuplicateModelName, "'" + key + "'");
  if (!datasets.count(Dataset::kTrain)) {
    Fail(ErrorCode::kParseError, "'" + key + "' must provide a Train dataset");
  }
  entries_[key] = Entry{true, std::move(model), std::move(datasets)};
}

namespace {
size_t EditDistance(const std::string& a, const std::string& b) {
  std::vector<size_t> row(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    size_t diagonal = row[0];
    row[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      const size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1,
                         diagonal + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diagonal = up;
    }
  }
  return row[b.size()];
}
}  // namespace

const ModelRegistry::Entry& ModelRegistry::Find(const std::string& name) const {
  auto it = entries_.find(name);
  if (it != entries_.end()) return it->second;

  // Rank registered keys by edit distance for the error message.
  std::vector<std::pair<size_t, std::string>> ranked;
  for (const auto& [key, entry] : entries_) ranked.emplace_back(EditDistance(name, key), key);
  std::sort(ranked.begin(), ranked.end());
  std::string nearby;
  for (size_t i = 0; i < ranked.size() && i < 3; ++i) {
    if (!nearby.empty()) nearby += ", ";
    nearby += ranked[i].second;
  }
  Fail(ErrorCode::kUnknownModel,
       "'" + name + "'" + (nearby.empty() ? "" : "; closest keys: " + nearby));
}

bool ModelRegistry::HasModel(const std::string& name) const { return entries_.count(name); }

bool ModelRegistry::HasDataset(const std::string& name, Dataset dataset) const {
  return Find(name).datasets.count(dataset) > 0;
}

Params ModelRegistry::GetModelParams(const std::string& name, Dataset dataset,
                                     std::string_view overrides) const {
  const Entry& entry = Find(name);
  auto ds = entry.datasets.find(dataset);
  if (ds == entry.datasets.end()) {
    Fail(ErrorCode::kUnknownDataset,
         std::string(DatasetName(dataset)) + " not registered for '" + name + "'");
  }
  const Params input = ds->second();

  Params model;
  if (entry.multi) {
    model = entry.model();
    // Route each task's input params by task name.
    for (const std::string& task_name : input.Keys()) {
      model.MutableParams("task_params")
          ->MutableParams(task_name)
          ->Set("input", input.Get(task_name));
    }
  } else {
    model = SingleTaskModel::DefaultParams();
    model.Set("name", ParamValue(name));
    Params task = entry.model();
    task.Set("input", ParamValue(input));
    model.Set("task", ParamValue(std::move(task)));
  }
  model.ApplyOverrides(overrides);
  return model;
}

std::vector<std::string> ModelRegistry::ListModels() const {
  std::vector<std::string> keys;
  keys.reserve(entries_.size());
  for (const auto& [key, entry] : entries_) keys.push_back(key);
  return keys;  // std::map iterates sorted
}

void ModelRegistry::Clear() { entries_.clear(); }

}  // namespace lark
