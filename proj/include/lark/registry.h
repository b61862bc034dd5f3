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

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lark/hyperparams.h"

namespace lark {

enum class Dataset { kTrain, kDev, kTest };
const char* DatasetName(Dataset d);

// Central experiment-configuration registry. Entries are registered under
// "<task>.<param>.<ClassName>" keys; lookups resolve the model params with
// the requested dataset's input params and apply command-line overrides.
class ModelRegistry {
 public:
  static ModelRegistry& Global();

  using ParamsBuilder = std::function<Params()>;

  // `task` builds the Task() params; lookups wrap them in a SingleTaskModel.
  // The Train dataset builder is required; Dev/Test are optional. Dataset
  // builders return the task's input params.
  void RegisterSingle(const std::string& key, ParamsBuilder task,
                      std::map<Dataset, ParamsBuilder> datasets);

  // `model` builds the Model() params (a MultiTaskModel). Dataset builders
  // return a Params with one nested input params per task name.
  void RegisterMulti(const std::string& key, ParamsBuilder model,
                     std::map<Dataset, ParamsBuilder> datasets);

  // Model params with the dataset's input substituted, then overrides
  // applied. Raises UnknownModel (listing near misses), UnknownDataset, and
  // override errors.
  Params GetModelParams(const std::string& name, Dataset dataset,
                        std::string_view overrides = "") const;

  bool HasModel(const std::string& name) const;
  bool HasDataset(const std::string& name, Dataset dataset) const;
  std::vector<std::string> ListModels() const;  // sorted

  // Test hook; the global registry is otherwise append-only.
  void Clear();

 private:
  struct Entry {
    bool multi = false;
    ParamsBuilder model;
    std::map<Dataset, ParamsBuilder> datasets;
  };

  const Entry& Find(const std::string& name) const;

  std::map<std::string, Entry> entries_;
};

}  // namespace lark
