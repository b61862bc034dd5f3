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

#include <string>

#include "lark/hyperparams.h"

namespace lark {

// Registers the example experiment configurations:
//   toy.copy.CopyLstm      - seq2seq copy task (LSTM enc/dec + attention)
//   toy.multi.CopyReverse  - copy + reverse tasks sharing the encoder
// Idempotent; safe to call from main and from tests.
void RegisterToyTasks();

// Writes the synthetic vocab and train/dev data files (deterministic, seeded)
// under `dir` unless they already exist, and returns the directory used.
// Passing "" uses the default location under the system temp directory. Dev
// sequences are disjoint from train sequences.
std::string EnsureToyData(const std::string& dir = "");

}  // namespace lark
