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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lark/tensor.h"
#include "lark/variable.h"

namespace lark {

// Binary snapshot of all named variables at a global step; the sole
// coordination medium between runner jobs.
//
// File layout (little-endian): magic "LNGV", version u32 = 1, entry count
// u64, then per entry sorted by name: name length u32 + bytes, dtype code u8
// (0 = float32, 1 = float64), rank u8, dims as u64, raw element bytes.
//
// Writes go to a temp file renamed into place; the index file
// `checkpoints.txt` (lines of `step<TAB>filename`) is replaced atomically
// afterwards, so a poller never observes a partial checkpoint.
struct Checkpoint {
  int64_t step = 0;
  std::vector<std::pair<std::string, Tensor>> entries;  // sorted by name

  const Tensor* Find(const std::string& name) const;
};

// Returns the path of the written checkpoint file.
std::string SaveCheckpoint(const std::string& logdir, int64_t step, const VarMap& vars);

Checkpoint RestoreCheckpoint(const std::string& path);

// Highest step recorded in the index, or nullopt for a fresh logdir.
std::optional<std::pair<int64_t, std::string>> LatestCheckpoint(const std::string& logdir);

// Overwrites every cell in `vars` from the checkpoint entry of the same
// name. Raises CheckpointMissingVariable / ShapeMismatch.
void RestoreIntoVars(const Checkpoint& checkpoint, VarMap* vars);

}  // namespace lark
