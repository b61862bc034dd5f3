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
#include <map>
#include <string>
#include <vector>

#include "lark/error.h"

namespace lark {

// Greedy variable placement: each variable goes to the parameter server with
// the least bytes allocated so far (ties to the lowest index). Assignments
// are immutable once made; replaying the same sequence reproduces them.
class PlacementState {
 public:
  explicit PlacementState(int num_ps);

  int Place(const std::string& name, int64_t byte_size);

  int AssignmentOf(const std::string& name) const;  // -1 when unplaced
  const std::vector<int64_t>& allocated_bytes() const { return allocated_; }

 private:
  std::vector<int64_t> allocated_;
  std::map<std::string, int> assignment_;
};

}  // namespace lark
