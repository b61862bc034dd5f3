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

#include "lark/placement.h"

namespace lark {

PlacementState::PlacementState(int num_ps) {
  LARK_CHECK(num_ps >= 1);
  allocated_.assign(num_ps, 0);
}

int PlacementState::Place(const std::string& name, int64_t byte_size) {
  LARK_CHECK(byte_size > 0);
  if (assignment_.count(name)) {
    Fail(ErrorCode::kDuplicateVariable, "'" + name + "' already placed");
  }
  int best = 0;
  for (int i = 1; i < static_cast<int>(allocated_.size()); ++i) {
    if (allocated_[i] < allocated_[best]) best = i;
  }
  allocated_[best] += byte_size;
  assignment_[name] = best;
  return best;
}

int PlacementState::AssignmentOf(const std::string& name) const {
  auto it = assignment_.find(name);
  return it == assignment_.end() ? -1 : it->second;
}

}  // namespace lark
