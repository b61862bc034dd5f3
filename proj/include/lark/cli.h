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
#include <vector>

namespace lark {

// Trainer entry point. Resolves the model through the registry, applies
// overrides (file first, inline wins), writes the resolved params, and runs
// the requested runner set until max_steps or interruption.
// Exit codes: 0 clean, 1 configuration error, 2 runtime failure.
int TrainerMain(const std::vector<std::string>& args);

}  // namespace lark
