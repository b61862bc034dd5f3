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

#include "lark/cli.h"

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "lark/flags.h"
#include "lark/registry.h"
#include "lark/runners.h"
#include "lark/toy_tasks.h"

namespace lark {

namespace {

std::atomic<bool> g_interrupted{false};

void HandleSignal(int) { g_interrupted.store(true); }

}  // namespace

int TrainerMain(const std::vector<std::string>& args) {
  RegisterToyTasks();

  CLI::App app{"lark trainer"};
  std::string model, logdir, mode = "train_local", job = "all";
  std::string override_spec, override_file;
  int workers = 1, ps = 1;
  bool enable_asserts = true, enable_check_numerics = true, list_models = false;
  int64_t checkpoint_every = 100;

  app.add_option("--model", model, "registered model key, e.g. toy.copy.CopyLstm");
  app.add_option("--logdir", logdir, "log directory for checkpoints and summaries");
  app.add_option("--mode", mode, "train_local, train_sync, or train_async")
      ->check(CLI::IsMember({"train_local", "train_sync", "train_async"}));
  app.add_option("--job", job, "all, controller, trainer, evaler, or decoder")
      ->check(CLI::IsMember({"all", "controller", "trainer", "evaler", "decoder"}));
  app.add_option("--workers", workers, "worker count (sync/async)");
  app.add_option("--ps", ps, "parameter server count (async)");
  app.add_option("--model_params_override", override_spec,
                 "semicolon-separated dotted.path=value assignments");
  app.add_option("--model_params_file_override", override_file,
                 "file of assignments, applied before the inline override");
  app.add_option("--enable_asserts", enable_asserts, "");
  app.add_option("--enable_check_numerics", enable_check_numerics, "");
  app.add_option("--checkpoint_every_steps", checkpoint_every, "");
  app.add_flag("--list_models", list_models, "print registered model keys and exit");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  SetAssertsEnabled(enable_asserts);
  SetCheckNumericsEnabled(enable_check_numerics);

  if (list_models) {
    for (const std::string& key : ModelRegistry::Global().ListModels()) {
      std::cout << key << "\n";
    }
    return 0;
  }

  if (model.empty() || logdir.empty()) {
    std::cerr << "--model and --logdir are required\n";
    return 1;
  }

  Params model_params;
  std::map<std::string, Params> eval_params;
  ClusterSpec spec;
  try {
    ModelRegistry& registry = ModelRegistry::Global();
    auto resolve = [&](Dataset dataset) {
      Params p = registry.GetModelParams(model, dataset, "");
      if (!override_file.empty()) p.ApplyOverridesFromFile(override_file);
      p.ApplyOverrides(override_spec);
      return p;
    };
    model_params = resolve(Dataset::kTrain);
    if (registry.HasDataset(model, Dataset::kDev)) {
      eval_params.emplace("dev", resolve(Dataset::kDev));
      spec.eval_datasets.push_back("dev");
    }
    if (registry.HasDataset(model, Dataset::kTest)) {
      eval_params.emplace("test", resolve(Dataset::kTest));
      spec.eval_datasets.push_back("test");
    }

    spec.mode = mode == "train_sync"    ? ClusterSpec::Mode::kSync
                : mode == "train_async" ? ClusterSpec::Mode::kAsync
                                        : ClusterSpec::Mode::kLocal;
    spec.num_workers = spec.mode == ClusterSpec::Mode::kLocal ? 1 : workers;
    spec.num_ps = spec.mode == ClusterSpec::Mode::kAsync ? ps : 0;
    spec.logdir = logdir;
    spec.checkpoint_every_steps = checkpoint_every;
    spec.run_controller = job == "all" || job == "controller";
    spec.run_trainer = job == "all" || job == "trainer";
    spec.run_evaler = job == "all" || job == "evaler";
    spec.run_decoder = job == "all" || job == "decoder";
    spec.interrupt = &g_interrupted;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  std::signal(SIGINT, HandleSignal);
  std::signal(SIGTERM, HandleSignal);
  try {
    return RunTraining(std::move(model_params), std::move(eval_params), std::move(spec));
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
}

}  // namespace lark
