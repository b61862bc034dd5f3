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

#include <atomic>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "lark/channel.h"
#include "lark/checkpoint.h"
#include "lark/model.h"
#include "lark/placement.h"

namespace lark {

// One training deployment. All runners execute as concurrent jobs inside this
// process; trainer<->ps/worker traffic flows over in-process channels and the
// checkpoint directory is the only cross-runner state on disk, so a
// multi-process deployment is a transport swap.
struct ClusterSpec {
  enum class Mode { kLocal, kSync, kAsync };

  Mode mode = Mode::kLocal;
  int num_workers = 1;
  int num_ps = 0;  // async only; sync training has no parameter servers
  std::string logdir;
  int64_t checkpoint_every_steps = 100;
  std::vector<std::string> eval_datasets;  // one evaler+decoder pair per entry
  int64_t eval_poll_ms = 20;

  bool run_controller = true;
  bool run_trainer = true;
  bool run_evaler = true;
  bool run_decoder = true;

  // Cooperative shutdown (wired to SIGINT/SIGTERM by the CLI). The trainer
  // stops at the next step boundary and the controller writes a final
  // checkpoint on its way out.
  std::atomic<bool>* interrupt = nullptr;

  // Test hooks. on_step_applied fires after an optimizer update with the
  // just-completed step index and the master cells (single-writer modes
  // only). worker_abort simulates a worker crash.
  std::function<void(int64_t step, const VarMap& vars)> on_step_applied;
  std::function<bool(int worker_id, int64_t iteration)> worker_abort;
};

// Runs the full runner set for one model. `eval_params` maps a dataset tag
// (e.g. "dev") to the model params resolved with that dataset's input;
// evaler/decoder jobs run for every tag listed in spec.eval_datasets.
class TrainingRun {
 public:
  TrainingRun(Params model_params, std::map<std::string, Params> eval_params,
              ClusterSpec spec);
  ~TrainingRun();

  // Blocks until the run completes. Returns 0 on success, 2 on failure.
  int Run();

  int64_t global_step() const { return global_step_.load(); }
  const std::string& failure() const { return failure_; }

 private:
  struct StepEvent {
    int64_t step = 0;
    double loss = 0.0;
    double wall_seconds = 0.0;
    std::shared_ptr<std::promise<void>> checkpoint_ack;  // set when a save is due
  };

  struct PsGet {
    std::shared_ptr<std::promise<std::map<std::string, Tensor>>> reply;
  };
  struct PsApply {
    GradMap grads;
    bool advance_step = false;
    std::shared_ptr<std::promise<int64_t>> reply;  // global step after apply
  };
  struct PsRequest {
    bool is_apply = false;
    PsGet get;
    PsApply apply;
  };
  struct PsShard {
    VarMap cells;
    std::unique_ptr<Optimizer> optimizer;
    std::mutex mu;
    Channel<PsRequest> requests;
  };

  struct SyncWork {
    enum class Kind { kSetVars, kStep };
    Kind kind = Kind::kStep;
    std::map<std::string, Tensor> values;  // kSetVars
    NestedMap batch;                       // kStep
    std::string task_name;
    int64_t step = 0;
    std::shared_ptr<std::promise<GradResult>> reply;
    std::shared_ptr<std::promise<void>> ack;
  };

  void ControllerLoop();
  void LocalTrainerLoop();
  void AsyncWorkerLoop(int worker_id);
  void PsLoop(int ps_index);
  void SyncClientLoop();
  void SyncWorkerLoop(int worker_id);
  void EvalLoop(const std::string& dataset, bool decode);

  void FailRun(const std::string& what);
  bool ShouldStop() const;
  void WaitInitDone();
  void SignalInitDone();
  void SaveMasterCheckpoint(int64_t step);
  void SendStepEvent(int64_t step, double loss, double wall_seconds);
  Params WorkerInputParams(const BaseTask& task, int worker_id) const;

  Params model_params_;
  std::map<std::string, Params> eval_params_;
  ClusterSpec spec_;

  std::unique_ptr<Model> model_;  // master replica (controller/local/sync client)
  VarMap master_vars_;
  std::mutex var_mu_;  // serializes updates vs checkpoint snapshots
  int64_t max_steps_ = 0;

  std::atomic<int64_t> global_step_{0};
  std::atomic<bool> failed_{false};
  std::string failure_;

  std::mutex init_mu_;
  std::condition_variable init_cv_;
  bool init_done_ = false;

  Channel<StepEvent> events_;
  std::vector<std::unique_ptr<PsShard>> shards_;
  std::vector<std::unique_ptr<Channel<SyncWork>>> sync_channels_;
  std::atomic<int> live_trainers_{0};
};

// Convenience wrapper used by the CLI and tests: resolves nothing, just runs.
int RunTraining(Params model_params, std::map<std::string, Params> eval_params,
                ClusterSpec spec);

}  // namespace lark
