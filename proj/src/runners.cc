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

// Runner protocol notes:
//
// * The Controller owns initialization: it restores the latest checkpoint or
//   initializes fresh variables (applying init_from_checkpoint_rules), writes
//   params.txt and the step-0 checkpoint, then unblocks the training jobs.
// * Local/sync checkpoints are exact: when a step hits the checkpoint cadence
//   the trainer blocks on an ack while the controller snapshots under the
//   variable mutex. Async checkpoints are fuzzy by nature; the controller
//   snapshots shard-by-shard at the cadence and writes the final checkpoint
//   once all workers have drained.
// * Evaler/Decoder never touch training state: each builds its own is_eval
//   replica, polls the checkpoint index, and processes every step at most
//   once until the max_steps checkpoint is handled.

#include "lark/runners.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lark/flags.h"
#include "lark/input.h"
#include "lark/ops.h"

namespace lark {

namespace fs = std::filesystem;

namespace {

double NowSeconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void AppendLine(const std::string& path, const std::string& line) {
  std::ofstream out(path, std::ios::app);
  if (!out) Fail(ErrorCode::kIoError, "cannot append to '" + path + "'");
  out << line << "\n";
}

std::string SummaryLine(int64_t step, const std::string& name, double value) {
  std::ostringstream os;
  os << step << "\t" << name << "\t" << value;
  return os.str();
}

}  // namespace

TrainingRun::TrainingRun(Params model_params, std::map<std::string, Params> eval_params,
                         ClusterSpec spec)
    : model_params_(std::move(model_params)),
      eval_params_(std::move(eval_params)),
      spec_(std::move(spec)) {
  if (spec_.mode == ClusterSpec::Mode::kAsync && spec_.num_ps < 1) {
    Fail(ErrorCode::kParseError, "async training requires at least one parameter server");
  }
  if (spec_.mode == ClusterSpec::Mode::kSync && spec_.num_ps != 0) {
    Fail(ErrorCode::kParseError, "there are no parameter servers in sync training");
  }
  if (spec_.num_workers < 1) Fail(ErrorCode::kParseError, "num_workers must be >= 1");
  if (spec_.logdir.empty()) Fail(ErrorCode::kParseError, "logdir is required");
  if (spec_.checkpoint_every_steps < 1) {
    Fail(ErrorCode::kParseError, "checkpoint_every_steps must be >= 1");
  }
  if (spec_.mode == ClusterSpec::Mode::kAsync && spec_.run_trainer &&
      !spec_.run_controller) {
    Fail(ErrorCode::kParseError, "async workers need the controller's shard placement");
  }
}

TrainingRun::~TrainingRun() {
  events_.Close();
  for (auto& ch : sync_channels_) ch->Close();
  for (auto& shard : shards_) shard->requests.Close();
}

void TrainingRun::FailRun(const std::string& what) {
  bool expected = false;
  if (failed_.compare_exchange_strong(expected, true)) failure_ = what;
  events_.Close();
  for (auto& ch : sync_channels_) ch->Close();
  for (auto& shard : shards_) shard->requests.Close();
  // Drop queued messages so pending promises break and blocked peers wake.
  while (events_.TryReceive().has_value()) {
  }
  for (auto& shard : shards_) {
    while (shard->requests.TryReceive().has_value()) {
    }
  }
  SignalInitDone();  // wake anyone still waiting
}

bool TrainingRun::ShouldStop() const {
  return failed_.load() || (spec_.interrupt != nullptr && spec_.interrupt->load());
}

void TrainingRun::WaitInitDone() {
  std::unique_lock<std::mutex> lock(init_mu_);
  init_cv_.wait(lock, [&] { return init_done_; });
}

void TrainingRun::SignalInitDone() {
  std::unique_lock<std::mutex> lock(init_mu_);
  init_done_ = true;
  init_cv_.notify_all();
}

void TrainingRun::SaveMasterCheckpoint(int64_t step) {
  // Copy values under the locks, write outside them.
  VarMap snapshot;
  {
    std::unique_lock<std::mutex> lock(var_mu_);
    std::vector<std::unique_lock<std::mutex>> shard_locks;
    shard_locks.reserve(shards_.size());
    for (auto& shard : shards_) shard_locks.emplace_back(shard->mu);
    for (const auto& [name, cell] : master_vars_) {
      snapshot[name] = std::make_shared<Variable>(Variable{name, cell->value});
    }
  }
  SaveCheckpoint(spec_.logdir, step, snapshot);
}

void TrainingRun::SendStepEvent(int64_t step, double loss, double wall_seconds) {
  if (!spec_.run_controller) return;  // nobody to consume or ack
  StepEvent ev{step, loss, wall_seconds, nullptr};
  const bool due = step % spec_.checkpoint_every_steps == 0 || step >= max_steps_;
  std::shared_future<void> saved;
  if (due) {
    ev.checkpoint_ack = std::make_shared<std::promise<void>>();
    saved = ev.checkpoint_ack->get_future().share();
  }
  if (!events_.Send(std::move(ev))) return;
  if (due) {
    // Exact checkpoint content: hold the step boundary until the save lands.
    saved.wait();
  }
}

Params TrainingRun::WorkerInputParams(const BaseTask& task, int worker_id) const {
  Params p = task.input_params().Copy();
  const int64_t seed = p.GetInt("shuffle_seed");
  if (seed != 0 && worker_id > 0) {
    p.Set("shuffle_seed", ParamValue(seed + worker_id));
  }
  return p;
}

// ------------------------------ controller ------------------------------

void TrainingRun::ControllerLoop() {
  fs::create_directories(spec_.logdir);
  model_ = BuildModel(model_params_);
  master_vars_ = model_->CollectVariables();
  max_steps_ = model_->MaxSteps();

  auto latest = LatestCheckpoint(spec_.logdir);
  if (latest.has_value()) {
    RestoreIntoVars(RestoreCheckpoint(latest->second), &master_vars_);
    global_step_.store(latest->first);
  } else {
    for (BaseTask* task : model_->Tasks()) ApplyInitRules(task);
    SaveMasterCheckpoint(0);
  }

  {
    std::ofstream out(fs::path(spec_.logdir) / "params.txt", std::ios::trunc);
    if (!out) Fail(ErrorCode::kIoError, "cannot write params.txt");
    out << model_params_.ToText();
  }

  // Async shards: partition the master cells by least-bytes placement. The
  // shard optimizer applies updates sent by the workers.
  if (spec_.mode == ClusterSpec::Mode::kAsync) {
    PlacementState placement(spec_.num_ps);
    const Params& train = model_->Tasks()[0]->train_params();
    for (int i = 0; i < spec_.num_ps; ++i) {
      shards_.push_back(std::make_unique<PsShard>());
      shards_.back()->optimizer = Optimizer::Make(train);
    }
    for (const auto& [name, cell] : master_vars_) {
      const int ps = placement.Place(name, VariableByteSize(*cell));
      shards_[ps]->cells[name] = cell;
    }
  }

  SignalInitDone();
  if (!spec_.run_trainer) return;  // init + checkpoint only

  const std::string summaries = (fs::path(spec_.logdir) / "train_summaries.txt").string();
  int64_t last_saved = global_step_.load();
  while (true) {
    std::optional<StepEvent> ev = events_.Receive();
    if (!ev.has_value()) break;
    AppendLine(summaries, SummaryLine(ev->step, "loss", ev->loss));
    AppendLine(summaries, SummaryLine(ev->step, "wall_time", ev->wall_seconds));
    const bool due =
        ev->step % spec_.checkpoint_every_steps == 0 || ev->step >= max_steps_;
    if (due && ev->step > last_saved) {
      SaveMasterCheckpoint(ev->step);
      last_saved = ev->step;
    }
    if (ev->checkpoint_ack) ev->checkpoint_ack->set_value();
  }
  // Channel closed: trainers are done (or the run was interrupted). Make sure
  // the last state reached disk.
  const int64_t step = global_step_.load();
  if (step > last_saved && !failed_.load()) SaveMasterCheckpoint(step);
}

// ----------------------------- local trainer ----------------------------

void TrainingRun::LocalTrainerLoop() {
  WaitInitDone();
  if (failed_.load()) return;
  try {
    Rng sampler(MixSeed(static_cast<uint64_t>(model_params_.GetInt("random_seed")),
                        "task_sampler"));
    std::map<BaseTask*, std::unique_ptr<InputGenerator>> inputs;
    while (global_step_.load() < max_steps_ && !ShouldStop()) {
      const int64_t step = global_step_.load();
      BaseTask* task = model_->SampleTask(&sampler);
      auto& input = inputs[task];
      if (!input) input = task->MakeInput(WorkerInputParams(*task, 0));
      std::optional<NestedMap> batch = input->NextBatch();
      if (!batch.has_value()) {
        Fail(ErrorCode::kIoError, "training input exhausted (repeat=false?)");
      }
      const double t0 = NowSeconds();
      GradResult grads = task->ComputeGradients(*batch, step);
      {
        std::unique_lock<std::mutex> lock(var_mu_);
        if (!grads.grads.empty()) task->ApplyGradients(grads.grads, step);
        global_step_.store(step + 1);
      }
      if (spec_.on_step_applied) spec_.on_step_applied(step, master_vars_);
      SendStepEvent(step + 1, grads.loss, NowSeconds() - t0);
    }
  } catch (const std::exception& e) {
    FailRun(e.what());
  }
  events_.Close();
}

// -------------------------------- async ---------------------------------

void TrainingRun::PsLoop(int ps_index) {
  PsShard& shard = *shards_[ps_index];
  while (true) {
    std::optional<PsRequest> req = shard.requests.Receive();
    if (!req.has_value()) return;
    if (!req->is_apply) {
      std::map<std::string, Tensor> values;
      {
        std::unique_lock<std::mutex> lock(shard.mu);
        for (const auto& [name, cell] : shard.cells) values.emplace(name, cell->value);
      }
      req->get.reply->set_value(std::move(values));
      continue;
    }
    // Updates apply atomically per shard; the step advances on the shard
    // that carries the advance flag (the lowest-indexed one with variables).
    {
      std::unique_lock<std::mutex> lock(shard.mu);
      const Params& train = model_->Tasks()[0]->train_params();
      const double lr = ScheduleLearningRate(train, global_step_.load());
      for (const auto& [name, grad] : req->apply.grads) {
        auto it = shard.cells.find(name);
        if (it == shard.cells.end()) {
          Fail(ErrorCode::kInternal, "gradient for unplaced variable '" + name + "'");
        }
        it->second->value = shard.optimizer->Apply(name, it->second->value, grad, lr);
      }
    }
    int64_t step = global_step_.load();
    if (req->apply.advance_step) step = global_step_.fetch_add(1) + 1;
    req->apply.reply->set_value(step);
  }
}

void TrainingRun::AsyncWorkerLoop(int worker_id) {
  WaitInitDone();
  if (failed_.load()) {
    if (live_trainers_.fetch_sub(1) == 1) events_.Close();
    return;
  }
  try {
    std::unique_ptr<Model> replica = BuildModel(model_params_);
    VarMap replica_vars = replica->CollectVariables();
    Rng sampler(MixSeed(MixSeed(static_cast<uint64_t>(model_params_.GetInt("random_seed")),
                                "task_sampler"),
                        static_cast<uint64_t>(worker_id)));
    std::map<BaseTask*, std::unique_ptr<InputGenerator>> inputs;

    // name -> owning shard, from the controller's placement.
    std::map<std::string, int> shard_of;
    for (size_t i = 0; i < shards_.size(); ++i) {
      for (const auto& [name, cell] : shards_[i]->cells) shard_of[name] = static_cast<int>(i);
    }

    for (int64_t iteration = 0;; ++iteration) {
      if (ShouldStop() || global_step_.load() >= max_steps_) break;
      if (spec_.worker_abort && spec_.worker_abort(worker_id, iteration)) break;

      // Fetch current values from every shard.
      for (auto& shard : shards_) {
        PsRequest req;
        req.get.reply = std::make_shared<std::promise<std::map<std::string, Tensor>>>();
        auto future = req.get.reply->get_future();
        if (!shard->requests.Send(std::move(req))) {
          Fail(ErrorCode::kUnavailablePs, "parameter server shut down");
        }
        for (auto& [name, value] : future.get()) replica_vars.at(name)->value = value;
      }

      const int64_t step = global_step_.load();
      BaseTask* task = replica->SampleTask(&sampler);
      auto& input = inputs[task];
      if (!input) input = task->MakeInput(WorkerInputParams(*task, worker_id));
      std::optional<NestedMap> batch = input->NextBatch();
      if (!batch.has_value()) Fail(ErrorCode::kIoError, "training input exhausted");

      const double t0 = NowSeconds();
      GradResult grads = task->ComputeGradients(*batch, step);

      // Route gradients to their shards; the advance flag rides on the
      // lowest-indexed shard so the global step bumps exactly once.
      std::vector<GradMap> by_shard(shards_.size());
      for (auto& [name, grad] : grads.grads) by_shard[shard_of.at(name)].emplace(name, grad);
      int advance_shard = 0;
      int64_t new_step = step + 1;
      for (int i = static_cast<int>(shards_.size()) - 1; i >= 0; --i) {
        if (i != advance_shard && by_shard[i].empty()) continue;
        PsRequest req;
        req.is_apply = true;
        req.apply.grads = std::move(by_shard[i]);
        req.apply.advance_step = i == advance_shard;
        req.apply.reply = std::make_shared<std::promise<int64_t>>();
        auto future = req.apply.reply->get_future();
        if (!shards_[i]->requests.Send(std::move(req))) {
          Fail(ErrorCode::kUnavailablePs, "parameter server shut down");
        }
        new_step = future.get();
      }
      if (spec_.on_step_applied && spec_.num_workers == 1) {
        spec_.on_step_applied(step, master_vars_);
      }
      SendStepEvent(new_step, grads.loss, NowSeconds() - t0);
    }
  } catch (const std::exception& e) {
    FailRun(e.what());
  }
  if (live_trainers_.fetch_sub(1) == 1) {
    // Last worker out: release the parameter servers and the controller.
    for (auto& shard : shards_) shard->requests.Close();
    events_.Close();
  }
}

// -------------------------------- sync ----------------------------------

void TrainingRun::SyncWorkerLoop(int worker_id) {
  WaitInitDone();
  Channel<SyncWork>& channel = *sync_channels_[worker_id];
  if (failed_.load()) {
    channel.Close();
    return;
  }
  std::unique_ptr<Model> replica;
  VarMap replica_vars;
  try {
    replica = BuildModel(model_params_);
    replica_vars = replica->CollectVariables();
  } catch (const std::exception& e) {
    FailRun(e.what());
    channel.Close();
    return;
  }
  while (true) {
    std::optional<SyncWork> work = channel.Receive();
    if (!work.has_value()) return;
    if (work->kind == SyncWork::Kind::kSetVars) {
      for (auto& [name, value] : work->values) replica_vars.at(name)->value = value;
      work->ack->set_value();
      continue;
    }
    try {
      BaseTask* task = replica->TaskByName(work->task_name);
      // Workers do not perform variable updates and return raw (unclipped)
      // gradients; the client clips the aggregate once.
      GradResult grads = task->ComputeGradients(work->batch, work->step,
                                                /*clip=*/false);
      work->reply->set_value(std::move(grads));
    } catch (...) {
      work->reply->set_exception(std::current_exception());
    }
  }
}

void TrainingRun::SyncClientLoop() {
  WaitInitDone();
  if (failed_.load()) {
    events_.Close();
    return;
  }
  try {
    Rng sampler(MixSeed(static_cast<uint64_t>(model_params_.GetInt("random_seed")),
                        "task_sampler"));
    std::map<BaseTask*, std::unique_ptr<InputGenerator>> inputs;

    auto broadcast = [&] {
      std::map<std::string, Tensor> values;
      for (const auto& [name, cell] : master_vars_) values.emplace(name, cell->value);
      std::vector<std::future<void>> acks;
      for (auto& channel : sync_channels_) {
        SyncWork work;
        work.kind = SyncWork::Kind::kSetVars;
        work.values = values;
        work.ack = std::make_shared<std::promise<void>>();
        acks.push_back(work.ack->get_future());
        if (!channel->Send(std::move(work))) {
          Fail(ErrorCode::kWorkerFailure, "sync worker unavailable");
        }
      }
      for (auto& ack : acks) ack.wait();
    };
    broadcast();  // replicas start from the restored/initialized state

    while (global_step_.load() < max_steps_ && !ShouldStop()) {
      const int64_t step = global_step_.load();
      BaseTask* task = model_->SampleTask(&sampler);
      auto& input = inputs[task];
      if (!input) input = task->MakeInput(WorkerInputParams(*task, 0));

      const double t0 = NowSeconds();
      std::vector<std::future<GradResult>> replies;
      for (auto& channel : sync_channels_) {
        std::optional<NestedMap> batch = input->NextBatch();
        if (!batch.has_value()) Fail(ErrorCode::kIoError, "training input exhausted");
        SyncWork work;
        work.kind = SyncWork::Kind::kStep;
        work.batch = std::move(*batch);
        work.task_name = task->name();
        work.step = step;
        work.reply = std::make_shared<std::promise<GradResult>>();
        replies.push_back(work.reply->get_future());
        if (!channel->Send(std::move(work))) {
          Fail(ErrorCode::kWorkerFailure, "sync worker unavailable");
        }
      }

      // Aggregate to the weight-weighted mean gradient; any worker failure
      // aborts the step with variables untouched.
      GradMap aggregate;
      double loss_sum = 0.0, weight_sum = 0.0;
      for (auto& reply : replies) {
        GradResult part;
        try {
          part = reply.get();
        } catch (const Error&) {
          throw;
        } catch (const std::exception& e) {
          Fail(ErrorCode::kWorkerFailure, e.what());
        }
        loss_sum += part.loss * part.weight;
        weight_sum += part.weight;
        for (auto& [name, grad] : part.grads) {
          Tensor weighted = Mul(grad, Tensor::Scalar(part.weight, grad.dtype()));
          auto it = aggregate.find(name);
          if (it == aggregate.end()) {
            aggregate.emplace(name, std::move(weighted));
          } else {
            it->second = Add(it->second, weighted);
          }
        }
      }
      if (weight_sum > 0.0) {
        for (auto& [name, grad] : aggregate) {
          grad = Mul(grad, Tensor::Scalar(1.0 / weight_sum, grad.dtype()));
        }
      }
      ClipByGlobalNorm(task->train_params().GetReal("clip_gradient_norm"), &aggregate);

      {
        std::unique_lock<std::mutex> lock(var_mu_);
        if (!aggregate.empty()) task->ApplyGradients(aggregate, step);
        global_step_.store(step + 1);
      }
      if (spec_.on_step_applied) spec_.on_step_applied(step, master_vars_);
      broadcast();
      SendStepEvent(step + 1, weight_sum > 0.0 ? loss_sum / weight_sum : 0.0,
                    NowSeconds() - t0);
    }
  } catch (const std::exception& e) {
    FailRun(e.what());
  }
  for (auto& channel : sync_channels_) channel->Close();
  events_.Close();
}

// ----------------------------- evaler/decoder ---------------------------

void TrainingRun::EvalLoop(const std::string& dataset, bool decode) {
  try {
    auto it = eval_params_.find(dataset);
    if (it == eval_params_.end()) {
      Fail(ErrorCode::kUnknownDataset, "no eval params for '" + dataset + "'");
    }
    Params params = it->second.Copy();
    params.Set("is_eval", ParamValue(true));
    std::unique_ptr<Model> replica = BuildModel(params);
    VarMap replica_vars = replica->CollectVariables();
    const int64_t target_steps = replica->MaxSteps();

    const std::string file =
        (fs::path(spec_.logdir) /
         ((decode ? "decode_" : "eval_") + dataset + ".txt"))
            .string();
    std::set<int64_t> evaluated;

    while (!ShouldStop()) {
      auto latest = LatestCheckpoint(spec_.logdir);
      if (latest.has_value() && !evaluated.count(latest->first)) {
        RestoreIntoVars(RestoreCheckpoint(latest->second), &replica_vars);
        std::vector<NestedMap> parts;
        for (BaseTask* task : replica->Tasks()) {
          Params input_params = task->input_params().Copy();
          input_params.Set("repeat", ParamValue(false));
          input_params.Set("prefetch", ParamValue(false));
          std::unique_ptr<InputGenerator> input = task->MakeInput(input_params);
          const NestedMap theta = task->Theta();
          while (std::optional<NestedMap> batch = input->NextBatch()) {
            parts.push_back(decode ? task->DecodeBatch(theta, *batch)
                                   : task->FProp(theta, *batch));
          }
        }
        const NestedMap merged = MergeMetrics(parts);
        const std::string metric = decode ? "exact_match" : "loss";
        AppendLine(file, SummaryLine(latest->first, metric,
                                     merged.Has(metric) ? MetricValue(merged, metric) : 0.0));
        evaluated.insert(latest->first);
        if (latest->first >= target_steps) break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(spec_.eval_poll_ms));
    }
  } catch (const std::exception& e) {
    FailRun(e.what());
  }
}

// --------------------------------- run ----------------------------------

int TrainingRun::Run() {
  live_trainers_.store(spec_.mode == ClusterSpec::Mode::kAsync ? spec_.num_workers : 1);

  std::vector<std::thread> threads;
  if (spec_.run_controller) {
    threads.emplace_back([this] {
      try {
        ControllerLoop();
      } catch (const std::exception& e) {
        FailRun(e.what());
      }
    });
  } else {
    // No controller in this process: initialize in place so training-side
    // jobs can run against an existing logdir.
    try {
      model_ = BuildModel(model_params_);
      master_vars_ = model_->CollectVariables();
      max_steps_ = model_->MaxSteps();
      auto latest = LatestCheckpoint(spec_.logdir);
      if (latest.has_value()) {
        RestoreIntoVars(RestoreCheckpoint(latest->second), &master_vars_);
        global_step_.store(latest->first);
      }
      SignalInitDone();
    } catch (const std::exception& e) {
      FailRun(e.what());
    }
  }

  if (spec_.run_trainer && !failed_.load()) {
    switch (spec_.mode) {
      case ClusterSpec::Mode::kLocal:
        threads.emplace_back([this] { LocalTrainerLoop(); });
        break;
      case ClusterSpec::Mode::kAsync:
        for (int i = 0; i < spec_.num_ps; ++i) {
          threads.emplace_back([this, i] {
            WaitInitDone();
            if (!failed_.load()) PsLoop(i);
          });
        }
        for (int w = 0; w < spec_.num_workers; ++w) {
          threads.emplace_back([this, w] { AsyncWorkerLoop(w); });
        }
        break;
      case ClusterSpec::Mode::kSync:
        for (int w = 0; w < spec_.num_workers; ++w) {
          sync_channels_.push_back(std::make_unique<Channel<SyncWork>>());
        }
        for (int w = 0; w < spec_.num_workers; ++w) {
          threads.emplace_back([this, w] { SyncWorkerLoop(w); });
        }
        threads.emplace_back([this] { SyncClientLoop(); });
        break;
    }
  }

  for (const std::string& dataset : spec_.eval_datasets) {
    if (spec_.run_evaler) {
      threads.emplace_back([this, dataset] { EvalLoop(dataset, /*decode=*/false); });
    }
    if (spec_.run_decoder) {
      threads.emplace_back([this, dataset] { EvalLoop(dataset, /*decode=*/true); });
    }
  }

  for (std::thread& t : threads) t.join();
  for (auto& shard : shards_) shard->requests.Close();
  return failed_.load() ? 2 : 0;
}

int RunTraining(Params model_params, std::map<std::string, Params> eval_params,
                ClusterSpec spec) {
  TrainingRun run(std::move(model_params), std::move(eval_params), std::move(spec));
  const int code = run.Run();
  if (code != 0) {
    std::ofstream err("/dev/stderr");
    err << "training failed: " << run.failure() << "\n";
  }
  return code;
}

}  // namespace lark
