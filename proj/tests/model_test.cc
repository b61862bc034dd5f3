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

#include "lark/model.h"

#include <cmath>

#include "doctest.h"
#include "lark/checkpoint.h"
#include "lark/flags.h"
#include "lark/gradcheck.h"
#include "lark/layers.h"
#include "lark/ops.h"
#include "lark/registry.h"
#include "lark/seq2seq.h"
#include "lark/tape.h"
#include "lark/toy_tasks.h"
#include "test_util.h"

namespace lark {
namespace {

using testing::Raises;
using testing::TempDir;

// Minimal task over a single weight vector: nll = sum(w * x), weight = n.
// The batch carries x under "x" and a weight count under "count".
class LinearTask : public BaseTask {
 public:
  static Params DefaultParams() {
    Params p = BaseTask::TaskDefaultParams();
    p.Set("cls", ParamValue(kClass));
    p.Define("dim", int64_t{3}, "");
    return p;
  }
  static const LayerClass* kClass;
  explicit LinearTask(const Params& p) : BaseTask(p) {
    CreateVariable("w", {params().GetInt("dim")},
                   InitializerSpec{InitializerSpec::Kind::kConstant, 1.0});
  }
  TaskLoss FPropLoss(const NestedMap& theta, const NestedMap& batch) const override {
    TaskLoss out;
    out.nll = ReduceSumAll(Mul(theta.tensor("w"), batch.tensor("x")));
    out.weight = batch.tensor("count");
    out.metrics.Set("loss", MakeMetric(out.nll.scalar(), out.weight.scalar()));
    return out;
  }
};
const LayerClass* LinearTask::kClass = RegisterLayerClassOf<LinearTask>("LinearTask");

Params LinearTaskParams(const std::string& optimizer = "sgd", double lr = 0.1) {
  Params p = LinearTask::DefaultParams();
  p.Set("name", ParamValue("lin"));
  p.Set("dtype", ParamValue("float64"));
  p.Set("train.learning_rate", ParamValue(lr));
  p.Set("train.optimizer.kind", ParamValue(optimizer));
  return p;
}

NestedMap LinearBatch(std::vector<double> x, double count = 1.0) {
  NestedMap batch;
  const int64_t n = static_cast<int64_t>(x.size());
  batch.Set("x", Tensor::FromVector({n}, std::move(x)));
  batch.Set("count", Tensor::Scalar(count));
  return batch;
}

TEST_CASE("sgd step: loss 0.5*|w|^2 scales w by 1-lr") {
  // nll = sum(w * x) with x = w/2 gives d(nll/weight)/dw = w (weight 1), so
  // one SGD step at lr=0.1 maps w -> 0.9 w. x is captured pre-step.
  LinearTask task(LinearTaskParams("sgd", 0.1));
  VarRef w = task.CollectVariables().at("lin/w");
  w->value = Tensor::FromVector({3}, {2.0, -4.0, 6.0});
  // Emulate the quadratic loss by feeding x == w; grad = x.
  task.TrainStep(LinearBatch({2.0, -4.0, 6.0}), 0);
  CHECK(MaxRelError(w->value, Tensor::FromVector({3}, {1.8, -3.6, 5.4})) <= 1e-12);
}

TEST_CASE("gradient clipping caps the global norm and keeps direction") {
  Params p = LinearTaskParams();
  p.Set("train.clip_gradient_norm", ParamValue(1.0));
  LinearTask task(p);
  // grad = x / weight; choose x with norm 10.
  GradResult grads = task.ComputeGradients(LinearBatch({6.0, 8.0, 0.0}), 0);
  const Tensor& g = grads.grads.at("lin/w");
  const double norm = std::sqrt(g.data()[0] * g.data()[0] + g.data()[1] * g.data()[1] +
                                g.data()[2] * g.data()[2]);
  CHECK(std::abs(norm - 1.0) <= 1e-6);
  // Direction preserved: cosine against (6,8,0)/10.
  const double cosine = (g.data()[0] * 0.6 + g.data()[1] * 0.8) / norm;
  CHECK(std::abs(cosine - 1.0) <= 1e-6);
}

TEST_CASE("adam matches an independent scalar re-derivation") {
  Params p = LinearTaskParams("adam", 0.05);
  p.Set("dim", ParamValue(int64_t{1}));
  p.Set("train.optimizer.beta1", ParamValue(0.9));
  p.Set("train.optimizer.beta2", ParamValue(0.999));
  p.Set("train.optimizer.epsilon", ParamValue(1e-8));
  LinearTask task(p);
  VarRef w = task.CollectVariables().at("lin/w");
  w->value = Tensor::FromVector({1}, {0.7});

  // Oracle: from-scratch scalar Adam over the same gradient sequence.
  const std::vector<double> gradient_sequence = {0.3, -0.2, 0.9, 0.05, -0.6};
  double expect = 0.7, m = 0.0, v = 0.0;
  for (size_t t = 1; t <= gradient_sequence.size(); ++t) {
    const double g = gradient_sequence[t - 1];
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double m_hat = m / (1.0 - std::pow(0.9, static_cast<double>(t)));
    const double v_hat = v / (1.0 - std::pow(0.999, static_cast<double>(t)));
    expect -= 0.05 * m_hat / (std::sqrt(v_hat) + 1e-8);
  }

  for (size_t t = 0; t < gradient_sequence.size(); ++t) {
    task.TrainStep(LinearBatch({gradient_sequence[t]}), static_cast<int64_t>(t));
  }
  CHECK(std::abs(w->value.data()[0] - expect) <= 1e-10);
}

TEST_CASE("learning rate schedules") {
  Params train = TrainParams();
  train.Set("learning_rate", ParamValue(0.01));
  CHECK(ScheduleLearningRate(train, 0) == 0.01);
  CHECK(ScheduleLearningRate(train, 12345) == 0.01);

  train.Set("learning_rate", ParamValue(1.0));
  train.Set("lr_schedule.kind", ParamValue("exponential"));
  train.Set("lr_schedule.decay_rate", ParamValue(0.5));
  train.Set("lr_schedule.decay_steps", ParamValue(int64_t{10}));
  CHECK(std::abs(ScheduleLearningRate(train, 10) - 0.5) <= 1e-12);

  double last = ScheduleLearningRate(train, 0);
  for (int64_t step = 1; step <= 100; ++step) {
    const double lr = ScheduleLearningRate(train, step);
    CHECK(lr <= last + 1e-15);
    last = lr;
  }
}

TEST_CASE("numerics failure aborts the step with variables unchanged") {
  LinearTask task(LinearTaskParams());
  VarRef w = task.CollectVariables().at("lin/w");
  const Tensor before = w->value;
  CHECK(Raises(ErrorCode::kNumericsError, [&] {
    task.TrainStep(LinearBatch({1.0, std::nan(""), 2.0}), 0);
  }));
  CHECK(w->value == before);

  // With checks disabled the NaN passes through and the step completes.
  SetCheckNumericsEnabled(false);
  task.TrainStep(LinearBatch({1.0, std::nan(""), 2.0}), 0);
  SetCheckNumericsEnabled(true);
  CHECK_FALSE(w->value.AllFinite());
}

TEST_CASE("zero-weight batch contributes nothing and changes nothing") {
  LinearTask task(LinearTaskParams());
  VarRef w = task.CollectVariables().at("lin/w");
  const Tensor before = w->value;
  NestedMap metrics = task.TrainStep(LinearBatch({0.0, 0.0, 0.0}, 0.0), 0);
  CHECK(MetricWeight(metrics, "loss") == 0.0);
  CHECK(w->value == before);
}

TEST_CASE("one step changes variables iff gradients are nonzero") {
  LinearTask task(LinearTaskParams());
  VarRef w = task.CollectVariables().at("lin/w");
  const Tensor before = w->value;
  task.TrainStep(LinearBatch({0.0, 0.0, 0.0}), 0);
  CHECK(w->value == before);
  task.TrainStep(LinearBatch({1.0, 0.0, 0.0}), 1);
  CHECK_FALSE(w->value == before);
}

TEST_CASE("task sampling follows the normalized probabilities") {
  {
    Rng rng(1);
    std::vector<std::pair<std::string, double>> probs = {{"a", 1.0}, {"b", 0.0}};
    for (int i = 0; i < 100; ++i) CHECK(SampleIndex(probs, &rng) == 0);
  }
  {
    Rng rng(2);
    std::vector<std::pair<std::string, double>> probs = {{"task1", 0.5}, {"task2", 0.5}};
    int64_t first = 0;
    for (int i = 0; i < 10000; ++i) first += SampleIndex(probs, &rng) == 0 ? 1 : 0;
    CHECK(first >= 4700);
    CHECK(first <= 5300);
  }
  {
    // Unnormalized weights draw identically to their normalized form.
    Rng rng_a(3), rng_b(3);
    std::vector<std::pair<std::string, double>> unnormalized = {{"a", 2.0}, {"b", 2.0}};
    std::vector<std::pair<std::string, double>> normalized = {{"a", 0.5}, {"b", 0.5}};
    for (int i = 0; i < 1000; ++i) {
      CHECK(SampleIndex(unnormalized, &rng_a) == SampleIndex(normalized, &rng_b));
    }
  }
}

TEST_CASE("uniform-logit softmax task yields ln(V) per token") {
  Params p = SoftmaxLayer::DefaultParams();
  p.Set("name", ParamValue("sm"));
  p.Set("input_dim", ParamValue(int64_t{3}));
  p.Set("num_classes", ParamValue(int64_t{4}));
  p.Set("dtype", ParamValue("float64"));
  p.Set("params_init", ParamValue(InitializerSpec::Constant(0.0)));
  SoftmaxLayer layer(p);
  NestedMap in;
  in.Set("input", Tensor::Full({5, 3}, 0.3));
  in.Set("class_ids", Tensor::FromVector({5}, {0, 1, 2, 3, 0}));
  in.Set("class_weights", Tensor::Full({5}, 1.0));
  NestedMap out = layer.FProp(layer.Theta(), in);
  CHECK(std::abs(out.tensor("total_xent").scalar() / 5.0 - std::log(4.0)) <= 1e-9);
}

Params SmallCopyTask(const std::string& name, const std::string& data_dir,
                     const std::string& file) {
  Params p = AttentionSeq2Seq::DefaultParams();
  p.Set("name", ParamValue(name));
  p.Set("vocab_size", ParamValue(int64_t{16}));
  p.Set("embedding_dim", ParamValue(int64_t{6}));
  p.Set("hidden_dim", ParamValue(int64_t{6}));
  p.Set("attention_dim", ParamValue(int64_t{6}));
  p.Set("random_seed", ParamValue(int64_t{5}));
  p.Set("train.learning_rate", ParamValue(0.01));
  Params input = InputGeneratorParams();
  input.Set("file_pattern", ParamValue("text:" + data_dir + "/" + file));
  input.Set("bucket_upper_bound", ParamValue(std::vector<ParamValue>{int64_t{12}}));
  input.Set("bucket_batch_limit", ParamValue(std::vector<ParamValue>{int64_t{4}}));
  input.MutableParams("tokenizer")->Set("vocab_path", ParamValue(data_dir + "/vocab.txt"));
  input.Set("repeat", ParamValue(true));
  input.Set("shuffle_seed", ParamValue(int64_t{3}));
  p.Set("input", ParamValue(input));
  return p;
}

TEST_CASE("seq2seq task trains a finite first step on copy data") {
  const std::string dir = EnsureToyData();
  Params p = SmallCopyTask("copy", dir, "train_copy.txt");
  AttentionSeq2Seq task(p);
  auto input = task.MakeInput(task.input_params());
  auto batch = input->NextBatch();
  REQUIRE(batch.has_value());
  NestedMap metrics = task.TrainStep(*batch, 0);
  CHECK(std::isfinite(MetricValue(metrics, "loss")));
  CHECK(MetricValue(metrics, "loss") > 0.0);
  CHECK(MetricWeight(metrics, "loss") > 0.0);
}

TEST_CASE("padded target steps change the loss by exactly zero") {
  const std::string dir = EnsureToyData();
  Params p = SmallCopyTask("copy", dir, "train_copy.txt");
  p.Set("dtype", ParamValue("float64"));
  AttentionSeq2Seq task(p);
  auto input = task.MakeInput(task.input_params());
  auto batch = input->NextBatch();
  REQUIRE(batch.has_value());

  // Extend every tgt tensor by two fully padded timesteps.
  NestedMap tgt = batch->sub("tgt");
  NestedMap extended_tgt;
  for (const std::string& key : tgt.Keys()) {
    const Tensor& t = tgt.tensor(key);
    const double pad = key == "paddings" ? 1.0 : 0.0;
    extended_tgt.Set(key, Concat({t, Tensor::Full({t.dim(0), 2}, pad, t.dtype())}, 1));
  }
  NestedMap extended = *batch;
  extended.Set("tgt", extended_tgt);

  const NestedMap theta = task.Theta();
  TaskLoss base = task.FPropLoss(theta, *batch);
  TaskLoss more = task.FPropLoss(theta, extended);
  CHECK(base.nll == more.nll);
  CHECK(base.weight == more.weight);
}

TEST_CASE("toy copy task gradient passes the oracle end to end") {
  const std::string dir = EnsureToyData();
  Params p = SmallCopyTask("copy", dir, "train_copy.txt");
  p.Set("dtype", ParamValue("float64"));
  p.MutableParams("input")->Set("bucket_batch_limit",
                                ParamValue(std::vector<ParamValue>{int64_t{2}}));
  AttentionSeq2Seq task(p);
  auto input = task.MakeInput(task.input_params());
  auto batch = input->NextBatch();
  REQUIRE(batch.has_value());

  Tape tape;
  NestedMap grads;
  {
    TapeScope scope(&tape);
    NestedMap watched = task.Theta().MapLeaves(
        [&](const NestedMap::Leaf& l) -> NestedMap::Leaf {
          return tape.Watch(std::get<Tensor>(l));
        });
    TaskLoss loss = task.FPropLoss(watched, *batch);
    grads = Backward(tape, Div(loss.nll, loss.weight), watched);
  }
  NestedMap oracle = FiniteDifferenceGrad(
      [&](const NestedMap& theta) {
        TaskLoss loss = task.FPropLoss(theta, *batch);
        return loss.nll.scalar() / loss.weight.scalar();
      },
      task.Theta(), 1e-5);
  CHECK(MaxRelError(grads, oracle) <= 1e-5);
}

TEST_CASE("regex sharing binds encoder cells across tasks") {
  RegisterToyTasks();
  Params p = ModelRegistry::Global().GetModelParams("toy.multi.CopyReverse",
                                                    Dataset::kTrain, "");
  std::unique_ptr<Model> model = BuildModel(p);
  auto tasks = model->Tasks();
  REQUIRE(tasks.size() == 2);

  VarMap copy_vars = tasks[0]->CollectVariables();
  VarMap reverse_vars = tasks[1]->CollectVariables();
  // Encoder cells are the same objects; decoder cells are distinct.
  CHECK(copy_vars.at("copy/enc_rnn/cell/wm") ==
        reverse_vars.at("reverse/enc_rnn/cell/wm"));
  CHECK(copy_vars.at("copy/enc_emb/emb") == reverse_vars.at("reverse/enc_emb/emb"));
  CHECK_FALSE(copy_vars.at("copy/dec_cell/wm") == reverse_vars.at("reverse/dec_cell/wm"));

  // A write through one task is visible to the other.
  Tensor update = Tensor::Zeros(copy_vars.at("copy/enc_rnn/cell/wm")->value.shape(),
                                copy_vars.at("copy/enc_rnn/cell/wm")->value.dtype());
  copy_vars.at("copy/enc_rnn/cell/wm")->value = update;
  CHECK(reverse_vars.at("reverse/enc_rnn/cell/wm")->value == update);
}

TEST_CASE("sharing none keeps every cell distinct") {
  RegisterToyTasks();
  Params p = ModelRegistry::Global().GetModelParams("toy.multi.CopyReverse",
                                                    Dataset::kTrain, "");
  p.Set("sharing.kind", ParamValue("none"));
  std::unique_ptr<Model> model = BuildModel(p);
  auto tasks = model->Tasks();
  VarMap copy_vars = tasks[0]->CollectVariables();
  VarMap reverse_vars = tasks[1]->CollectVariables();
  CHECK_FALSE(copy_vars.at("copy/enc_rnn/cell/wm") ==
              reverse_vars.at("reverse/enc_rnn/cell/wm"));
}

TEST_CASE("shared encoder with mismatched shapes is rejected") {
  RegisterToyTasks();
  Params p = ModelRegistry::Global().GetModelParams("toy.multi.CopyReverse",
                                                    Dataset::kTrain, "");
  p.Set("sharing.kind", ParamValue("shared_encoder"));
  p.Set("sharing.encoder_child", ParamValue("enc_rnn"));
  p.Set("task_params.reverse.hidden_dim", ParamValue(int64_t{16}));
  p.Set("task_params.reverse.embedding_dim", ParamValue(int64_t{16}));
  p.Set("task_params.reverse.attention_dim", ParamValue(int64_t{16}));
  CHECK(Raises(ErrorCode::kSharedShapeMismatch, [&] { BuildModel(p); }));
}

TEST_CASE("init-from-checkpoint rules overwrite matching variables") {
  const std::string dir = EnsureToyData();
  TempDir logdir("initrules");

  // Train a couple of steps and checkpoint the result.
  Params p = SmallCopyTask("copy", dir, "train_copy.txt");
  AttentionSeq2Seq trained(p);
  auto input = trained.MakeInput(trained.input_params());
  for (int64_t step = 0; step < 2; ++step) {
    trained.TrainStep(*input->NextBatch(), step);
  }
  const std::string ckpt = SaveCheckpoint(logdir.path(), 2, trained.CollectVariables());

  {
    Params q = p.Copy();
    q.Set("train.init_from_checkpoint_rules",
          ParamValue(std::vector<ParamValue>{
              std::vector<ParamValue>{".*", ckpt}}));
    AttentionSeq2Seq fresh(q);
    ApplyInitRules(&fresh);
    for (auto& [name, cell] : fresh.CollectVariables()) {
      CHECK(cell->value == trained.CollectVariables().at(name)->value);
    }
  }
  {
    Params q = p.Copy();
    q.Set("train.init_from_checkpoint_rules",
          ParamValue(std::vector<ParamValue>{
              std::vector<ParamValue>{"copy/dec_.*", ckpt}}));
    AttentionSeq2Seq fresh(q);
    AttentionSeq2Seq untouched(p);
    ApplyInitRules(&fresh);
    CHECK(fresh.CollectVariables().at("copy/dec_cell/wm")->value ==
          trained.CollectVariables().at("copy/dec_cell/wm")->value);
    // Encoder keeps its fresh initialization.
    CHECK(fresh.CollectVariables().at("copy/enc_rnn/cell/wm")->value ==
          untouched.CollectVariables().at("copy/enc_rnn/cell/wm")->value);
  }
  {
    // A rule matching a variable that the checkpoint lacks.
    VarMap partial;
    auto all = trained.CollectVariables();
    partial["copy/enc_emb/emb"] = all.at("copy/enc_emb/emb");
    const std::string small_ckpt = SaveCheckpoint(logdir.path(), 3, partial);
    Params q = p.Copy();
    q.Set("train.init_from_checkpoint_rules",
          ParamValue(std::vector<ParamValue>{
              std::vector<ParamValue>{".*", small_ckpt}}));
    AttentionSeq2Seq fresh(q);
    CHECK(Raises(ErrorCode::kCheckpointMissingVariable, [&] { ApplyInitRules(&fresh); }));
  }
}

TEST_CASE("eval task loss is deterministic across repeated evaluation") {
  const std::string dir = EnsureToyData();
  Params p = SmallCopyTask("copy", dir, "dev_copy.txt");
  p.Set("is_eval", ParamValue(true));
  p.MutableParams("input")->Set("repeat", ParamValue(false));
  AttentionSeq2Seq task(p);

  auto run_once = [&] {
    auto input = task.MakeInput(task.input_params());
    std::vector<NestedMap> parts;
    const NestedMap theta = task.Theta();
    while (auto batch = input->NextBatch()) parts.push_back(task.FProp(theta, *batch));
    return MetricValue(MergeMetrics(parts), "loss");
  };
  CHECK(run_once() == run_once());
}

}  // namespace
}  // namespace lark
