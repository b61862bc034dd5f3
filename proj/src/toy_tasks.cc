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

#include "lark/toy_tasks.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "lark/registry.h"
#include "lark/rng.h"
#include "lark/seq2seq.h"

namespace lark {

namespace fs = std::filesystem;

namespace {

constexpr uint64_t kDataSeed = 20260517;
constexpr int kNumTrain = 2048;
constexpr int kNumDev = 256;
constexpr int kMinLen = 2;
constexpr int kMaxLen = 10;
const char* const kSymbols[] = {"a", "b", "c", "d", "e", "f", "g",
                                "h", "i", "j", "k", "l", "m"};

std::string ReverseWords(const std::string& s) {
  std::vector<std::string> words;
  std::string word;
  for (char c : s) {
    if (c == ' ') {
      words.push_back(word);
      word.clear();
    } else {
      word += c;
    }
  }
  words.push_back(word);
  std::reverse(words.begin(), words.end());
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += " ";
    out += words[i];
  }
  return out;
}

void WriteLines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
  for (const std::string& line : lines) out << line << "\n";
}

void GenerateToyData(const std::string& dir, uint64_t seed) {
  fs::create_directories(dir);
  const size_t num_symbols = sizeof(kSymbols) / sizeof(kSymbols[0]);

  Rng rng(seed);
  std::vector<std::string> sequences;
  std::set<std::string> seen;
  while (sequences.size() < static_cast<size_t>(kNumTrain + kNumDev)) {
    const int len = kMinLen + static_cast<int>(rng.UniformInt(kMaxLen - kMinLen + 1));
    std::string s;
    for (int i = 0; i < len; ++i) {
      if (i) s += " ";
      s += kSymbols[rng.UniformInt(static_cast<int64_t>(num_symbols))];
    }
    if (seen.insert(s).second) sequences.push_back(std::move(s));
  }

  std::vector<std::string> vocab = {"<unk>", "<s>", "</s>"};
  for (const char* symbol : kSymbols) vocab.push_back(symbol);
  WriteLines(fs::path(dir) / "vocab.txt", vocab);

  auto pairs = [&](size_t begin, size_t end, bool reverse) {
    std::vector<std::string> lines;
    for (size_t i = begin; i < end; ++i) {
      lines.push_back(sequences[i] + "\t" +
                      (reverse ? ReverseWords(sequences[i]) : sequences[i]));
    }
    return lines;
  };
  WriteLines(fs::path(dir) / "train_copy.txt", pairs(0, kNumTrain, false));
  WriteLines(fs::path(dir) / "dev_copy.txt",
             pairs(kNumTrain, kNumTrain + kNumDev, false));
  WriteLines(fs::path(dir) / "train_reverse.txt", pairs(0, kNumTrain, true));
  WriteLines(fs::path(dir) / "dev_reverse.txt",
             pairs(kNumTrain, kNumTrain + kNumDev, true));
}

Params ToyInput(const std::string& dir, const std::string& file, bool training) {
  Params p = InputGeneratorParams();
  p.Set("file_pattern", ParamValue("text:" + dir + "/" + file));
  p.Set("bucket_upper_bound", ParamValue(std::vector<ParamValue>{int64_t{12}}));
  p.Set("bucket_batch_limit",
        ParamValue(std::vector<ParamValue>{training ? int64_t{16} : int64_t{64}}));
  p.MutableParams("tokenizer")->Set("vocab_path", ParamValue(dir + "/vocab.txt"));
  p.Set("shuffle_seed", ParamValue(training ? int64_t{1} : int64_t{0}));
  p.Set("repeat", ParamValue(training));
  return p;
}

Params CopyLstmTask(const std::string& name) {
  Params p = AttentionSeq2Seq::DefaultParams();
  p.Set("name", ParamValue(name));
  p.Set("vocab_size", ParamValue(int64_t{16}));
  p.Set("embedding_dim", ParamValue(int64_t{32}));
  p.Set("hidden_dim", ParamValue(int64_t{32}));
  p.Set("attention_dim", ParamValue(int64_t{32}));
  p.Set("random_seed", ParamValue(int64_t{7}));
  p.Set("train.learning_rate", ParamValue(0.003));
  p.Set("train.optimizer.kind", ParamValue("adam"));
  p.Set("train.clip_gradient_norm", ParamValue(5.0));
  p.Set("train.max_steps", ParamValue(int64_t{3000}));
  return p;
}

}  // namespace

std::string EnsureToyData(const std::string& dir) {
  const std::string target =
      dir.empty() ? (fs::temp_directory_path() / "lark_toy_data_v1").string() : dir;
  const fs::path marker = fs::path(target) / "dev_reverse.txt";
  if (!fs::exists(marker)) GenerateToyData(target, kDataSeed);
  return target;
}

void RegisterToyTasks() {
  static const bool registered = [] {
    ModelRegistry& registry = ModelRegistry::Global();

    registry.RegisterSingle(
        "toy.copy.CopyLstm", [] { return CopyLstmTask("copy"); },
        {{Dataset::kTrain, [] { return ToyInput(EnsureToyData(), "train_copy.txt", true); }},
         {Dataset::kDev, [] { return ToyInput(EnsureToyData(), "dev_copy.txt", false); }}});

    registry.RegisterMulti(
        "toy.multi.CopyReverse",
        [] {
          Params p = MultiTaskModel::DefaultParams();
          p.Set("name", ParamValue("copy_reverse"));
          Params tasks;
          tasks.Define("copy", CopyLstmTask("copy"), "");
          tasks.Define("reverse", CopyLstmTask("reverse"), "");
          Params probs;
          probs.Define("copy", 0.5, "");
          probs.Define("reverse", 0.5, "");
          p.Set("task_params", ParamValue(tasks));
          p.Set("task_probs", ParamValue(probs));
          p.Set("sharing.kind", ParamValue("regex_shared"));
          p.Set("sharing.regexes", ParamValue(std::vector<ParamValue>{".*enc.*"}));
          return p;
        },
        {{Dataset::kTrain,
          [] {
            Params p;
            p.Define("copy", ToyInput(EnsureToyData(), "train_copy.txt", true), "");
            p.Define("reverse", ToyInput(EnsureToyData(), "train_reverse.txt", true), "");
            return p;
          }},
         {Dataset::kDev, [] {
            Params p;
            p.Define("copy", ToyInput(EnsureToyData(), "dev_copy.txt", false), "");
            p.Define("reverse", ToyInput(EnsureToyData(), "dev_reverse.txt", false), "");
            return p;
          }}});
    return true;
  }();
  (void)registered;
}

}  // namespace lark
