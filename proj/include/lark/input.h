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

#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lark/channel.h"
#include "lark/hyperparams.h"
#include "lark/nested_map.h"

namespace lark {

// Input generator params. file_pattern is "type:glob" with only the `text`
// reader in scope (record = line). Buckets: ascending inclusive upper bounds
// with per-bucket batch limits. shuffle_seed 0 keeps file-then-line order;
// nonzero shuffles each epoch with seed+epoch.
Params InputGeneratorParams();

// Tokenizer params: vocab_path plus the three special tokens, all of which
// must be present in the vocab file (one token per line, id = line number).
Params TokenizerParams();

// Splits "type:glob" and expands the glob to a lexicographically sorted file
// list. Raises UnknownReaderKind / NoFilesMatched.
struct FilePattern {
  std::string kind;
  std::vector<std::string> files;
};
FilePattern ParseFilePattern(const std::string& pattern);

class VocabFileTokenizer {
 public:
  static VocabFileTokenizer Load(const Params& tokenizer_params);

  std::vector<int64_t> Tokenize(const std::string& text, bool add_bos,
                                bool add_eos) const;
  std::string Detokenize(const std::vector<int64_t>& ids) const;

  int64_t vocab_size() const { return static_cast<int64_t>(tokens_.size()); }
  int64_t unk_id() const { return unk_id_; }
  int64_t bos_id() const { return bos_id_; }
  int64_t eos_id() const { return eos_id_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int64_t> ids_;
  int64_t unk_id_ = 0, bos_id_ = 0, eos_id_ = 0;
};

// Smallest bucket whose inclusive bound admits `length`; nullopt = drop.
std::optional<size_t> BucketSelect(int64_t length, const std::vector<int64_t>& bounds);

// Yields each record of each epoch exactly once, with deterministic per-epoch
// shuffling. Records carry their origin for error context.
class RecordStream {
 public:
  struct Record {
    std::string text;
    std::string file;
    int64_t line;  // 1-based
  };

  RecordStream(std::vector<std::string> files, int64_t shuffle_seed, bool repeat);

  // nullopt at end of data (repeat=false only).
  std::optional<Record> Next();

 private:
  void StartEpoch();

  std::vector<Record> records_;  // one epoch, file-then-line order
  std::vector<size_t> order_;
  size_t position_ = 0;
  int64_t shuffle_seed_;
  bool repeat_;
  int64_t epoch_ = 0;
};

// File-backed sequence input: reads records, maps each through the processing
// hook into a per-example NestedMap (rank-1 tensor leaves plus an integer
// `length` key), buckets by length, and emits batches padded to the bucket's
// upper bound. Leaves whose final key segment is "paddings" pad with 1,
// everything else pads with 0.
class InputGenerator {
 public:
  using ProcessRecordFn = std::function<NestedMap(const std::string& record)>;

  InputGenerator(const Params& input_params, ProcessRecordFn process);
  ~InputGenerator();

  // Next padded batch; nullopt at end of stream (repeat=false). With
  // prefetching enabled, batches come from the producer thread's queue.
  std::optional<NestedMap> NextBatch();

  int64_t dropped_count() const { return dropped_; }

 private:
  std::optional<NestedMap> ProduceBatch();
  NestedMap AssembleBatch(size_t bucket);

  Params params_;
  ProcessRecordFn process_;
  std::vector<int64_t> bounds_;
  std::vector<int64_t> limits_;
  RecordStream stream_;
  std::vector<std::vector<NestedMap>> buckets_;
  size_t flush_cursor_ = 0;
  bool exhausted_ = false;
  int64_t dropped_ = 0;

  // Optional producer thread feeding a bounded queue.
  std::unique_ptr<Channel<std::optional<NestedMap>>> queue_;
  std::thread producer_;
};

// Reads an integer list param such as bucket_upper_bound.
std::vector<int64_t> GetIntList(const Params& p, std::string_view path);

}  // namespace lark
