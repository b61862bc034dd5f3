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

#include "lark/input.h"

#include <glob.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "lark/rng.h"

namespace lark {

Params TokenizerParams() {
  Params p;
  p.Define("vocab_path", "", "one token per line; id = zero-based line number");
  p.Define("unk_token", "<unk>", "");
  p.Define("bos_token", "<s>", "");
  p.Define("eos_token", "</s>", "");
  return p;
}

Params InputGeneratorParams() {
  Params p;
  p.Define("file_pattern", "", "type:glob, e.g. text:/data/train-*.txt");
  p.Define("bucket_upper_bound", std::vector<ParamValue>{}, "ascending inclusive bounds");
  p.Define("bucket_batch_limit", std::vector<ParamValue>{}, "batch size per bucket");
  p.Define("tokenizer", TokenizerParams(), "");
  p.Define("shuffle_seed", int64_t{0}, "0 keeps file order; else per-epoch shuffle");
  p.Define("repeat", true, "loop epochs with re-shuffling (seed+epoch)");
  p.Define("prefetch", false, "assemble batches on a producer thread");
  p.Define("prefetch_capacity", int64_t{16}, "bounded queue size");
  return p;
}

std::vector<int64_t> GetIntList(const Params& p, std::string_view path) {
  std::vector<int64_t> out;
  for (const ParamValue& v : p.Get(path).list()) out.push_back(v.int_value());
  return out;
}

FilePattern ParseFilePattern(const std::string& pattern) {
  const size_t colon = pattern.find(':');
  if (colon == std::string::npos) {
    Fail(ErrorCode::kParseError, "file pattern '" + pattern + "' is not type:glob");
  }
  FilePattern fp;
  fp.kind = pattern.substr(0, colon);
  if (fp.kind != "text") {
    Fail(ErrorCode::kUnknownReaderKind, "'" + fp.kind + "' (only `text` is supported)");
  }
  const std::string glob_pattern = pattern.substr(colon + 1);
  ::glob_t g;
  const int rc = ::glob(glob_pattern.c_str(), 0, nullptr, &g);
  if (rc == GLOB_NOMATCH) {
    ::globfree(&g);
    Fail(ErrorCode::kNoFilesMatched, "'" + glob_pattern + "'");
  }
  if (rc != 0) {
    ::globfree(&g);
    Fail(ErrorCode::kIoError, "glob('" + glob_pattern + "') failed");
  }
  for (size_t i = 0; i < g.gl_pathc; ++i) fp.files.emplace_back(g.gl_pathv[i]);
  ::globfree(&g);
  std::sort(fp.files.begin(), fp.files.end());
  if (fp.files.empty()) Fail(ErrorCode::kNoFilesMatched, "'" + glob_pattern + "'");
  return fp;
}

VocabFileTokenizer VocabFileTokenizer::Load(const Params& p) {
  VocabFileTokenizer t;
  const std::string& path = p.GetText("vocab_path");
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIoError, "cannot read vocab file '" + path + "'");
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.ids_.emplace(line, static_cast<int64_t>(t.tokens_.size()));
    t.tokens_.push_back(line);
  }
  auto special = [&](const char* key) {
    const std::string& token = p.GetText(key);
    auto it = t.ids_.find(token);
    if (it == t.ids_.end()) {
      Fail(ErrorCode::kVocabMissingSpecialToken, "'" + token + "' not in " + path);
    }
    return it->second;
  };
  t.unk_id_ = special("unk_token");
  t.bos_id_ = special("bos_token");
  t.eos_id_ = special("eos_token");
  return t;
}

std::vector<int64_t> VocabFileTokenizer::Tokenize(const std::string& text, bool add_bos,
                                                  bool add_eos) const {
  std::vector<int64_t> out;
  if (add_bos) out.push_back(bos_id_);
  std::istringstream in(text);
  std::string token;
  while (in >> token) {
    auto it = ids_.find(token);
    out.push_back(it == ids_.end() ? unk_id_ : it->second);
  }
  if (add_eos) out.push_back(eos_id_);
  return out;
}

std::string VocabFileTokenizer::Detokenize(const std::vector<int64_t>& ids) const {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= vocab_size()) {
      Fail(ErrorCode::kIndexOutOfRange, "token id " + std::to_string(ids[i]));
    }
    if (i) out += " ";
    out += tokens_[ids[i]];
  }
  return out;
}

std::optional<size_t> BucketSelect(int64_t length, const std::vector<int64_t>& bounds) {
  for (size_t i = 0; i < bounds.size(); ++i) {
    if (length <= bounds[i]) return i;
  }
  return std::nullopt;
}

RecordStream::RecordStream(std::vector<std::string> files, int64_t shuffle_seed,
                           bool repeat)
    : shuffle_seed_(shuffle_seed), repeat_(repeat) {
  for (const std::string& file : files) {
    std::ifstream in(file);
    if (!in) Fail(ErrorCode::kIoError, "cannot read '" + file + "'");
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      ++line_no;
      records_.push_back(Record{line, file, line_no});
    }
  }
  StartEpoch();
}

void RecordStream::StartEpoch() {
  order_.resize(records_.size());
  for (size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (shuffle_seed_ != 0) {
    Rng rng(static_cast<uint64_t>(shuffle_seed_ + epoch_));
    for (size_t i = order_.size(); i > 1; --i) {
      std::swap(order_[i - 1], order_[rng.UniformInt(static_cast<int64_t>(i))]);
    }
  }
  position_ = 0;
}

std::optional<RecordStream::Record> RecordStream::Next() {
  if (records_.empty()) return std::nullopt;
  if (position_ >= order_.size()) {
    if (!repeat_) return std::nullopt;
    ++epoch_;
    StartEpoch();
  }
  return records_[order_[position_++]];
}

InputGenerator::InputGenerator(const Params& input_params, ProcessRecordFn process)
    : params_(input_params.Copy()),
      process_(std::move(process)),
      bounds_(GetIntList(params_, "bucket_upper_bound")),
      limits_(GetIntList(params_, "bucket_batch_limit")),
      stream_(ParseFilePattern(params_.GetText("file_pattern")).files,
              params_.GetInt("shuffle_seed"), params_.GetBool("repeat")) {
  if (bounds_.empty() || bounds_.size() != limits_.size()) {
    Fail(ErrorCode::kLengthMismatch, "bucket_upper_bound and bucket_batch_limit");
  }
  for (size_t i = 0; i < bounds_.size(); ++i) {
    if (bounds_[i] <= 0 || (i > 0 && bounds_[i] <= bounds_[i - 1])) {
      Fail(ErrorCode::kParseError, "bucket bounds must be ascending and positive");
    }
    if (limits_[i] <= 0) Fail(ErrorCode::kParseError, "bucket limits must be positive");
  }
  buckets_.resize(bounds_.size());
  if (params_.GetBool("prefetch")) {
    queue_ = std::make_unique<Channel<std::optional<NestedMap>>>(
        static_cast<size_t>(params_.GetInt("prefetch_capacity")));
    producer_ = std::thread([this] {
      while (true) {
        std::optional<NestedMap> batch = ProduceBatch();
        const bool end = !batch.has_value();
        if (!queue_->Send(std::move(batch))) return;
        if (end) return;
      }
    });
  }
}

InputGenerator::~InputGenerator() {
  if (queue_) queue_->Close();
  if (producer_.joinable()) producer_.join();
}

std::optional<NestedMap> InputGenerator::NextBatch() {
  if (queue_) {
    auto item = queue_->Receive();
    if (!item.has_value()) return std::nullopt;
    return *item;
  }
  return ProduceBatch();
}

std::optional<NestedMap> InputGenerator::ProduceBatch() {
  while (!exhausted_) {
    std::optional<RecordStream::Record> record = stream_.Next();
    if (!record.has_value()) {
      exhausted_ = true;
      break;
    }
    NestedMap example;
    try {
      example = process_(record->text);
    } catch (const Error& e) {
      Fail(e.code(), std::string(e.what()) + " (at " + record->file + ":" +
                         std::to_string(record->line) + ")");
    } catch (const std::exception& e) {
      Fail(ErrorCode::kParseError, std::string(e.what()) + " (at " + record->file + ":" +
                                       std::to_string(record->line) + ")");
    }
    const int64_t length = example.integer("length");
    std::optional<size_t> bucket = BucketSelect(length, bounds_);
    if (!bucket.has_value()) {
      ++dropped_;
      continue;
    }
    buckets_[*bucket].push_back(std::move(example));
    if (static_cast<int64_t>(buckets_[*bucket].size()) >= limits_[*bucket]) {
      return AssembleBatch(*bucket);
    }
  }
  // End of stream: flush remaining partial buckets in bucket order.
  while (flush_cursor_ < buckets_.size()) {
    const size_t b = flush_cursor_;
    if (buckets_[b].empty()) {
      ++flush_cursor_;
      continue;
    }
    return AssembleBatch(b);
  }
  return std::nullopt;
}

NestedMap InputGenerator::AssembleBatch(size_t bucket) {
  std::vector<NestedMap> examples = std::move(buckets_[bucket]);
  buckets_[bucket].clear();
  const int64_t batch = static_cast<int64_t>(examples.size());
  const int64_t width = bounds_[bucket];

  auto flat0 = examples[0].Flatten();
  std::vector<NestedMap::Leaf> stacked;
  for (const auto& [path, leaf0] : flat0) {
    if (path == "length") {
      stacked.push_back(leaf0);  // replaced below; placeholder keeps structure
      continue;
    }
    if (!std::holds_alternative<Tensor>(leaf0)) {
      Fail(ErrorCode::kTypeMismatch, "example leaf '" + path + "' is not a tensor");
    }
    const size_t last_dot = path.rfind('.');
    const std::string last =
        last_dot == std::string::npos ? path : path.substr(last_dot + 1);
    const double pad_value = last == "paddings" ? 1.0 : 0.0;
    const DType dtype = std::get<Tensor>(leaf0).dtype();
    std::vector<double> data(batch * width, pad_value);
    for (int64_t row = 0; row < batch; ++row) {
      const Tensor* t = nullptr;
      try {
        t = &std::get<Tensor>(examples[row].LeafAt(path));
      } catch (const Error&) {
        Fail(ErrorCode::kTypeMismatch, "examples disagree on structure at '" + path + "'");
      }
      if (t->rank() != 1 || t->dim(0) > width) {
        Fail(ErrorCode::kShapeMismatch, "example leaf '" + path + "' has shape " +
                                            ShapeToString(t->shape()) + ", bucket width " +
                                            std::to_string(width));
      }
      for (int64_t i = 0; i < t->dim(0); ++i) data[row * width + i] = t->data()[i];
    }
    stacked.push_back(Tensor::FromVector({batch, width}, std::move(data), dtype));
  }
  NestedMap out = NestedMap::Pack(examples[0], stacked);
  // `length` served bucketing; the paddings masks carry it from here.
  out.Remove("length");
  return out;
}

}  // namespace lark
