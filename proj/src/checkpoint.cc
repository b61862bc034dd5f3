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

#include "lark/checkpoint.h"

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace lark {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'L', 'N', 'G', 'V'};
constexpr uint32_t kVersion = 1;

template <typename T>
void WriteRaw(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool ReadRaw(std::istream& in, T* value) {
  in.read(reinterpret_cast<char*>(value), sizeof(T));
  return in.good();
}

std::string CheckpointFileName(int64_t step) {
  return "ckpt-" + std::to_string(step) + ".lngv";
}

// Atomically replaces `path` with `content` via a temp file + rename.
void AtomicWrite(const fs::path& path, const std::string& content) {
  static std::atomic<uint64_t> counter{0};
  const fs::path tmp = path.string() + ".tmp-" + std::to_string(::getpid()) + "-" +
                       std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorCode::kIoError, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) Fail(ErrorCode::kIoError, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) Fail(ErrorCode::kIoError, "rename to '" + path.string() + "': " + ec.message());
}

}  // namespace

const Tensor* Checkpoint::Find(const std::string& name) const {
  for (const auto& [entry_name, tensor] : entries) {
    if (entry_name == name) return &tensor;
  }
  return nullptr;
}

std::string SaveCheckpoint(const std::string& logdir, int64_t step, const VarMap& vars) {
  std::error_code ec;
  fs::create_directories(logdir, ec);

  std::ostringstream body;
  body.write(kMagic, 4);
  WriteRaw(body, kVersion);
  WriteRaw(body, static_cast<uint64_t>(vars.size()));
  for (const auto& [name, cell] : vars) {  // VarMap iterates sorted by name
    const Tensor& value = cell->value;
    WriteRaw(body, static_cast<uint32_t>(name.size()));
    body.write(name.data(), static_cast<std::streamsize>(name.size()));
    WriteRaw(body, static_cast<uint8_t>(value.dtype()));
    WriteRaw(body, static_cast<uint8_t>(value.rank()));
    for (int64_t d : value.shape()) WriteRaw(body, static_cast<uint64_t>(d));
    const std::vector<uint8_t> bytes = value.RawBytes();
    body.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
  }

  const fs::path path = fs::path(logdir) / CheckpointFileName(step);
  AtomicWrite(path, body.str());

  // The index is replaced only after the checkpoint file is in place.
  const fs::path index = fs::path(logdir) / "checkpoints.txt";
  std::string index_content;
  if (fs::exists(index)) {
    std::ifstream in(index);
    std::stringstream buffer;
    buffer << in.rdbuf();
    index_content = buffer.str();
  }
  index_content += std::to_string(step) + "\t" + CheckpointFileName(step) + "\n";
  AtomicWrite(index, index_content);
  return path.string();
}

Checkpoint RestoreCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIoError, "cannot read checkpoint '" + path + "'");

  char magic[4];
  in.read(magic, 4);
  if (!in.good() || std::memcmp(magic, kMagic, 4) != 0) {
    Fail(ErrorCode::kCorruptCheckpoint, "bad magic in '" + path + "'");
  }
  uint32_t version;
  uint64_t count;
  if (!ReadRaw(in, &version) || version != kVersion || !ReadRaw(in, &count)) {
    Fail(ErrorCode::kCorruptCheckpoint, "bad header in '" + path + "'");
  }

  Checkpoint ck;
  // The step comes from the file name; content carries only variables.
  const std::string stem = fs::path(path).stem().string();
  if (stem.rfind("ckpt-", 0) == 0) ck.step = std::atoll(stem.c_str() + 5);

  for (uint64_t i = 0; i < count; ++i) {
    uint32_t name_len;
    if (!ReadRaw(in, &name_len) || name_len > (1u << 20)) {
      Fail(ErrorCode::kCorruptCheckpoint, "bad name length in '" + path + "'");
    }
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    uint8_t dtype_code, rank;
    if (!in.good() || !ReadRaw(in, &dtype_code) || !ReadRaw(in, &rank) || dtype_code > 1) {
      Fail(ErrorCode::kCorruptCheckpoint, "bad entry header in '" + path + "'");
    }
    std::vector<int64_t> shape(rank);
    for (uint8_t d = 0; d < rank; ++d) {
      uint64_t extent;
      if (!ReadRaw(in, &extent)) {
        Fail(ErrorCode::kCorruptCheckpoint, "truncated dims in '" + path + "'");
      }
      shape[d] = static_cast<int64_t>(extent);
    }
    const DType dtype = static_cast<DType>(dtype_code);
    const size_t byte_len = static_cast<size_t>(NumElements(shape)) * DTypeSize(dtype);
    std::vector<uint8_t> bytes(byte_len);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(byte_len));
    if (static_cast<size_t>(in.gcount()) != byte_len) {
      Fail(ErrorCode::kCorruptCheckpoint, "truncated data in '" + path + "'");
    }
    ck.entries.emplace_back(std::move(name), Tensor::FromRawBytes(std::move(shape), dtype, bytes));
  }
  return ck;
}

std::optional<std::pair<int64_t, std::string>> LatestCheckpoint(const std::string& logdir) {
  const fs::path index = fs::path(logdir) / "checkpoints.txt";
  std::ifstream in(index);
  if (!in) return std::nullopt;
  std::optional<std::pair<int64_t, std::string>> best;
  std::string line;
  while (std::getline(in, line)) {
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) continue;
    const int64_t step = std::atoll(line.substr(0, tab).c_str());
    const std::string file = (fs::path(logdir) / line.substr(tab + 1)).string();
    if (!best.has_value() || step > best->first) best = {step, file};
  }
  return best;
}

void RestoreIntoVars(const Checkpoint& checkpoint, VarMap* vars) {
  for (auto& [name, cell] : *vars) {
    const Tensor* entry = checkpoint.Find(name);
    if (entry == nullptr) {
      Fail(ErrorCode::kCheckpointMissingVariable, "'" + name + "'");
    }
    if (entry->shape() != cell->value.shape() || entry->dtype() != cell->value.dtype()) {
      Fail(ErrorCode::kShapeMismatch,
           "'" + name + "': checkpoint " + ShapeToString(entry->shape()) + ", variable " +
               ShapeToString(cell->value.shape()));
    }
    cell->value = *entry;
  }
}

}  // namespace lark
