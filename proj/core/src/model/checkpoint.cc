// Copyright (c) 2026 The dualasr Authors. All Rights Reserved.
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

#include "dualasr/model/checkpoint.h"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "dualasr/errors.h"

namespace dualasr {

namespace {

constexpr char kMagic[8] = {'D', 'A', 'S', 'R', 'C', 'K', 'P', 'T'};

template <typename T>
void PutLe(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T GetLe(std::istream& is, const std::string& path) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) {
    throw FormatError("checkpoint " + path + ": truncated");
  }
  T v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void WriteCheckpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& [name, t] : ckpt.arrays) manifest.push_back({name, t.shape()});
  const nlohmann::json header = {{"config", ckpt.header.config.ToJson()},
                                 {"vocab_hash", ckpt.header.vocab_hash},
                                 {"step", ckpt.header.step},
                                 {"extra", ckpt.header.extra},
                                 {"arrays", manifest}};
  const std::string text = header.dump();
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot write checkpoint " + tmp);
    os.write(kMagic, sizeof(kMagic));
    PutLe<uint32_t>(os, kCheckpointVersion);
    PutLe<uint64_t>(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, t] : ckpt.arrays) {
      for (double v : t.data()) PutLe<uint32_t>(os, std::bit_cast<uint32_t>(static_cast<float>(v)));
    }
    if (!os) throw FormatError("error writing checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint ReadCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint " + path);
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("checkpoint " + path + ": bad magic");
  }
  const uint32_t version = GetLe<uint32_t>(is, path);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint " + path + ": unsupported version " + std::to_string(version));
  }
  const uint64_t len = GetLe<uint64_t>(is, path);
  if (len > (uint64_t{1} << 30)) throw FormatError("checkpoint " + path + ": header too large");
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) {
    throw FormatError("checkpoint " + path + ": truncated header");
  }
  Checkpoint ckpt;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
    ckpt.header.config = ModelConfig::FromJson(header.at("config"));
    ckpt.header.vocab_hash = header.at("vocab_hash");
    ckpt.header.step = header.at("step");
    if (header.contains("extra")) ckpt.header.extra = header.at("extra");
    for (const auto& entry : header.at("arrays")) {
      const std::string name = entry.at(0);
      const Shape shape = entry.at(1).get<Shape>();
      const int64_t n = NumElements(shape);
      std::vector<double> values(n);
      for (int64_t i = 0; i < n; ++i) {
        values[i] = std::bit_cast<float>(GetLe<uint32_t>(is, path));
      }
      ckpt.arrays.emplace_back(name, Tensor(shape, std::move(values), DType::kF32));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint " + path + ": " + e.what());
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw FormatError("checkpoint " + path + ": trailing bytes after arrays");
  }
  return ckpt;
}

Checkpoint SnapshotModel(const Model& model, uint64_t vocab_hash, uint64_t step) {
  Checkpoint ckpt;
  ckpt.header.config = model.config();
  ckpt.header.vocab_hash = vocab_hash;
  ckpt.header.step = step;
  for (const auto& [name, t] : model.params().params()) {
    ckpt.arrays.emplace_back(name, t.Clone());
  }
  return ckpt;
}

void RestoreModel(const Checkpoint& ckpt, Model& model) {
  const auto& params = model.params().params();
  if (params.size() != ckpt.arrays.size()) {
    throw FormatError("checkpoint has " + std::to_string(ckpt.arrays.size()) +
                      " arrays, model expects " + std::to_string(params.size()));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& [name, src] = ckpt.arrays[i];
    Tensor dst = params[i].second;
    if (name != params[i].first || src.shape() != dst.shape()) {
      throw FormatError("checkpoint array '" + name + "' " + ShapeToString(src.shape()) +
                        " does not match parameter '" + params[i].first + "' " +
                        ShapeToString(dst.shape()));
    }
    auto out = dst.mutable_data();
    auto in = src.data();
    const bool f32 = dst.dtype() == DType::kF32;
    for (size_t k = 0; k < in.size(); ++k) {
      out[k] = f32 ? static_cast<double>(static_cast<float>(in[k])) : in[k];
    }
  }
}

Model LoadModel(const std::string& path, CheckpointHeader* header) {
  Checkpoint ckpt = ReadCheckpoint(path);
  Model model(ckpt.header.config);
  RestoreModel(ckpt, model);
  if (header) *header = ckpt.header;
  return model;
}

Checkpoint AverageCheckpoints(const std::vector<Checkpoint>& ckpts) {
  if (ckpts.empty()) throw ContractError("average: no checkpoints");
  Checkpoint avg;
  avg.header = ckpts.back().header;
  const double scale = 1.0 / static_cast<double>(ckpts.size());
  for (size_t a = 0; a < ckpts[0].arrays.size(); ++a) {
    const auto& [name, first] = ckpts[0].arrays[a];
    std::vector<double> sum(first.numel(), 0.0);
    for (const Checkpoint& c : ckpts) {
      if (c.arrays.size() != ckpts[0].arrays.size() || c.arrays[a].first != name ||
          c.arrays[a].second.shape() != first.shape()) {
        throw FormatError("average: checkpoint manifests differ at '" + name + "'");
      }
      auto d = c.arrays[a].second.data();
      for (size_t i = 0; i < sum.size(); ++i) sum[i] += d[i];
    }
    for (double& v : sum) v *= scale;
    avg.arrays.emplace_back(name, Tensor(first.shape(), std::move(sum), DType::kF32));
  }
  return avg;
}

}  // namespace dualasr
