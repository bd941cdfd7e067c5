// Copyright 2026 The unfilter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "unfilter/train/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace unfilter::train {

namespace {
constexpr char kMagic[8] = {'U', 'N', 'F', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kVersion = 1;
}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::ordered_json header;
  header["config"] = to_json(ckpt.config);
  header["step"] = ckpt.step;
  header["rng"] = ckpt.rng_states;
  header["adam_steps"] = ckpt.adam_steps;
  auto index = nlohmann::ordered_json::array();
  for (const auto& [name, tensor] : ckpt.tensors) {
    index.push_back({{"name", name}, {"shape", tensor.shape()}});
  }
  header["tensors"] = index;
  const std::string hs = header.dump();

  std::ofstream f(path, std::ios::binary);
  UF_CHECK(f.good(), IoError, "save_checkpoint: cannot open " + path);
  f.write(kMagic, 8);
  uint32_t version = kVersion;
  f.write(reinterpret_cast<const char*>(&version), sizeof(version));
  uint64_t hlen = hs.size();
  f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& [name, tensor] : ckpt.tensors) {
    f.write(reinterpret_cast<const char*>(tensor.data()),
            static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
  }
  UF_CHECK(f.good(), IoError, "save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  UF_CHECK(f.good(), IoError, "load_checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  UF_CHECK(f.good() && std::memcmp(magic, kMagic, 8) == 0, IoError,
           "load_checkpoint: not a checkpoint file: " + path);
  uint32_t version = 0;
  f.read(reinterpret_cast<char*>(&version), sizeof(version));
  UF_CHECK(version == kVersion, IoError,
           "load_checkpoint: unsupported version " + std::to_string(version));
  uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(hlen));
  UF_CHECK(f.good(), IoError, "load_checkpoint: truncated header");
  nlohmann::json header = nlohmann::json::parse(hs);

  Checkpoint ckpt;
  ckpt.config = train_config_from_json(header.at("config"));
  ckpt.step = header.at("step").get<int64_t>();
  ckpt.rng_states = header.at("rng").get<std::map<std::string, std::string>>();
  ckpt.adam_steps = header.at("adam_steps").get<std::map<std::string, int64_t>>();
  for (const auto& entry : header.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    std::vector<double> data(shape_numel(shape));
    f.read(reinterpret_cast<char*>(data.data()),
           static_cast<std::streamsize>(data.size() * sizeof(double)));
    UF_CHECK(f.good(), IoError, "load_checkpoint: truncated tensor " + name);
    ckpt.tensors.emplace_back(name, Tensor::from_data(shape, std::move(data)));
  }
  return ckpt;
}

}  // namespace unfilter::train
