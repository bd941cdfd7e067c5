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

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "unfilter/train/config.hpp"

namespace unfilter::train {

/// Versioned binary container: magic + version, a JSON header echoing the
/// resolved config, step counter, RNG stream states and the tensor index,
/// followed by raw little-endian doubles in index order.
struct Checkpoint {
  TrainConfig config;
  int64_t step = 0;
  std::map<std::string, std::string> rng_states;
  std::map<std::string, int64_t> adam_steps;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace unfilter::train
