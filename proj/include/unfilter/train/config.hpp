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

#include "unfilter/loss/losses.hpp"
#include "unfilter/nn/model.hpp"

namespace unfilter::train {

struct TrainConfig {
  // optimization
  double lr_generator = 2e-4;
  double lr_discriminator = 1e-4;
  double lr_samplers = 1e-5;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // objectives
  loss::NCEConfig nce;          // tau 0.07, gamma_c = gamma_s = 0.5
  loss::LossWeights weights;    // 0.5 / 1e-3 / 1e-3, gp 10
  // run shape (no learning-rate scheduling anywhere)
  int batch_size = 4;
  int64_t total_steps = 2000;
  uint64_t seed = 0;
  int image_size = 64;
  int num_patches = 64;
  int gram_window = 3;
  int d_updates_per_g = 1;
  int64_t checkpoint_every = 500;
  // ablation switches
  bool enable_style_nce = true;
  bool enable_identity_reg = true;
  bool enable_consistency = true;
  bool style_negative_same_location = false;

  nn::ModelConfig model;
  /// Reseeds a single named RNG stream without disturbing the others.
  std::map<std::string, uint64_t> stream_seed_overrides;

  void validate() const;
};

nlohmann::ordered_json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig load_train_config(const std::string& path);
void save_train_config(const TrainConfig& cfg, const std::string& path);

}  // namespace unfilter::train
