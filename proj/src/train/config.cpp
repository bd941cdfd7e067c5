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

#include "unfilter/train/config.hpp"

#include <fstream>

namespace unfilter::train {

void TrainConfig::validate() const {
  UF_CHECK(lr_generator > 0 && lr_discriminator > 0 && lr_samplers > 0,
           ValidationError, "TrainConfig: learning rates must be positive");
  UF_CHECK(nce.tau > 0, ValidationError, "TrainConfig: tau must be positive");
  UF_CHECK(weights.lambda_p >= 0 && weights.lambda_c >= 0 && weights.lambda_a >= 0 &&
               weights.lambda_gp >= 0,
           ValidationError, "TrainConfig: loss weights must be non-negative");
  UF_CHECK(batch_size > 0 && total_steps >= 0, ValidationError,
           "TrainConfig: bad run shape");
  UF_CHECK(image_size >= 32, ValidationError, "TrainConfig: image_size >= 32");
  UF_CHECK(image_size % model.downsample_factor() == 0, ValidationError,
           "TrainConfig: image_size must be divisible by 2^num_levels");
  UF_CHECK(num_patches >= 2, ValidationError, "TrainConfig: num_patches >= 2");
  UF_CHECK(gram_window >= 1 && gram_window % 2 == 1, ValidationError,
           "TrainConfig: gram_window must be odd");
  UF_CHECK(d_updates_per_g >= 1, ValidationError, "TrainConfig: d_updates_per_g >= 1");
  model.validate();
}

nlohmann::ordered_json to_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["lr_generator"] = cfg.lr_generator;
  j["lr_discriminator"] = cfg.lr_discriminator;
  j["lr_samplers"] = cfg.lr_samplers;
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["tau"] = cfg.nce.tau;
  j["gamma_c"] = cfg.nce.gamma_c;
  j["gamma_s"] = cfg.nce.gamma_s;
  j["lambda_p"] = cfg.weights.lambda_p;
  j["lambda_c"] = cfg.weights.lambda_c;
  j["lambda_a"] = cfg.weights.lambda_a;
  j["lambda_gp"] = cfg.weights.lambda_gp;
  j["batch_size"] = cfg.batch_size;
  j["total_steps"] = cfg.total_steps;
  j["seed"] = cfg.seed;
  j["image_size"] = cfg.image_size;
  j["num_patches"] = cfg.num_patches;
  j["gram_window"] = cfg.gram_window;
  j["d_updates_per_g"] = cfg.d_updates_per_g;
  j["checkpoint_every"] = cfg.checkpoint_every;
  j["enable_style_nce"] = cfg.enable_style_nce;
  j["enable_identity_reg"] = cfg.enable_identity_reg;
  j["enable_consistency"] = cfg.enable_consistency;
  j["style_negative_same_location"] = cfg.style_negative_same_location;
  nlohmann::ordered_json mj;
  nn::to_json(mj, cfg.model);
  j["model"] = mj;
  if (!cfg.stream_seed_overrides.empty()) j["stream_seed_overrides"] = cfg.stream_seed_overrides;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.lr_generator = j.value("lr_generator", cfg.lr_generator);
  cfg.lr_discriminator = j.value("lr_discriminator", cfg.lr_discriminator);
  cfg.lr_samplers = j.value("lr_samplers", cfg.lr_samplers);
  cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
  cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
  cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
  cfg.nce.tau = j.value("tau", cfg.nce.tau);
  cfg.nce.gamma_c = j.value("gamma_c", cfg.nce.gamma_c);
  cfg.nce.gamma_s = j.value("gamma_s", cfg.nce.gamma_s);
  cfg.weights.lambda_p = j.value("lambda_p", cfg.weights.lambda_p);
  cfg.weights.lambda_c = j.value("lambda_c", cfg.weights.lambda_c);
  cfg.weights.lambda_a = j.value("lambda_a", cfg.weights.lambda_a);
  cfg.weights.lambda_gp = j.value("lambda_gp", cfg.weights.lambda_gp);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.total_steps = j.value("total_steps", cfg.total_steps);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.image_size = j.value("image_size", cfg.image_size);
  cfg.num_patches = j.value("num_patches", cfg.num_patches);
  cfg.gram_window = j.value("gram_window", cfg.gram_window);
  cfg.d_updates_per_g = j.value("d_updates_per_g", cfg.d_updates_per_g);
  cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
  cfg.enable_style_nce = j.value("enable_style_nce", cfg.enable_style_nce);
  cfg.enable_identity_reg = j.value("enable_identity_reg", cfg.enable_identity_reg);
  cfg.enable_consistency = j.value("enable_consistency", cfg.enable_consistency);
  cfg.style_negative_same_location =
      j.value("style_negative_same_location", cfg.style_negative_same_location);
  if (j.contains("model")) cfg.model = nn::model_config_from_json(j.at("model"));
  if (j.contains("stream_seed_overrides")) {
    cfg.stream_seed_overrides =
        j.at("stream_seed_overrides").get<std::map<std::string, uint64_t>>();
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream f(path);
  UF_CHECK(f.good(), IoError, "cannot open config: " + path);
  nlohmann::json j;
  f >> j;
  return train_config_from_json(j);
}

void save_train_config(const TrainConfig& cfg, const std::string& path) {
  std::ofstream f(path);
  UF_CHECK(f.good(), IoError, "cannot write config: " + path);
  f << to_json(cfg).dump(2) << "\n";
}

}  // namespace unfilter::train
