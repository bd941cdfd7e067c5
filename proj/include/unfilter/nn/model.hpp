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

#include <json.hpp>

#include "unfilter/nn/layers.hpp"

namespace unfilter::nn {

struct ModelConfig {
  int num_levels = 4;
  std::vector<int> encoder_channels = {16, 32, 64, 128};
  std::vector<int> style_channels = {16, 32, 64, 64};
  int decoder_blocks = 6;
  int embed_dim = 64;       // K of the sampler heads
  int disc_scales = 2;
  int disc_base_channels = 32;

  void validate() const;
  int downsample_factor() const { return 1 << num_levels; }
};

void to_json(nlohmann::ordered_json& j, const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Per-level encoder activations, level l at 1/2^(l+1) input resolution.
struct FeaturePyramid {
  std::vector<Tensor> levels;
  const Tensor& latent() const { return levels.back(); }
  int num_levels() const { return static_cast<int>(levels.size()); }
};

/// One (gamma, beta) pair per encoder level, each [B,C_l].
struct AffineParams {
  std::vector<Tensor> gamma;
  std::vector<Tensor> beta;
};

/// Small trainable conv net + global pooling + per-level FC heads. Heads are
/// initialized so gamma ~ 1 and beta ~ 0, which makes the early encoder
/// behave like plain instance normalization.
struct StyleExtractor {
  std::vector<Conv2d> convs;
  std::vector<Linear> gamma_heads;
  std::vector<Linear> beta_heads;

  StyleExtractor() = default;
  StyleExtractor(const ModelConfig& cfg, RngStream& init);
  AffineParams forward(const Tensor& image) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

struct Encoder {
  std::vector<Conv2d> convs;

  Encoder() = default;
  Encoder(const ModelConfig& cfg, RngStream& init);
  /// Level l = adain(conv_l(act(level_{l-1})), gamma_l, beta_l). The stored
  /// levels are the post-AdaIN maps (what the skips and samplers consume).
  FeaturePyramid forward(const Tensor& image, const AffineParams& affine) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

struct Decoder {
  std::vector<ResidualBlock> latent_blocks;       // decoder_blocks - num_levels
  std::vector<Conv2d> fuse_convs;                 // skip fusion, levels L-1..1
  std::vector<ResidualBlock> up_blocks;
  Conv2d final_conv;
  Conv2d out_conv;

  Decoder() = default;
  Decoder(const ModelConfig& cfg, RngStream& init);
  /// Consumes the latent and the skip levels; output in [0,1], input-sized.
  Tensor forward(const FeaturePyramid& pyramid) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

/// The full style-removal network F: style extraction, AdaIN-normalized
/// encoding, skip-connected decoding.
struct Generator {
  ModelConfig config;
  StyleExtractor style;
  Encoder encoder;
  Decoder decoder;

  Generator() = default;
  Generator(const ModelConfig& cfg, RngStream& init);

  AffineParams style_extract(const Tensor& image) const;
  FeaturePyramid encode(const Tensor& image, const AffineParams& affine) const;
  /// style_extract + encode of one image (the pyramid used by the samplers).
  FeaturePyramid encode_image(const Tensor& image) const;
  Tensor decode(const FeaturePyramid& pyramid) const;
  Tensor remove_filter(const Tensor& image) const;

  ParamList params() const;
  /// Deep parameter copy with detached tensors (for the frozen consistency
  /// encoder).
  Generator frozen_clone() const;
  /// Overwrites this generator's parameter values with another's (shapes
  /// must match) and detaches them.
  void assign_frozen_from(const Generator& source);
};

struct DiscOutput {
  Tensor global_score;             // [B]
  std::vector<Tensor> patch_maps;  // [B,1,h_s,w_s] per scale
};

/// WGAN critic: one global head plus patch heads at `disc_scales` scales.
/// Scores are unbounded reals.
struct Discriminator {
  ModelConfig config;
  std::vector<Conv2d> global_convs;
  Linear global_head;
  std::vector<std::vector<Conv2d>> patch_convs;
  std::vector<Conv2d> patch_heads;

  Discriminator() = default;
  Discriminator(const ModelConfig& cfg, RngStream& init);

  DiscOutput forward(const Tensor& image) const;
  /// Global score plus spatially averaged patch scores, per sample [B].
  Tensor critic_scalar(const Tensor& image) const;
  ParamList params() const;
};

}  // namespace unfilter::nn
