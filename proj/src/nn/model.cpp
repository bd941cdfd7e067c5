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

#include "unfilter/nn/model.hpp"

#include <algorithm>

namespace unfilter::nn {

namespace o = ::unfilter::ops;

void ModelConfig::validate() const {
  UF_CHECK(num_levels >= 1, ValidationError, "ModelConfig: num_levels >= 1");
  UF_CHECK(static_cast<int>(encoder_channels.size()) == num_levels, ValidationError,
           "ModelConfig: encoder_channels must have num_levels entries");
  UF_CHECK(static_cast<int>(style_channels.size()) == num_levels, ValidationError,
           "ModelConfig: style_channels must have num_levels entries");
  for (int c : encoder_channels)
    UF_CHECK(c > 0, ValidationError, "ModelConfig: channels must be positive");
  for (int c : style_channels)
    UF_CHECK(c > 0, ValidationError, "ModelConfig: channels must be positive");
  UF_CHECK(decoder_blocks >= num_levels, ValidationError,
           "ModelConfig: decoder_blocks must be >= num_levels");
  UF_CHECK(embed_dim > 0 && disc_scales > 0 && disc_base_channels > 0,
           ValidationError, "ModelConfig: positive dims required");
}

void to_json(nlohmann::ordered_json& j, const ModelConfig& c) {
  j = nlohmann::ordered_json{{"num_levels", c.num_levels},
                             {"encoder_channels", c.encoder_channels},
                             {"style_channels", c.style_channels},
                             {"decoder_blocks", c.decoder_blocks},
                             {"embed_dim", c.embed_dim},
                             {"disc_scales", c.disc_scales},
                             {"disc_base_channels", c.disc_base_channels}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.num_levels = j.value("num_levels", c.num_levels);
  c.encoder_channels = j.value("encoder_channels", c.encoder_channels);
  c.style_channels = j.value("style_channels", c.style_channels);
  c.decoder_blocks = j.value("decoder_blocks", c.decoder_blocks);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.disc_scales = j.value("disc_scales", c.disc_scales);
  c.disc_base_channels = j.value("disc_base_channels", c.disc_base_channels);
  c.validate();
  return c;
}

namespace {

void check_divisible(const Tensor& image, int factor) {
  UF_CHECK(image.ndim() == 4 && image.dim(1) == 3, ShapeError,
           "model: want [B,3,H,W], got " + shape_str(image.shape()));
  UF_CHECK(image.dim(2) % factor == 0 && image.dim(3) % factor == 0, ShapeError,
           "model: spatial size " + std::to_string(image.dim(2)) + "x" +
               std::to_string(image.dim(3)) + " not divisible by " +
               std::to_string(factor));
}

}  // namespace

StyleExtractor::StyleExtractor(const ModelConfig& cfg, RngStream& init) {
  int in_c = 3;
  for (int l = 0; l < cfg.num_levels; ++l) {
    convs.emplace_back(in_c, cfg.style_channels[l], 3, 2, 1, init);
    in_c = cfg.style_channels[l];
  }
  const int feat = cfg.style_channels.back();
  for (int l = 0; l < cfg.num_levels; ++l) {
    // near-zero heads: gamma = 1 + head(f) ~ 1, beta ~ 0 at init
    gamma_heads.emplace_back(feat, cfg.encoder_channels[l], init, 0.01);
    beta_heads.emplace_back(feat, cfg.encoder_channels[l], init, 0.01);
  }
}

AffineParams StyleExtractor::forward(const Tensor& image) const {
  check_divisible(image, 1 << static_cast<int>(convs.size()));
  Tensor h = image;
  for (const auto& conv : convs) h = o::relu(conv.forward(h));
  Tensor feat = o::hw_mean(h);  // [B,Cf]
  AffineParams out;
  for (size_t l = 0; l < gamma_heads.size(); ++l) {
    out.gamma.push_back(o::add_scalar(gamma_heads[l].forward(feat), 1.0));
    out.beta.push_back(beta_heads[l].forward(feat));
  }
  return out;
}

void StyleExtractor::collect(const std::string& prefix, ParamList& out) const {
  for (size_t i = 0; i < convs.size(); ++i)
    convs[i].collect(prefix + ".conv" + std::to_string(i), out);
  for (size_t i = 0; i < gamma_heads.size(); ++i) {
    gamma_heads[i].collect(prefix + ".gamma" + std::to_string(i), out);
    beta_heads[i].collect(prefix + ".beta" + std::to_string(i), out);
  }
}

Encoder::Encoder(const ModelConfig& cfg, RngStream& init) {
  int in_c = 3;
  for (int l = 0; l < cfg.num_levels; ++l) {
    convs.emplace_back(in_c, cfg.encoder_channels[l], 3, 2, 1, init);
    in_c = cfg.encoder_channels[l];
  }
}

FeaturePyramid Encoder::forward(const Tensor& image, const AffineParams& affine) const {
  check_divisible(image, 1 << static_cast<int>(convs.size()));
  UF_CHECK(affine.gamma.size() == convs.size(), ShapeError,
           "encode: affine level count mismatch");
  FeaturePyramid pyramid;
  Tensor h = image;
  for (size_t l = 0; l < convs.size(); ++l) {
    Tensor z = convs[l].forward(h);
    z = adain(z, affine.gamma[l], affine.beta[l]);
    pyramid.levels.push_back(z);
    h = o::relu(z);
  }
  return pyramid;
}

void Encoder::collect(const std::string& prefix, ParamList& out) const {
  for (size_t i = 0; i < convs.size(); ++i)
    convs[i].collect(prefix + ".conv" + std::to_string(i), out);
}

Decoder::Decoder(const ModelConfig& cfg, RngStream& init) {
  const auto& ch = cfg.encoder_channels;
  const int L = cfg.num_levels;
  for (int i = 0; i < cfg.decoder_blocks - L; ++i) {
    latent_blocks.emplace_back(ch[L - 1], init);
  }
  for (int l = L - 1; l >= 1; --l) {
    fuse_convs.emplace_back(ch[l] + ch[l - 1], ch[l - 1], 3, 1, 1, init);
    up_blocks.emplace_back(ch[l - 1], init);
  }
  const int fc = std::max(4, ch[0] / 2);
  final_conv = Conv2d(ch[0], fc, 3, 1, 1, init);
  out_conv = Conv2d(fc, 3, 3, 1, 1, init);
}

Tensor Decoder::forward(const FeaturePyramid& pyramid) const {
  Tensor h = pyramid.latent();
  for (const auto& block : latent_blocks) h = block.forward(h);
  const int L = pyramid.num_levels();
  for (int i = 0; i < static_cast<int>(fuse_convs.size()); ++i) {
    const int skip_level = L - 2 - i;
    h = o::upsample_nearest2(h);
    h = o::concat_channels(h, pyramid.levels[skip_level]);
    h = o::relu(fuse_convs[i].forward(h));
    h = up_blocks[i].forward(h);
  }
  h = o::upsample_nearest2(h);
  h = o::relu(final_conv.forward(h));
  h = o::tanh(out_conv.forward(h));
  // [-1,1] -> [0,1]
  return o::add_scalar(o::mul_scalar(h, 0.5), 0.5);
}

void Decoder::collect(const std::string& prefix, ParamList& out) const {
  for (size_t i = 0; i < latent_blocks.size(); ++i)
    latent_blocks[i].collect(prefix + ".latent" + std::to_string(i), out);
  for (size_t i = 0; i < fuse_convs.size(); ++i) {
    fuse_convs[i].collect(prefix + ".fuse" + std::to_string(i), out);
    up_blocks[i].collect(prefix + ".up" + std::to_string(i), out);
  }
  final_conv.collect(prefix + ".final", out);
  out_conv.collect(prefix + ".out", out);
}

Generator::Generator(const ModelConfig& cfg, RngStream& init)
    : config(cfg), style(cfg, init), encoder(cfg, init), decoder(cfg, init) {
  cfg.validate();
}

AffineParams Generator::style_extract(const Tensor& image) const {
  return style.forward(image);
}

FeaturePyramid Generator::encode(const Tensor& image, const AffineParams& affine) const {
  return encoder.forward(image, affine);
}

FeaturePyramid Generator::encode_image(const Tensor& image) const {
  return encode(image, style_extract(image));
}

Tensor Generator::decode(const FeaturePyramid& pyramid) const {
  return decoder.forward(pyramid);
}

Tensor Generator::remove_filter(const Tensor& image) const {
  return decode(encode_image(image));
}

ParamList Generator::params() const {
  ParamList out;
  style.collect("style", out);
  encoder.collect("encoder", out);
  decoder.collect("decoder", out);
  return out;
}

Generator Generator::frozen_clone() const {
  RngStream scratch(0);
  Generator copy(config, scratch);  // fresh buffers, then overwrite with ours
  copy.assign_frozen_from(*this);
  return copy;
}

void Generator::assign_frozen_from(const Generator& source) {
  ParamList src = source.params();
  ParamList dst = params();
  UF_CHECK(src.size() == dst.size(), ValidationError,
           "assign_frozen_from: param mismatch");
  for (size_t i = 0; i < src.size(); ++i) {
    UF_CHECK(src[i].tensor.shape() == dst[i].tensor.shape(), ShapeError,
             "assign_frozen_from: shape mismatch for " + src[i].name);
    auto* impl = dst[i].tensor.unsafe_impl();
    *impl->storage = *src[i].tensor.unsafe_impl()->storage;
    impl->requires_grad = false;
    impl->grad_fn.reset();
    impl->grad.reset();
  }
}

Discriminator::Discriminator(const ModelConfig& cfg, RngStream& init)
    : config(cfg) {
  const int c = cfg.disc_base_channels;
  const std::vector<int> widths = {c, 2 * c, 4 * c, 4 * c};
  int in_c = 3;
  for (int w : widths) {
    global_convs.emplace_back(in_c, w, 3, 2, 1, init);
    in_c = w;
  }
  global_head = Linear(in_c, 1, init);
  for (int s = 0; s < cfg.disc_scales; ++s) {
    std::vector<Conv2d> trunk;
    in_c = 3;
    const int depth = 3 + s;
    for (int d = 0; d < depth; ++d) {
      const int w = std::min(4 * c, c << d);
      trunk.emplace_back(in_c, w, 3, 2, 1, init);
      in_c = w;
    }
    patch_convs.push_back(std::move(trunk));
    patch_heads.emplace_back(in_c, 1, 1, 1, 0, init);
  }
}

DiscOutput Discriminator::forward(const Tensor& image) const {
  UF_CHECK(image.ndim() == 4 && image.dim(1) == 3, ShapeError,
           "discriminate: want [B,3,H,W]");
  DiscOutput out;
  Tensor h = image;
  for (const auto& conv : global_convs) h = o::leaky_relu(conv.forward(h), 0.2);
  Tensor pooled = o::hw_mean(h);  // [B,C]
  out.global_score = o::reshape(global_head.forward(pooled), {image.dim(0)});
  for (size_t s = 0; s < patch_convs.size(); ++s) {
    Tensor p = image;
    for (const auto& conv : patch_convs[s]) p = o::leaky_relu(conv.forward(p), 0.2);
    out.patch_maps.push_back(patch_heads[s].forward(p));
  }
  return out;
}

Tensor Discriminator::critic_scalar(const Tensor& image) const {
  DiscOutput out = forward(image);
  Tensor total = out.global_score;
  for (const auto& map : out.patch_maps) {
    total = o::add(total, o::reshape(o::hw_mean(map), {image.dim(0)}));
  }
  return total;
}

ParamList Discriminator::params() const {
  ParamList out;
  for (size_t i = 0; i < global_convs.size(); ++i)
    global_convs[i].collect("disc.global.conv" + std::to_string(i), out);
  global_head.collect("disc.global.head", out);
  for (size_t s = 0; s < patch_convs.size(); ++s) {
    for (size_t i = 0; i < patch_convs[s].size(); ++i) {
      patch_convs[s][i].collect(
          "disc.patch" + std::to_string(s) + ".conv" + std::to_string(i), out);
    }
    patch_heads[s].collect("disc.patch" + std::to_string(s) + ".head", out);
  }
  return out;
}

}  // namespace unfilter::nn
