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

#include <functional>
#include <optional>

#include <json.hpp>

#include "unfilter/patches/sampler.hpp"

namespace unfilter::loss {

struct NCEConfig {
  double tau = 0.07;
  double gamma_c = 0.5;
  double gamma_s = 0.5;
};

struct LossWeights {
  double lambda_p = 0.5;
  double lambda_c = 1e-3;
  double lambda_a = 1e-3;
  double lambda_gp = 10.0;
};

/// Per-step scalar loss components, serialized to the line-delimited log.
struct LossReport {
  int64_t step = 0;
  double content_nce = 0;
  double style_nce = 0;
  double patchnce = 0;
  double consistency = 0;
  double adv_g = 0;
  double adv_d = 0;
  double gp = 0;
  double identity = 0;
  double total_g = 0;
  nlohmann::ordered_json to_json() const;
};

/// Temperature-scaled (N+1)-way contrastive loss. Stabilized log-sum-exp,
/// differentiable in all tensor inputs. Throws ValidationError for tau <= 0.
Tensor info_nce(const Tensor& query, const Tensor& positive,
                const Tensor& negatives, double tau);

/// Multi-layer content NCE: query = output patch at t, positive = filtered
/// patch at the same t, negatives = filtered patches at all other sampled
/// locations of the same image. Mean over layers, locations and batch.
Tensor content_nce(const patches::PatchSet& output_set,
                   const patches::PatchSet& filtered_set, double tau);

/// Style NCE: 2-way selection of the original-image style descriptor at t
/// against a single filtered descriptor at a different location t' (drawn
/// per term from neg_rng). `same_location_negative` switches t' = t.
Tensor style_nce(const patches::PatchSet& output_set,
                 const patches::PatchSet& original_set,
                 const patches::PatchSet& filtered_set, double tau,
                 RngStream& neg_rng, bool same_location_negative = false);

Tensor patchnce_total(const Tensor& l_content, const Tensor& l_style,
                      const NCEConfig& cfg);

using CriticFn = std::function<Tensor(const Tensor&)>;  // [B,3,H,W] -> [B]

struct DiscLossParts {
  Tensor total;
  Tensor wasserstein;
  Tensor gp;
};

/// Wasserstein critic loss with gradient penalty on uniform interpolates.
/// `fake` must be detached from the generator graph.
DiscLossParts discriminator_loss(const CriticFn& critic, const Tensor& real,
                                 const Tensor& fake, double lambda_gp,
                                 RngStream& u_rng);

Tensor generator_adv_loss(const CriticFn& critic, const Tensor& fake);

/// Pixel L1 plus feature L1 under a frozen copy of the encoder, equal weight.
Tensor consistency_loss(const Tensor& output_image, const Tensor& original_image,
                        const nn::Generator& frozen_encoder);

/// Content NCE of the generator applied to an already-clean image. Pass the
/// original's encoder pyramid when it is already computed; otherwise it is
/// encoded here.
Tensor identity_regularization(const nn::Generator& model,
                               const patches::SamplerHeads& heads,
                               const Tensor& original_image, int num_patches,
                               double tau, RngStream& loc_rng,
                               const nn::FeaturePyramid* original_pyramid = nullptr);

struct GeneratorLossParts {
  Tensor patchnce;    // required
  Tensor consistency; // undefined when disabled
  Tensor adv;         // required
  Tensor identity;    // undefined when disabled
};

/// L_G = lambda_p * L_PatchNCE + lambda_c * L_Cons + lambda_a * L_adv
/// (+ lambda_p * identity when enabled). Throws DivergenceError naming the
/// component if any part is non-finite.
Tensor generator_objective(const GeneratorLossParts& parts,
                           const LossWeights& weights, LossReport& report);

}  // namespace unfilter::loss
