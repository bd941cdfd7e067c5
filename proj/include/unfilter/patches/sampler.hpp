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

#include "unfilter/nn/model.hpp"

namespace unfilter::patches {

/// Per-level unit-norm descriptors at sampled spatial locations. Row order is
/// batch-major: row b*T + t corresponds to location t of sample b, so patch
/// sets that share a location list are row-aligned.
struct PatchSet {
  std::vector<Tensor> embeddings;           // per level [B*T_l, D]
  std::vector<std::vector<int>> locations;  // per level, flat h*W+w indices
  int batch = 0;
  int level_count() const { return static_cast<int>(embeddings.size()); }
};

/// Content head H_c and style head H_s per level; the two share no
/// parameters. Lazily initialized on first use to bind to the encoder's
/// channel widths.
struct SamplerHeads {
  int embed_dim = 64;
  std::vector<nn::Mlp2> content;
  std::vector<nn::Mlp2> style;

  bool initialized() const { return !content.empty(); }
  void ensure_init(const nn::FeaturePyramid& pyramid, RngStream& init);
  nn::ParamList content_params() const;
  nn::ParamList style_params() const;
  nn::ParamList params() const;
};

/// Per level, min(num_patches, H*W) distinct locations drawn uniformly
/// without replacement.
std::vector<std::vector<int>> sample_locations(const nn::FeaturePyramid& pyramid,
                                               int num_patches, RngStream& rng);
std::vector<std::vector<int>> sample_locations(const nn::FeaturePyramid& pyramid,
                                               int num_patches, uint64_t seed);

/// Feature vector at each location through H_c, L2-normalized.
PatchSet project_content(const nn::FeaturePyramid& pyramid,
                         const std::vector<std::vector<int>>& locations,
                         const SamplerHeads& heads);

/// window x window neighborhood (reflect padding) through H_s, per-location
/// Gram matrix, upper triangle flattened, L2-normalized.
PatchSet project_style(const nn::FeaturePyramid& pyramid,
                       const std::vector<std::vector<int>>& locations,
                       const SamplerHeads& heads, int window);

}  // namespace unfilter::patches
