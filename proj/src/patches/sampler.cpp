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

#include "unfilter/patches/sampler.hpp"

#include <algorithm>

namespace unfilter::patches {

namespace o = ::unfilter::ops;

void SamplerHeads::ensure_init(const nn::FeaturePyramid& pyramid, RngStream& init) {
  if (initialized()) {
    UF_CHECK(static_cast<int>(content.size()) == pyramid.num_levels(),
             ShapeError, "SamplerHeads: pyramid level count changed");
    return;
  }
  for (const Tensor& level : pyramid.levels) {
    const int c = level.dim(1);
    content.emplace_back(c, embed_dim, embed_dim, init);
    style.emplace_back(c, embed_dim, embed_dim, init);
  }
}

nn::ParamList SamplerHeads::content_params() const {
  nn::ParamList out;
  for (size_t l = 0; l < content.size(); ++l)
    content[l].collect("sampler.content" + std::to_string(l), out);
  return out;
}

nn::ParamList SamplerHeads::style_params() const {
  nn::ParamList out;
  for (size_t l = 0; l < style.size(); ++l)
    style[l].collect("sampler.style" + std::to_string(l), out);
  return out;
}

nn::ParamList SamplerHeads::params() const {
  nn::ParamList out = content_params();
  nn::ParamList s = style_params();
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::vector<std::vector<int>> sample_locations(const nn::FeaturePyramid& pyramid,
                                               int num_patches, RngStream& rng) {
  UF_CHECK(num_patches >= 1, ValidationError, "sample_locations: num_patches >= 1");
  std::vector<std::vector<int>> out;
  for (const Tensor& level : pyramid.levels) {
    const int hw = level.dim(2) * level.dim(3);
    out.push_back(rng.sample_without_replacement(hw, std::min(num_patches, hw)));
  }
  return out;
}

std::vector<std::vector<int>> sample_locations(const nn::FeaturePyramid& pyramid,
                                               int num_patches, uint64_t seed) {
  RngStream rng(seed);
  return sample_locations(pyramid, num_patches, rng);
}

PatchSet project_content(const nn::FeaturePyramid& pyramid,
                         const std::vector<std::vector<int>>& locations,
                         const SamplerHeads& heads) {
  UF_CHECK(heads.initialized(), ValidationError, "project_content: heads not initialized");
  UF_CHECK(locations.size() == pyramid.levels.size(), ShapeError,
           "project_content: location list level count mismatch");
  PatchSet set;
  set.locations = locations;
  set.batch = pyramid.levels[0].dim(0);
  for (size_t l = 0; l < pyramid.levels.size(); ++l) {
    const Tensor& level = pyramid.levels[l];
    const int b = level.dim(0), c = level.dim(1);
    const int t = static_cast<int>(locations[l].size());
    Tensor rows = o::reshape(o::gather_hw(level, locations[l]), {b * t, c});
    Tensor emb = heads.content[l].forward(rows);
    set.embeddings.push_back(o::l2_normalize_rows(emb));
  }
  return set;
}

PatchSet project_style(const nn::FeaturePyramid& pyramid,
                       const std::vector<std::vector<int>>& locations,
                       const SamplerHeads& heads, int window) {
  UF_CHECK(heads.initialized(), ValidationError, "project_style: heads not initialized");
  UF_CHECK(window >= 1 && window % 2 == 1, ValidationError,
           "project_style: window must be odd and >= 1");
  UF_CHECK(locations.size() == pyramid.levels.size(), ShapeError,
           "project_style: location list level count mismatch");
  PatchSet set;
  set.locations = locations;
  set.batch = pyramid.levels[0].dim(0);
  const int r = (window - 1) / 2;
  const int w2 = window * window;
  for (size_t l = 0; l < pyramid.levels.size(); ++l) {
    const Tensor& level = pyramid.levels[l];
    const int b = level.dim(0), c = level.dim(1), h = level.dim(2), w = level.dim(3);
    const int t = static_cast<int>(locations[l].size());

    // expanded index list: per location, its reflect-padded neighborhood
    std::vector<int> idx;
    idx.reserve(static_cast<size_t>(t) * w2);
    auto reflect = [](int i, int n) {
      if (n == 1) return 0;
      const int period = 2 * (n - 1);
      i = std::abs(i) % period;
      return i < n ? i : period - i;
    };
    for (int ti = 0; ti < t; ++ti) {
      const int y = locations[l][ti] / w;
      const int x = locations[l][ti] % w;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          idx.push_back(reflect(y + dy, h) * w + reflect(x + dx, w));
        }
      }
    }

    Tensor rows = o::reshape(o::gather_hw(level, idx), {b * t * w2, c});
    Tensor mapped = heads.style[l].forward(rows);  // [B*T*w2, K]
    const int k = heads.embed_dim;
    Tensor blocks = o::reshape(mapped, {b * t, w2, k});
    Tensor gram = o::mul_scalar(o::bmm(o::transpose_last2(blocks), blocks),
                                1.0 / w2);        // [B*T, K, K]
    Tensor flat = o::triu_flatten(gram);          // [B*T, K(K+1)/2]
    set.embeddings.push_back(o::l2_normalize_rows(flat));
  }
  return set;
}

}  // namespace unfilter::patches
