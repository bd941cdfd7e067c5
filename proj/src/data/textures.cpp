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

#include "unfilter/data/textures.hpp"

#include <cmath>

#include "unfilter/core/rng.hpp"

namespace unfilter::data {

std::vector<Image> make_source_textures(int count, int size, uint64_t seed) {
  UF_CHECK(count > 0 && size >= 8, ValidationError, "make_source_textures: bad args");
  std::vector<Image> out;
  out.reserve(count);
  RngStream rng(splitmix64(seed ^ 0x7478747265ULL));
  for (int n = 0; n < count; ++n) {
    Image img(size, size);
    // per-channel planar gradient + low-frequency plaid
    double base[3], gx[3], gy[3], amp[3], fx[3], fy[3], ph[3];
    for (int c = 0; c < 3; ++c) {
      base[c] = rng.uniform(0.25, 0.75);
      gx[c] = rng.uniform(-0.5, 0.5);
      gy[c] = rng.uniform(-0.5, 0.5);
      amp[c] = rng.uniform(0.12, 0.3);
      fx[c] = rng.uniform(0.5, 2.5);
      fy[c] = rng.uniform(0.5, 2.5);
      ph[c] = rng.uniform(0, 2 * M_PI);
    }
    // a few soft blobs
    const int blobs = 2 + static_cast<int>(rng.randint(3));
    std::vector<std::array<double, 6>> blob(blobs);  // cx, cy, radius, dr, dg, db
    for (auto& b : blob) {
      b = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.12, 0.35),
           rng.uniform(-0.45, 0.45), rng.uniform(-0.45, 0.45), rng.uniform(-0.45, 0.45)};
    }
    for (int y = 0; y < size; ++y) {
      const double v = static_cast<double>(y) / (size - 1);
      for (int x = 0; x < size; ++x) {
        const double u = static_cast<double>(x) / (size - 1);
        for (int c = 0; c < 3; ++c) {
          double val = base[c] + gx[c] * (u - 0.5) + gy[c] * (v - 0.5) +
                       amp[c] * std::sin(2 * M_PI * (fx[c] * u + fy[c] * v) + ph[c]);
          for (const auto& b : blob) {
            const double d2 = (u - b[0]) * (u - b[0]) + (v - b[1]) * (v - b[1]);
            val += b[3 + c] * std::exp(-d2 / (2 * b[2] * b[2]));
          }
          img.at(y, x, c) = val;
        }
      }
    }
    clamp01(img);
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace unfilter::data
