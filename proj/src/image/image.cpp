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

#include "unfilter/image/image.hpp"

#include <algorithm>
#include <cmath>

namespace unfilter {

double luma(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

void clamp01(Image& img) {
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
  UF_CHECK(out_h > 0 && out_w > 0, ValidationError, "resize: non-positive size");
  if (out_h == img.height && out_w == img.width) return img;
  Image out(out_h, out_w);
  const double sy = static_cast<double>(img.height) / out_h;
  const double sx = static_cast<double>(img.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    // half-pixel centers, clamped at borders
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
        const double bot = img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
        out.at(y, x, c) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

Image flip_horizontal(const Image& img) {
  Image out(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
    }
  }
  return out;
}

Tensor images_to_tensor(const std::vector<Image>& batch) {
  UF_CHECK(!batch.empty(), ValidationError, "images_to_tensor: empty batch");
  const int h = batch[0].height, w = batch[0].width;
  const int n = static_cast<int>(batch.size());
  std::vector<double> data(static_cast<size_t>(n) * 3 * h * w);
  for (int i = 0; i < n; ++i) {
    UF_CHECK(batch[i].height == h && batch[i].width == w, ShapeError,
             "images_to_tensor: inconsistent sizes in batch");
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          data[((static_cast<size_t>(i) * 3 + c) * h + y) * w + x] = batch[i].at(y, x, c);
        }
      }
    }
  }
  return Tensor::from_data({n, 3, h, w}, std::move(data));
}

Image tensor_to_image(const Tensor& t, int batch_index) {
  UF_CHECK(t.ndim() == 4 && t.dim(1) == 3, ShapeError,
           "tensor_to_image: want [N,3,H,W], got " + shape_str(t.shape()));
  UF_CHECK(batch_index >= 0 && batch_index < t.dim(0), ShapeError,
           "tensor_to_image: batch index out of range");
  const int h = t.dim(2), w = t.dim(3);
  Image out(h, w);
  const double* p = t.data();
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        out.at(y, x, c) = p[((static_cast<size_t>(batch_index) * 3 + c) * h + y) * w + x];
      }
    }
  }
  return out;
}

}  // namespace unfilter
