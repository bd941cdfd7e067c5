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

#include <vector>

#include "unfilter/core/common.hpp"
#include "unfilter/core/tensor.hpp"

namespace unfilter {

/// RGB image, values in [0,1], HWC interleaved row-major.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> data;  // height*width*3

  Image() = default;
  Image(int h, int w, double fill = 0.0)
      : height(h), width(w), data(static_cast<size_t>(h) * w * 3, fill) {}

  double& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  size_t pixels() const { return static_cast<size_t>(height) * width; }
  bool same_shape(const Image& o) const { return height == o.height && width == o.width; }
};

Image resize_bilinear(const Image& img, int out_h, int out_w);
Image flip_horizontal(const Image& img);
void clamp01(Image& img);
double luma(double r, double g, double b);  // Rec.601

/// Stack images into an NCHW batch tensor and back. Tensor values are the
/// image values unchanged ([0,1] by convention).
Tensor images_to_tensor(const std::vector<Image>& batch);
Image tensor_to_image(const Tensor& t, int batch_index = 0);

}  // namespace unfilter
