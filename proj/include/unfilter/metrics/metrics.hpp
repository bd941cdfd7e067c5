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
#include <map>
#include <string>

#include "unfilter/image/image.hpp"

namespace unfilter::metrics {

/// 10*log10(1/MSE) over all RGB values; +infinity when the images match.
double psnr(const Image& a, const Image& b);

/// Mean local SSIM on the luma plane, Gaussian window (default 11, sigma
/// 1.5), C1=0.01^2, C2=0.03^2 on unit dynamic range. Valid-window statistics.
double ssim(const Image& a, const Image& b, int window = 11, double sigma = 1.5);

/// Mean per-pixel CIEDE2000 with kL=kC=kH=1; sRGB (D65) to Lab pipeline.
double delta_e_2000(const Image& a, const Image& b);

/// CIEDE2000 of two Lab triples (exposed for verification against the
/// published test pairs).
double ciede2000_lab(const double lab1[3], const double lab2[3]);
void srgb_to_lab(double r, double g, double b, double lab[3]);

/// Per-pixel |output - original| rescaled so the max maps to 1; an all-zero
/// difference stays all-zero.
Image residual_image(const Image& output, const Image& original);

/// Extra metric plugins (e.g. a perceptual metric with external weights) can
/// be registered by name and are reported alongside the built-ins.
using MetricFn = std::function<double(const Image&, const Image&)>;
using MetricPlugins = std::map<std::string, MetricFn>;

}  // namespace unfilter::metrics
