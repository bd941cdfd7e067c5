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

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "unfilter/image/image.hpp"

namespace unfilter::filters {

enum class TransformKind {
  kBrightness,     // additive delta in [0,1] space
  kContrast,       // factor >= 0, pivot 0.5
  kSaturation,     // factor >= 0; 0 is grayscale
  kHueShift,       // degrees, wraps in HSV
  kGaussianBlur,   // sigma in pixels, radius ceil(3*sigma), reflect padding
  kVignette,       // strength in [0,1], radial falloff 1 - s*(r/r_max)^2
  kToneCurve,      // per-channel monotone control points, piecewise linear
  kAdditiveNoise,  // gaussian, explicit seed
};

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
};

struct PrimitiveTransform {
  TransformKind kind = TransformKind::kBrightness;
  double value = 0.0;     // delta / factor / degrees / sigma / strength
  uint64_t seed = 0;      // additive noise only
  std::array<std::vector<CurvePoint>, 3> curves;  // tone curve only (R,G,B)

  static PrimitiveTransform brightness(double delta);
  static PrimitiveTransform contrast(double factor);
  static PrimitiveTransform saturation(double factor);
  static PrimitiveTransform hue_shift(double degrees);
  static PrimitiveTransform gaussian_blur(double sigma);
  static PrimitiveTransform vignette(double strength);
  static PrimitiveTransform tone_curve(std::vector<CurvePoint> r,
                                       std::vector<CurvePoint> g,
                                       std::vector<CurvePoint> b);
  static PrimitiveTransform additive_noise(double sigma, uint64_t seed);
};

/// An ordered list of primitive transforms. Applying the same spec to the
/// same image twice yields bit-identical output.
struct FilterSpec {
  std::string name;
  std::vector<PrimitiveTransform> transforms;
};

/// Throws ValidationError when a spec violates its invariants.
void validate_spec(const FilterSpec& spec);

/// Applies the transforms in order; every stage clamps to [0,1].
Image apply_filter(const Image& image, const FilterSpec& spec);

/// The 16 built-in named filters. Parameters are fixed; the seed only feeds
/// the noise primitives, so identical seeds give identical banks.
std::vector<FilterSpec> builtin_filter_bank(uint64_t seed);

void to_json(nlohmann::ordered_json& j, const FilterSpec& spec);
FilterSpec filter_spec_from_json(const nlohmann::json& j);

}  // namespace unfilter::filters
