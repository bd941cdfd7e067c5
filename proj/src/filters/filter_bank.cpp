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

#include "unfilter/filters/filter_bank.hpp"

#include <algorithm>
#include <cmath>

#include "unfilter/core/rng.hpp"

namespace unfilter::filters {

namespace {

double clamp01v(double v) { return std::clamp(v, 0.0, 1.0); }

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0 ? d / mx : 0.0;
  if (d <= 0) {
    h = 0.0;
    return;
  }
  if (mx == r) {
    h = std::fmod((g - b) / d, 6.0);
  } else if (mx == g) {
    h = (b - r) / d + 2.0;
  } else {
    h = (r - g) / d + 4.0;
  }
  h /= 6.0;
  if (h < 0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  h = h - std::floor(h);
  const double hh = h * 6.0;
  const int i = std::min(5, static_cast<int>(hh));
  const double f = hh - i;
  const double p = v * (1 - s);
  const double q = v * (1 - s * f);
  const double t = v * (1 - s * (1 - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

int reflect_index(int i, int n) {
  // reflect without repeating the border sample (n >= 1)
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}

double eval_curve(const std::vector<CurvePoint>& pts, double v) {
  if (pts.empty()) return v;
  if (v <= pts.front().x) return pts.front().y;
  if (v >= pts.back().x) return pts.back().y;
  for (size_t i = 1; i < pts.size(); ++i) {
    if (v <= pts[i].x) {
      const double t = (v - pts[i - 1].x) / (pts[i].x - pts[i - 1].x);
      return pts[i - 1].y + t * (pts[i].y - pts[i - 1].y);
    }
  }
  return pts.back().y;
}

void apply_primitive(Image& img, const PrimitiveTransform& t) {
  switch (t.kind) {
    case TransformKind::kBrightness:
      for (double& v : img.data) v = clamp01v(v + t.value);
      break;
    case TransformKind::kContrast:
      for (double& v : img.data) v = clamp01v(0.5 + t.value * (v - 0.5));
      break;
    case TransformKind::kSaturation:
      for (size_t p = 0; p < img.pixels(); ++p) {
        double* px = &img.data[p * 3];
        const double y = luma(px[0], px[1], px[2]);
        for (int c = 0; c < 3; ++c) px[c] = clamp01v(y + t.value * (px[c] - y));
      }
      break;
    case TransformKind::kHueShift:
      for (size_t p = 0; p < img.pixels(); ++p) {
        double* px = &img.data[p * 3];
        double h, s, v;
        rgb_to_hsv(px[0], px[1], px[2], h, s, v);
        h += t.value / 360.0;
        hsv_to_rgb(h, s, v, px[0], px[1], px[2]);
        for (int c = 0; c < 3; ++c) px[c] = clamp01v(px[c]);
      }
      break;
    case TransformKind::kGaussianBlur: {
      if (t.value <= 0) break;
      const int radius = static_cast<int>(std::ceil(3.0 * t.value));
      std::vector<double> kernel(2 * radius + 1);
      double norm = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (t.value * t.value));
        norm += kernel[i + radius];
      }
      for (double& k : kernel) k /= norm;
      Image tmp(img.height, img.width);
      for (int y = 0; y < img.height; ++y) {  // horizontal pass
        for (int x = 0; x < img.width; ++x) {
          for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
              acc += kernel[i + radius] * img.at(y, reflect_index(x + i, img.width), c);
            }
            tmp.at(y, x, c) = acc;
          }
        }
      }
      for (int y = 0; y < img.height; ++y) {  // vertical pass
        for (int x = 0; x < img.width; ++x) {
          for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
              acc += kernel[i + radius] * tmp.at(reflect_index(y + i, img.height), x, c);
            }
            img.at(y, x, c) = clamp01v(acc);
          }
        }
      }
      break;
    }
    case TransformKind::kVignette: {
      const double cy = (img.height - 1) / 2.0;
      const double cx = (img.width - 1) / 2.0;
      const double r_max2 = cx * cx + cy * cy;
      for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
          const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
          const double m = 1.0 - t.value * (r_max2 > 0 ? r2 / r_max2 : 0.0);
          for (int c = 0; c < 3; ++c) img.at(y, x, c) = clamp01v(img.at(y, x, c) * m);
        }
      }
      break;
    }
    case TransformKind::kToneCurve:
      for (size_t p = 0; p < img.pixels(); ++p) {
        double* px = &img.data[p * 3];
        for (int c = 0; c < 3; ++c) px[c] = clamp01v(eval_curve(t.curves[c], px[c]));
      }
      break;
    case TransformKind::kAdditiveNoise: {
      RngStream rng(t.seed);
      for (double& v : img.data) v = clamp01v(v + t.value * rng.normal());
      break;
    }
  }
}

void validate_curve(const std::vector<CurvePoint>& pts) {
  UF_CHECK(pts.size() >= 2, ValidationError, "tone_curve: needs at least 2 points");
  for (size_t i = 0; i < pts.size(); ++i) {
    UF_CHECK(pts[i].x >= 0 && pts[i].x <= 1 && pts[i].y >= 0 && pts[i].y <= 1,
             ValidationError, "tone_curve: control points must lie in [0,1]^2");
    if (i > 0) {
      UF_CHECK(pts[i].x > pts[i - 1].x, ValidationError,
               "tone_curve: x coordinates must be strictly increasing");
      UF_CHECK(pts[i].y >= pts[i - 1].y, ValidationError,
               "tone_curve: curve must be monotone");
    }
  }
}

}  // namespace

PrimitiveTransform PrimitiveTransform::brightness(double delta) {
  return {TransformKind::kBrightness, delta, 0, {}};
}
PrimitiveTransform PrimitiveTransform::contrast(double factor) {
  return {TransformKind::kContrast, factor, 0, {}};
}
PrimitiveTransform PrimitiveTransform::saturation(double factor) {
  return {TransformKind::kSaturation, factor, 0, {}};
}
PrimitiveTransform PrimitiveTransform::hue_shift(double degrees) {
  return {TransformKind::kHueShift, degrees, 0, {}};
}
PrimitiveTransform PrimitiveTransform::gaussian_blur(double sigma) {
  return {TransformKind::kGaussianBlur, sigma, 0, {}};
}
PrimitiveTransform PrimitiveTransform::vignette(double strength) {
  return {TransformKind::kVignette, strength, 0, {}};
}
PrimitiveTransform PrimitiveTransform::tone_curve(std::vector<CurvePoint> r,
                                                  std::vector<CurvePoint> g,
                                                  std::vector<CurvePoint> b) {
  PrimitiveTransform t;
  t.kind = TransformKind::kToneCurve;
  t.curves = {std::move(r), std::move(g), std::move(b)};
  return t;
}
PrimitiveTransform PrimitiveTransform::additive_noise(double sigma, uint64_t seed) {
  PrimitiveTransform t;
  t.kind = TransformKind::kAdditiveNoise;
  t.value = sigma;
  t.seed = seed;
  return t;
}

void validate_spec(const FilterSpec& spec) {
  UF_CHECK(!spec.transforms.empty() || spec.name == "identity", ValidationError,
           "filter '" + spec.name + "': transform list is empty");
  for (const auto& t : spec.transforms) {
    switch (t.kind) {
      case TransformKind::kContrast:
      case TransformKind::kSaturation:
        UF_CHECK(t.value >= 0, ValidationError,
                 "filter '" + spec.name + "': factor must be >= 0");
        break;
      case TransformKind::kGaussianBlur:
      case TransformKind::kAdditiveNoise:
        UF_CHECK(t.value >= 0, ValidationError,
                 "filter '" + spec.name + "': sigma must be >= 0");
        break;
      case TransformKind::kVignette:
        UF_CHECK(t.value >= 0 && t.value <= 1, ValidationError,
                 "filter '" + spec.name + "': vignette strength must be in [0,1]");
        break;
      case TransformKind::kToneCurve:
        for (const auto& c : t.curves) validate_curve(c);
        break;
      default:
        break;
    }
  }
}

Image apply_filter(const Image& image, const FilterSpec& spec) {
  UF_CHECK(image.data.size() == image.pixels() * 3, ShapeError,
           "apply_filter: image buffer is not HxWx3");
  validate_spec(spec);
  Image out = image;
  clamp01(out);
  for (const auto& t : spec.transforms) apply_primitive(out, t);
  return out;
}

std::vector<FilterSpec> builtin_filter_bank(uint64_t seed) {
  using P = PrimitiveTransform;
  auto noise_seed = [seed](uint64_t i) { return splitmix64(seed ^ (0x9e37u + i)); };
  std::vector<FilterSpec> bank;

  bank.push_back({"1977",
                  {P::tone_curve({{0, 0.08}, {0.5, 0.58}, {1, 1}},
                                 {{0, 0.04}, {0.5, 0.5}, {1, 0.96}},
                                 {{0, 0.07}, {0.5, 0.52}, {1, 0.9}}),
                   P::contrast(1.1), P::vignette(0.25)}});
  bank.push_back({"amaro",
                  {P::brightness(0.06), P::saturation(1.25), P::vignette(0.2)}});
  bank.push_back({"brannan",
                  {P::contrast(1.25), P::saturation(0.85),
                   P::tone_curve({{0, 0.06}, {1, 1}}, {{0, 0.05}, {1, 0.97}},
                                 {{0, 0.02}, {1, 0.92}})}});
  bank.push_back({"clarendon",
                  {P::contrast(1.2), P::saturation(1.35),
                   P::tone_curve({{0, 0}, {1, 0.98}}, {{0, 0.01}, {1, 1}},
                                 {{0, 0.04}, {1, 1}})}});
  bank.push_back({"gingham",
                  {P::brightness(0.05), P::contrast(0.85), P::saturation(0.8)}});
  bank.push_back({"hudson",
                  {P::tone_curve({{0, 0.02}, {1, 0.9}}, {{0, 0.03}, {1, 0.97}},
                                 {{0, 0.08}, {1, 1}}),
                   P::brightness(-0.03), P::vignette(0.3)}});
  bank.push_back({"juno", {P::contrast(1.15), P::saturation(1.3), P::hue_shift(-8)}});
  bank.push_back({"lark",
                  {P::brightness(0.08), P::saturation(1.1),
                   P::tone_curve({{0, 0.05}, {0.4, 0.45}, {1, 1}},
                                 {{0, 0.05}, {0.4, 0.46}, {1, 1}},
                                 {{0, 0.05}, {0.4, 0.44}, {1, 0.98}})}});
  bank.push_back({"lofi", {P::contrast(1.4), P::saturation(1.3), P::vignette(0.35)}});
  bank.push_back({"nashville",
                  {P::tone_curve({{0, 0.13}, {0.6, 0.65}, {1, 1}},
                                 {{0, 0.08}, {0.6, 0.58}, {1, 0.95}},
                                 {{0, 0.15}, {0.6, 0.55}, {1, 0.85}}),
                   P::contrast(0.9), P::brightness(0.05)}});
  bank.push_back({"perpetua",
                  {P::tone_curve({{0, 0.02}, {1, 0.92}}, {{0, 0.05}, {1, 1}},
                                 {{0, 0.06}, {1, 0.97}}),
                   P::saturation(1.1)}});
  bank.push_back({"sutro",
                  {P::vignette(0.45), P::contrast(1.15), P::saturation(0.7),
                   P::tone_curve({{0, 0}, {1, 0.88}}, {{0, 0}, {1, 0.82}},
                                 {{0, 0}, {1, 0.78}})}});
  bank.push_back({"toaster",
                  {P::vignette(0.5), P::brightness(0.1), P::hue_shift(10),
                   P::additive_noise(0.01, noise_seed(13))}});
  bank.push_back({"valencia",
                  {P::brightness(0.06), P::contrast(1.08),
                   P::tone_curve({{0, 0.06}, {1, 1}}, {{0, 0.04}, {1, 0.98}},
                                 {{0, 0.07}, {1, 0.9}})}});
  bank.push_back({"willow", {P::saturation(0.05), P::brightness(0.04), P::vignette(0.2)}});
  bank.push_back({"xpro2",
                  {P::contrast(1.3), P::vignette(0.4),
                   P::tone_curve({{0, 0.04}, {0.5, 0.56}, {1, 1}},
                                 {{0, 0.03}, {0.5, 0.52}, {1, 0.96}},
                                 {{0, 0.02}, {0.5, 0.46}, {1, 0.86}}),
                   P::additive_noise(0.008, noise_seed(15))}});

  for (const auto& spec : bank) validate_spec(spec);
  return bank;
}

namespace {

const char* kind_name(TransformKind k) {
  switch (k) {
    case TransformKind::kBrightness: return "brightness";
    case TransformKind::kContrast: return "contrast";
    case TransformKind::kSaturation: return "saturation";
    case TransformKind::kHueShift: return "hue_shift";
    case TransformKind::kGaussianBlur: return "gaussian_blur";
    case TransformKind::kVignette: return "vignette";
    case TransformKind::kToneCurve: return "tone_curve";
    case TransformKind::kAdditiveNoise: return "additive_noise";
  }
  return "?";
}

nlohmann::ordered_json curve_to_json(const std::vector<CurvePoint>& pts) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

std::vector<CurvePoint> curve_from_json(const nlohmann::json& arr) {
  std::vector<CurvePoint> pts;
  for (const auto& p : arr) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return pts;
}

}  // namespace

void to_json(nlohmann::ordered_json& j, const FilterSpec& spec) {
  j = nlohmann::ordered_json::object();
  j["name"] = spec.name;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& t : spec.transforms) {
    nlohmann::ordered_json tj;
    tj["type"] = kind_name(t.kind);
    switch (t.kind) {
      case TransformKind::kBrightness: tj["delta"] = t.value; break;
      case TransformKind::kContrast:
      case TransformKind::kSaturation: tj["factor"] = t.value; break;
      case TransformKind::kHueShift: tj["degrees"] = t.value; break;
      case TransformKind::kGaussianBlur: tj["sigma"] = t.value; break;
      case TransformKind::kVignette: tj["strength"] = t.value; break;
      case TransformKind::kToneCurve:
        tj["red"] = curve_to_json(t.curves[0]);
        tj["green"] = curve_to_json(t.curves[1]);
        tj["blue"] = curve_to_json(t.curves[2]);
        break;
      case TransformKind::kAdditiveNoise:
        tj["sigma"] = t.value;
        tj["seed"] = t.seed;
        break;
    }
    arr.push_back(tj);
  }
  j["transforms"] = arr;
}

FilterSpec filter_spec_from_json(const nlohmann::json& j) {
  FilterSpec spec;
  spec.name = j.at("name").get<std::string>();
  for (const auto& tj : j.at("transforms")) {
    const std::string type = tj.at("type").get<std::string>();
    PrimitiveTransform t;
    if (type == "brightness") {
      t = PrimitiveTransform::brightness(tj.at("delta").get<double>());
    } else if (type == "contrast") {
      t = PrimitiveTransform::contrast(tj.at("factor").get<double>());
    } else if (type == "saturation") {
      t = PrimitiveTransform::saturation(tj.at("factor").get<double>());
    } else if (type == "hue_shift") {
      t = PrimitiveTransform::hue_shift(tj.at("degrees").get<double>());
    } else if (type == "gaussian_blur") {
      t = PrimitiveTransform::gaussian_blur(tj.at("sigma").get<double>());
    } else if (type == "vignette") {
      t = PrimitiveTransform::vignette(tj.at("strength").get<double>());
    } else if (type == "tone_curve") {
      t = PrimitiveTransform::tone_curve(curve_from_json(tj.at("red")),
                                         curve_from_json(tj.at("green")),
                                         curve_from_json(tj.at("blue")));
    } else if (type == "additive_noise") {
      t = PrimitiveTransform::additive_noise(tj.at("sigma").get<double>(),
                                             tj.at("seed").get<uint64_t>());
    } else {
      throw ValidationError("unknown transform type: " + type);
    }
    spec.transforms.push_back(std::move(t));
  }
  validate_spec(spec);
  return spec;
}

}  // namespace unfilter::filters
