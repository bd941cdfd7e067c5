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

#include "unfilter/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace unfilter::metrics {

namespace {

void check_shapes(const Image& a, const Image& b, const char* name) {
  UF_CHECK(a.same_shape(b), ShapeError,
           std::string(name) + ": image shape mismatch");
}

// separable Gaussian filtering, valid region only
std::vector<double> gaussian_valid(const std::vector<double>& plane, int h, int w,
                                   int window, double sigma) {
  const int r = window / 2;
  std::vector<double> kernel(window);
  double norm = 0;
  for (int i = 0; i < window; ++i) {
    const double d = i - r;
    kernel[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    norm += kernel[i];
  }
  for (double& k : kernel) k /= norm;

  const int vw = w - window + 1;
  const int vh = h - window + 1;
  std::vector<double> horiz(static_cast<size_t>(h) * vw);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < vw; ++x) {
      double s = 0;
      for (int i = 0; i < window; ++i) s += kernel[i] * plane[static_cast<size_t>(y) * w + x + i];
      horiz[static_cast<size_t>(y) * vw + x] = s;
    }
  }
  std::vector<double> out(static_cast<size_t>(vh) * vw);
  for (int y = 0; y < vh; ++y) {
    for (int x = 0; x < vw; ++x) {
      double s = 0;
      for (int i = 0; i < window; ++i) s += kernel[i] * horiz[static_cast<size_t>(y + i) * vw + x];
      out[static_cast<size_t>(y) * vw + x] = s;
    }
  }
  return out;
}

constexpr double kDeg2Rad = M_PI / 180.0;

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_shapes(a, b, "psnr");
  double se = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.data.size());
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b, int window, double sigma) {
  check_shapes(a, b, "ssim");
  UF_CHECK(a.height >= window && a.width >= window, ShapeError,
           "ssim: image smaller than window");
  const int h = a.height, w = a.width;
  std::vector<double> ya(static_cast<size_t>(h) * w), yb(ya.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      ya[static_cast<size_t>(y) * w + x] = luma(a.at(y, x, 0), a.at(y, x, 1), a.at(y, x, 2));
      yb[static_cast<size_t>(y) * w + x] = luma(b.at(y, x, 0), b.at(y, x, 1), b.at(y, x, 2));
    }
  }
  std::vector<double> aa(ya.size()), bb(ya.size()), ab(ya.size());
  for (size_t i = 0; i < ya.size(); ++i) {
    aa[i] = ya[i] * ya[i];
    bb[i] = yb[i] * yb[i];
    ab[i] = ya[i] * yb[i];
  }
  const auto mu_a = gaussian_valid(ya, h, w, window, sigma);
  const auto mu_b = gaussian_valid(yb, h, w, window, sigma);
  const auto m_aa = gaussian_valid(aa, h, w, window, sigma);
  const auto m_bb = gaussian_valid(bb, h, w, window, sigma);
  const auto m_ab = gaussian_valid(ab, h, w, window, sigma);

  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  double total = 0;
  for (size_t i = 0; i < mu_a.size(); ++i) {
    const double va = m_aa[i] - mu_a[i] * mu_a[i];
    const double vb = m_bb[i] - mu_b[i] * mu_b[i];
    const double cov = m_ab[i] - mu_a[i] * mu_b[i];
    const double num = (2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2);
    const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
    total += num / den;
  }
  return total / static_cast<double>(mu_a.size());
}

void srgb_to_lab(double r, double g, double b, double lab[3]) {
  auto linearize = [](double v) {
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
  };
  const double rl = linearize(std::clamp(r, 0.0, 1.0));
  const double gl = linearize(std::clamp(g, 0.0, 1.0));
  const double bl = linearize(std::clamp(b, 0.0, 1.0));
  // sRGB -> XYZ, D65
  const double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
  const double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
  const double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
  constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
  auto f = [](double t) {
    constexpr double delta3 = (6.0 / 29) * (6.0 / 29) * (6.0 / 29);
    return t > delta3 ? std::cbrt(t) : t / (3 * (6.0 / 29) * (6.0 / 29)) + 4.0 / 29;
  };
  const double fx = f(x / xn), fy = f(y / yn), fz = f(z / zn);
  lab[0] = 116 * fy - 16;
  lab[1] = 500 * (fx - fy);
  lab[2] = 200 * (fy - fz);
}

double ciede2000_lab(const double lab1[3], const double lab2[3]) {
  const double l1 = lab1[0], a1 = lab1[1], b1 = lab1[2];
  const double l2 = lab2[0], a2 = lab2[1], b2 = lab2[2];
  const double c1 = std::sqrt(a1 * a1 + b1 * b1);
  const double c2 = std::sqrt(a2 * a2 + b2 * b2);
  const double c_bar = (c1 + c2) / 2;
  const double c_bar7 = std::pow(c_bar, 7.0);
  const double g = 0.5 * (1 - std::sqrt(c_bar7 / (c_bar7 + std::pow(25.0, 7.0))));
  const double a1p = (1 + g) * a1;
  const double a2p = (1 + g) * a2;
  const double c1p = std::sqrt(a1p * a1p + b1 * b1);
  const double c2p = std::sqrt(a2p * a2p + b2 * b2);
  auto hue_deg = [](double bb, double ap) {
    if (bb == 0 && ap == 0) return 0.0;
    double h = std::atan2(bb, ap) / kDeg2Rad;
    return h < 0 ? h + 360 : h;
  };
  const double h1p = hue_deg(b1, a1p);
  const double h2p = hue_deg(b2, a2p);

  const double dlp = l2 - l1;
  const double dcp = c2p - c1p;
  double dhp = 0;
  if (c1p * c2p != 0) {
    dhp = h2p - h1p;
    if (dhp > 180) dhp -= 360;
    else if (dhp < -180) dhp += 360;
  }
  const double dhp_big = 2 * std::sqrt(c1p * c2p) * std::sin(dhp / 2 * kDeg2Rad);

  const double l_bar = (l1 + l2) / 2;
  const double cp_bar = (c1p + c2p) / 2;
  double hp_bar = h1p + h2p;
  if (c1p * c2p != 0) {
    if (std::abs(h1p - h2p) <= 180) {
      hp_bar = (h1p + h2p) / 2;
    } else if (h1p + h2p < 360) {
      hp_bar = (h1p + h2p + 360) / 2;
    } else {
      hp_bar = (h1p + h2p - 360) / 2;
    }
  }
  const double t = 1 - 0.17 * std::cos((hp_bar - 30) * kDeg2Rad) +
                   0.24 * std::cos(2 * hp_bar * kDeg2Rad) +
                   0.32 * std::cos((3 * hp_bar + 6) * kDeg2Rad) -
                   0.20 * std::cos((4 * hp_bar - 63) * kDeg2Rad);
  const double dtheta = 30 * std::exp(-((hp_bar - 275) / 25) * ((hp_bar - 275) / 25));
  const double cp_bar7 = std::pow(cp_bar, 7.0);
  const double rc = 2 * std::sqrt(cp_bar7 / (cp_bar7 + std::pow(25.0, 7.0)));
  const double lm50 = (l_bar - 50) * (l_bar - 50);
  const double sl = 1 + 0.015 * lm50 / std::sqrt(20 + lm50);
  const double sc = 1 + 0.045 * cp_bar;
  const double sh = 1 + 0.015 * cp_bar * t;
  const double rt = -std::sin(2 * dtheta * kDeg2Rad) * rc;

  const double tl = dlp / sl;
  const double tc = dcp / sc;
  const double th = dhp_big / sh;
  return std::sqrt(tl * tl + tc * tc + th * th + rt * tc * th);
}

double delta_e_2000(const Image& a, const Image& b) {
  check_shapes(a, b, "delta_e_2000");
  double total = 0;
  for (size_t p = 0; p < a.pixels(); ++p) {
    double lab1[3], lab2[3];
    srgb_to_lab(a.data[p * 3], a.data[p * 3 + 1], a.data[p * 3 + 2], lab1);
    srgb_to_lab(b.data[p * 3], b.data[p * 3 + 1], b.data[p * 3 + 2], lab2);
    total += ciede2000_lab(lab1, lab2);
  }
  return total / static_cast<double>(a.pixels());
}

Image residual_image(const Image& output, const Image& original) {
  check_shapes(output, original, "residual_image");
  Image out(output.height, output.width);
  double max_v = 0;
  for (size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = std::abs(output.data[i] - original.data[i]);
    max_v = std::max(max_v, out.data[i]);
  }
  if (max_v > 0) {
    for (double& v : out.data) v /= max_v;
  }
  return out;
}

}  // namespace unfilter::metrics
