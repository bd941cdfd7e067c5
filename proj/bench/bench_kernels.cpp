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

// Compares the OpenMP kernels against the serial references on the shapes
// the training loop actually hits. Run: bench_kernels [repeats]

#include <omp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "unfilter/core/kernels.hpp"
#include "unfilter/core/rng.hpp"

using namespace unfilter;

namespace {

double time_ms(const std::function<void()>& fn, int repeats) {
  fn();  // warmup
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < repeats; ++i) fn();
  const auto end = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(end - start).count() / repeats;
}

std::vector<double> random_vec(size_t n, RngStream& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

struct ConvShape {
  int b, c, h, w, oc, k, stride, pad;
  double flops() const {
    const int oh = kernels::conv_out_dim(h, k, stride, pad);
    const int ow = kernels::conv_out_dim(w, k, stride, pad);
    return 2.0 * b * oc * oh * ow * c * k * k;
  }
};

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
  RngStream rng(7);
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-34s %10s %10s %8s\n", "kernel", "serial ms", "omp ms", "speedup");

  const std::vector<ConvShape> conv_shapes = {
      {4, 3, 64, 64, 16, 3, 2, 1},    // encoder level 0
      {4, 16, 32, 32, 32, 3, 2, 1},   // encoder level 1
      {4, 16, 64, 64, 16, 3, 1, 1},   // decoder full-res conv
      {4, 128, 8, 8, 64, 3, 1, 1},    // decoder fuse conv
  };
  for (const auto& s : conv_shapes) {
    const int oh = kernels::conv_out_dim(s.h, s.k, s.stride, s.pad);
    const int ow = kernels::conv_out_dim(s.w, s.k, s.stride, s.pad);
    auto x = random_vec(static_cast<size_t>(s.b) * s.c * s.h * s.w, rng);
    auto w = random_vec(static_cast<size_t>(s.oc) * s.c * s.k * s.k, rng);
    std::vector<double> y(static_cast<size_t>(s.b) * s.oc * oh * ow);
    const double t_serial = time_ms(
        [&] {
          kernels::serial::conv2d_forward(x.data(), w.data(), y.data(), s.b, s.c,
                                          s.h, s.w, s.oc, s.k, s.k, s.stride, s.pad);
        },
        repeats);
    const double t_omp = time_ms(
        [&] {
          kernels::conv2d_forward(x.data(), w.data(), y.data(), s.b, s.c, s.h,
                                  s.w, s.oc, s.k, s.k, s.stride, s.pad);
        },
        repeats);
    char label[64];
    std::snprintf(label, sizeof(label), "conv %dx%dx%dx%d oc=%d s=%d", s.b, s.c,
                  s.h, s.w, s.oc, s.stride);
    std::printf("%-34s %10.3f %10.3f %7.2fx  (%.2f GFLOP/s omp)\n", label, t_serial,
                t_omp, t_serial / t_omp, s.flops() / (t_omp * 1e6));
  }

  const std::vector<std::array<int, 3>> gemm_shapes = {
      {64, 1024, 288}, {128, 256, 576}, {256, 64, 64}};
  for (const auto& g : gemm_shapes) {
    const int m = g[0], n = g[1], k = g[2];
    auto a = random_vec(static_cast<size_t>(m) * k, rng);
    auto b = random_vec(static_cast<size_t>(k) * n, rng);
    std::vector<double> c(static_cast<size_t>(m) * n);
    const double t_serial = time_ms(
        [&] { kernels::serial::gemm(false, false, m, n, k, a.data(), b.data(), c.data()); },
        repeats);
    const double t_omp = time_ms(
        [&] { kernels::gemm(false, false, m, n, k, a.data(), b.data(), c.data()); },
        repeats);
    char label[64];
    std::snprintf(label, sizeof(label), "gemm %dx%dx%d", m, n, k);
    std::printf("%-34s %10.3f %10.3f %7.2fx  (%.2f GFLOP/s omp)\n", label, t_serial,
                t_omp, t_serial / t_omp, 2.0 * m * n * k / (t_omp * 1e6));
  }

  {
    auto x = random_vec(1 << 22, rng);
    const double t_serial =
        time_ms([&] { kernels::serial::reduce_sum(x.data(), x.size()); }, repeats);
    const double t_omp =
        time_ms([&] { kernels::reduce_sum(x.data(), x.size()); }, repeats);
    std::printf("%-34s %10.3f %10.3f %7.2fx\n", "reduce_sum 4M", t_serial, t_omp,
                t_serial / t_omp);
  }
  return 0;
}
