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

#include <cstdint>

// Hot numeric kernels. The default entry points are OpenMP-parallel; the
// kernels::serial namespace keeps straightforward single-threaded reference
// implementations used by the test suite and the benchmark target.
//
// Every output element is accumulated by exactly one thread in a fixed
// order, so results are bit-identical across thread counts and runs.

namespace unfilter::kernels {

// C[M,N] = A op(A)[M,K] * op(B)[K,N], row-major, C overwritten.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, const double* a,
          const double* b, double* c);

// Batched C[r] = A[r] * B[r] over r independent blocks, one parallel region.
void bmm(int blocks, int m, int n, int k, const double* a, const double* b,
         double* c);

// x[B,C,H,W] * w[OC,C,KH,KW] -> y[B,OC,OH,OW], zero padding.
void conv2d_forward(const double* x, const double* w, double* y, int b, int c,
                    int h, int w_in, int oc, int kh, int kw, int stride,
                    int pad);
// gx[B,C,H,W] from gy[B,OC,OH,OW] and w.
void conv2d_grad_input(const double* gy, const double* w, double* gx, int b,
                       int c, int h, int w_in, int oc, int kh, int kw,
                       int stride, int pad);
// gw[OC,C,KH,KW] from x and gy.
void conv2d_grad_weight(const double* x, const double* gy, double* gw, int b,
                        int c, int h, int w_in, int oc, int kh, int kw,
                        int stride, int pad);

// Deterministic chunked sum (fixed combine order, any thread count).
double reduce_sum(const double* x, int64_t n);

int conv_out_dim(int in, int k, int stride, int pad);

namespace serial {
void gemm(bool trans_a, bool trans_b, int m, int n, int k, const double* a,
          const double* b, double* c);
void conv2d_forward(const double* x, const double* w, double* y, int b, int c,
                    int h, int w_in, int oc, int kh, int kw, int stride,
                    int pad);
void conv2d_grad_input(const double* gy, const double* w, double* gx, int b,
                       int c, int h, int w_in, int oc, int kh, int kw,
                       int stride, int pad);
void conv2d_grad_weight(const double* x, const double* gy, double* gw, int b,
                        int c, int h, int w_in, int oc, int kh, int kw,
                        int stride, int pad);
double reduce_sum(const double* x, int64_t n);
}  // namespace serial

}  // namespace unfilter::kernels
