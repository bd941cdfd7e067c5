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

#include "unfilter/core/autograd.hpp"
#include "unfilter/core/tensor.hpp"

namespace unfilter::ops {

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor neg(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor recip(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor square(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);

// ---- reductions (each paired with the expand that is its adjoint) ----
Tensor sum_all(const Tensor& a);                           // -> [1]
Tensor rows_sum(const Tensor& a);                          // [R,C] -> [R]
Tensor cols_sum(const Tensor& a);                          // [R,C] -> [C]
Tensor hw_sum(const Tensor& a);                            // [B,C,H,W] -> [B,C]
Tensor channel_sum(const Tensor& a);                       // [B,C,H,W] -> [C]
Tensor batch_sum(const Tensor& a);                         // [B,...] -> [B]
Tensor row_max(const Tensor& a);                           // [R,C] -> [R], detached

Tensor full_expand(const Tensor& s, std::vector<int> shape);      // [1] -> shape
Tensor rows_expand(const Tensor& v, int cols);                    // [R] -> [R,C]
Tensor cols_expand(const Tensor& v, int rows);                    // [C] -> [R,C]
Tensor hw_expand(const Tensor& v, int h, int w);                  // [B,C] -> [B,C,H,W]
Tensor channel_expand(const Tensor& v, int b, int h, int w);      // [C] -> [B,C,H,W]
Tensor batch_expand(const Tensor& v, std::vector<int> shape);     // [B] -> [B,...]

Tensor mean_all(const Tensor& a);
Tensor hw_mean(const Tensor& a);

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false,
              bool trans_b = false);
Tensor bmm(const Tensor& a, const Tensor& b);     // [R,M,K]x[R,K,N] -> [R,M,N]
Tensor transpose_last2(const Tensor& a);          // [R,M,N] -> [R,N,M]

// fused x[B,C,H,W] + bias[C] broadcast (single pass)
Tensor bias_add_channel(const Tensor& x, const Tensor& bias);

// ---- convolution (zero padding) ----
Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int pad);
Tensor conv2d_grad_input_op(const Tensor& gy, const Tensor& w, int stride,
                            int pad, int in_h, int in_w);
Tensor conv2d_grad_weight_op(const Tensor& x, const Tensor& gy, int stride,
                             int pad, int kh, int kw);

// ---- spatial / structural ----
Tensor upsample_nearest2(const Tensor& x);        // [B,C,H,W] -> [B,C,2H,2W]
Tensor halve_sum2(const Tensor& x);               // [B,C,2H,2W] -> [B,C,H,W]
Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& x, int c0, int len);
Tensor channel_zero_pad(const Tensor& x, int c0, int c_total);
Tensor reshape(const Tensor& x, std::vector<int> shape);

// ---- indexing ----
Tensor gather_hw(const Tensor& x, std::vector<int> idx);           // -> [B,T,C]
Tensor scatter_hw(const Tensor& g, std::vector<int> idx, int h, int w);
Tensor gather_rows(const Tensor& x, std::vector<int> idx);         // -> [n,C]
Tensor scatter_add_rows(const Tensor& g, std::vector<int> idx, int rows);
Tensor bdiag(const Tensor& x);                     // [B,T,T] -> [B,T]
Tensor bdiag_expand(const Tensor& v, int t);       // [B,T] -> [B,T,T]
Tensor col_slice(const Tensor& x, int j);          // [R,C] -> [R]
Tensor col_scatter(const Tensor& v, int j, int cols);
Tensor triu_flatten(const Tensor& x);              // [R,K,K] -> [R,K(K+1)/2]
Tensor triu_unflatten(const Tensor& v, int k);

// ---- composites ----
Tensor logsumexp_rows(const Tensor& x);            // [R,C] -> [R], stabilized
Tensor l2_normalize_rows(const Tensor& x, double eps = 1e-12);
Tensor row_dot(const Tensor& a, const Tensor& b);  // [R,C],[R,C] -> [R]

}  // namespace unfilter::ops
