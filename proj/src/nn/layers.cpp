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

#include "unfilter/nn/layers.hpp"

#include <cmath>

namespace unfilter::nn {

namespace o = ::unfilter::ops;

namespace {

Tensor randn(std::vector<int> shape, double stddev, RngStream& rng) {
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = stddev * rng.normal();
  return Tensor::from_data(std::move(shape), std::move(data), true);
}

}  // namespace

Tensor instance_norm(const Tensor& x, double eps) {
  UF_CHECK(x.ndim() == 4, ShapeError, "instance_norm: want [B,C,H,W]");
  UF_CHECK(x.dim(2) * x.dim(3) >= 2, ShapeError, "instance_norm: needs H*W >= 2");
  const int h = x.dim(2), w = x.dim(3);
  Tensor mu = o::hw_mean(x);
  Tensor centered = o::sub(x, o::hw_expand(mu, h, w));
  Tensor var = o::hw_mean(o::square(centered));
  Tensor inv = o::recip(o::add_scalar(o::sqrt(var), eps));
  return o::mul(centered, o::hw_expand(inv, h, w));
}

Tensor adain(const Tensor& feature, const Tensor& gamma, const Tensor& beta,
             double eps) {
  UF_CHECK(gamma.ndim() == 2 && beta.ndim() == 2, ShapeError,
           "adain: gamma/beta want [B,C]");
  UF_CHECK(gamma.dim(0) == feature.dim(0) && gamma.dim(1) == feature.dim(1),
           ShapeError, "adain: gamma shape mismatch");
  const int h = feature.dim(2), w = feature.dim(3);
  Tensor normalized = instance_norm(feature, eps);
  return o::add(o::mul(normalized, o::hw_expand(gamma, h, w)),
                o::hw_expand(beta, h, w));
}

Conv2d::Conv2d(int in_c, int out_c, int k, int stride_, int pad_, RngStream& init)
    : stride(stride_), pad(pad_) {
  const double stddev = std::sqrt(2.0 / (in_c * k * k));
  weight = randn({out_c, in_c, k, k}, stddev, init);
  bias = Tensor::zeros({out_c}, true);
}

Tensor Conv2d::forward(const Tensor& x) const {
  return o::bias_add_channel(o::conv2d(x, weight, stride, pad), bias);
}

void Conv2d::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

Linear::Linear(int in_dim, int out_dim, RngStream& init, double weight_scale) {
  const double stddev =
      weight_scale > 0 ? weight_scale : std::sqrt(2.0 / in_dim);
  weight = randn({out_dim, in_dim}, stddev, init);
  bias = Tensor::zeros({out_dim}, true);
}

Tensor Linear::forward(const Tensor& x) const {
  Tensor y = o::matmul(x, weight, false, true);  // [R,in]x[out,in]^T
  return o::add(y, o::cols_expand(bias, y.dim(0)));
}

void Linear::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

Mlp2::Mlp2(int in_dim, int hidden, int out_dim, RngStream& init)
    : fc1(in_dim, hidden, init), fc2(hidden, out_dim, init) {}

Tensor Mlp2::forward(const Tensor& x) const {
  return fc2.forward(o::relu(fc1.forward(x)));
}

void Mlp2::collect(const std::string& prefix, ParamList& out) const {
  fc1.collect(prefix + ".fc1", out);
  fc2.collect(prefix + ".fc2", out);
}

ResidualBlock::ResidualBlock(int channels, RngStream& init)
    : conv1(channels, channels, 3, 1, 1, init),
      conv2(channels, channels, 3, 1, 1, init) {}

Tensor ResidualBlock::forward(const Tensor& x) const {
  Tensor h = conv1.forward(x);
  h = o::relu(instance_norm(h));
  h = conv2.forward(h);
  return o::add(x, h);
}

void ResidualBlock::collect(const std::string& prefix, ParamList& out) const {
  conv1.collect(prefix + ".conv1", out);
  conv2.collect(prefix + ".conv2", out);
}

int64_t param_count(const ParamList& params) {
  int64_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

}  // namespace unfilter::nn
