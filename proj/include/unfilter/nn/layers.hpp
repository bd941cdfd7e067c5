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

#include <string>
#include <vector>

#include "unfilter/core/ops.hpp"
#include "unfilter/core/rng.hpp"

namespace unfilter::nn {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<NamedParam>;

/// Per-channel instance standardization over HxW: (x - mu) / (sigma + eps),
/// population sigma.
Tensor instance_norm(const Tensor& x, double eps = 1e-5);

/// Instance standardization followed by the learned affine: gamma and beta
/// are per-sample per-channel [B,C].
Tensor adain(const Tensor& feature, const Tensor& gamma, const Tensor& beta,
             double eps = 1e-5);

struct Conv2d {
  Tensor weight;  // [OC,C,k,k]
  Tensor bias;    // [OC]
  int stride = 1;
  int pad = 1;

  Conv2d() = default;
  Conv2d(int in_c, int out_c, int k, int stride, int pad, RngStream& init);
  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

struct Linear {
  Tensor weight;  // [out,in]
  Tensor bias;    // [out]

  Linear() = default;
  Linear(int in_dim, int out_dim, RngStream& init, double weight_scale = -1.0);
  Tensor forward(const Tensor& x) const;  // [R,in] -> [R,out]
  void collect(const std::string& prefix, ParamList& out) const;
};

/// Two-layer perceptron with ReLU in between.
struct Mlp2 {
  Linear fc1, fc2;

  Mlp2() = default;
  Mlp2(int in_dim, int hidden, int out_dim, RngStream& init);
  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

/// x + conv2(relu(instance_norm(conv1(x)))), channel-preserving.
struct ResidualBlock {
  Conv2d conv1, conv2;

  ResidualBlock() = default;
  ResidualBlock(int channels, RngStream& init);
  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

int64_t param_count(const ParamList& params);

}  // namespace unfilter::nn
