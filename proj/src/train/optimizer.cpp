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

#include "unfilter/train/optimizer.hpp"

#include <cmath>

namespace unfilter::train {

Adam::Adam(nn::ParamList params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor param = params_[i].tensor;
    Tensor grad = param.grad();
    const int64_t n = param.numel();
    double* p = param.data();
    const double* g = grad.defined() ? grad.data() : nullptr;
    double* m = m_[i].data();
    double* v = v_[i].data();
    for (int64_t k = 0; k < n; ++k) {
      const double gk = g ? g[k] : 0.0;
      m[k] = beta1_ * m[k] + (1 - beta1_) * gk;
      v[k] = beta2_ * v[k] + (1 - beta2_) * gk * gk;
      const double mh = m[k] / bc1;
      const double vh = v[k] / bc2;
      p[k] -= lr_ * mh / (std::sqrt(vh) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

void Adam::restore(int64_t t, std::vector<std::vector<double>> m,
                   std::vector<std::vector<double>> v) {
  UF_CHECK(m.size() == params_.size() && v.size() == params_.size(),
           ValidationError, "Adam::restore: group size mismatch");
  for (size_t i = 0; i < params_.size(); ++i) {
    UF_CHECK(m[i].size() == static_cast<size_t>(params_[i].tensor.numel()),
             ValidationError, "Adam::restore: moment size mismatch");
  }
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace unfilter::train
