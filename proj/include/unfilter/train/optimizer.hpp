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

#include "unfilter/nn/layers.hpp"

namespace unfilter::train {

/// Adam over one parameter group. Parameters with no accumulated gradient
/// are treated as having zero gradient.
class Adam {
 public:
  Adam(nn::ParamList params, double lr, double beta1, double beta2, double eps);

  void step();
  void zero_grad();
  double lr() const { return lr_; }
  int64_t step_count() const { return t_; }
  const nn::ParamList& params() const { return params_; }

  // moment access for checkpointing
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  void restore(int64_t t, std::vector<std::vector<double>> m,
               std::vector<std::vector<double>> v);

 private:
  nn::ParamList params_;
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace unfilter::train
