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

#include <functional>
#include <memory>
#include <vector>

#include "unfilter/core/tensor.hpp"

namespace unfilter {

/// Backward rule of one op. Receives the gradient w.r.t. the op output, the
/// op inputs, and a per-input flag saying whether that gradient is needed.
/// Entries whose flag is false may be returned as undefined Tensors.
/// Rules are written in terms of the ops API, so gradients are themselves
/// differentiable whenever grad mode is enabled during the backward pass.
using BackwardFn = std::function<std::vector<Tensor>(
    const Tensor& grad_out, const std::vector<Tensor>& inputs,
    const std::vector<char>& needs)>;

class Node {
 public:
  Node(std::vector<Tensor> inputs, const char* name, BackwardFn backward)
      : inputs_(std::move(inputs)), name_(name), backward_(std::move(backward)) {}

  const std::vector<Tensor>& inputs() const { return inputs_; }
  const char* name() const { return name_; }
  std::vector<Tensor> apply_backward(const Tensor& grad_out,
                                     const std::vector<char>& needs) const {
    return backward_(grad_out, inputs_, needs);
  }

 private:
  std::vector<Tensor> inputs_;
  const char* name_;
  BackwardFn backward_;
};

/// Thread-local switch controlling whether ops record graph history.
struct GradMode {
  static bool enabled();
  static void set(bool value);
};

class NoGradGuard {
 public:
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set(false); }
  ~NoGradGuard() { GradMode::set(prev_); }

 private:
  bool prev_;
};

class GradEnableGuard {
 public:
  GradEnableGuard() : prev_(GradMode::enabled()) { GradMode::set(true); }
  ~GradEnableGuard() { GradMode::set(prev_); }

 private:
  bool prev_;
};

/// Builds an op result: wraps the forward data and, when grad mode is on and
/// any input requires grad, records the backward rule.
Tensor make_op(std::vector<int> shape, Buffer data, std::vector<Tensor> inputs,
               const char* name, BackwardFn backward);

namespace autograd {

/// Accumulates d(root)/d(leaf) into .grad of every requires-grad leaf.
/// `root` must be a single-element tensor.
void backward(const Tensor& root);

/// Returns d(root)/d(wrt[i]) without touching .grad buffers. With
/// `create_graph` the returned tensors carry history, so they can be
/// differentiated again. Targets unreachable from root get undefined Tensors
/// (callers treat those as exact zeros).
std::vector<Tensor> grad(const Tensor& root, const std::vector<Tensor>& wrt,
                         bool create_graph);

}  // namespace autograd
}  // namespace unfilter
