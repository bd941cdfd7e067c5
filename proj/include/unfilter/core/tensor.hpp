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

#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "unfilter/core/common.hpp"

namespace unfilter {

class Node;
struct TensorImpl;

/// Flat double buffer. Unlike std::vector, fresh buffers are uninitialized:
/// op kernels overwrite every element anyway.
class Buffer {
 public:
  Buffer() = default;
  explicit Buffer(int64_t n) : data_(new double[n]), size_(n) {}
  Buffer(int64_t n, double fill) : Buffer(n) {
    std::fill(data_.get(), data_.get() + n, fill);
  }
  Buffer(const Buffer& o) : Buffer(o.size_) {
    std::memcpy(data_.get(), o.data_.get(), sizeof(double) * size_);
  }
  Buffer(Buffer&&) = default;
  Buffer& operator=(Buffer&& o) = default;
  Buffer& operator=(const Buffer& o) {
    if (this != &o) assign(o.data_.get(), o.size_);
    return *this;
  }
  explicit Buffer(const std::vector<double>& v) : Buffer(v.size()) {
    std::memcpy(data_.get(), v.data(), sizeof(double) * size_);
  }
  void assign(const double* src, int64_t n) {
    if (size_ != n) {
      data_.reset(new double[n]);
      size_ = n;
    }
    std::memcpy(data_.get(), src, sizeof(double) * n);
  }
  double* data() { return data_.get(); }
  const double* data() const { return data_.get(); }
  double& operator[](int64_t i) { return data_[i]; }
  double operator[](int64_t i) const { return data_[i]; }
  int64_t size() const { return size_; }

 private:
  std::unique_ptr<double[]> data_;
  int64_t size_ = 0;
};

/// Dense row-major double tensor with reverse-mode autodiff hooks.
/// Copying a Tensor copies a handle; the buffer is shared.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
  static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor from_buffer(std::vector<int> shape, Buffer data,
                            bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const;
  int dim(int i) const;
  int ndim() const;
  int64_t numel() const;

  double* data();
  const double* data() const;
  double item() const;  // numel()==1 only

  bool requires_grad() const;
  void set_requires_grad(bool value);
  const std::shared_ptr<Node>& grad_fn() const;
  bool is_leaf() const { return !grad_fn(); }

  /// Accumulated gradient of a leaf after backward(); undefined Tensor if none.
  Tensor grad() const;
  void set_grad(const Tensor& g);
  void zero_grad();

  /// Same buffer, no graph history.
  Tensor detach() const;
  /// Same buffer, new shape (element count must match). Carries gradient.
  Tensor view(std::vector<int> new_shape) const;
  /// Deep copy of the buffer, detached.
  Tensor clone_detached() const;

  TensorImpl* unsafe_impl() const { return impl_.get(); }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

struct TensorImpl {
  std::vector<int> shape;
  int64_t numel = 0;  // cached; shapes are immutable after construction
  std::shared_ptr<Buffer> storage;
  bool requires_grad = false;
  std::shared_ptr<Node> grad_fn;
  std::shared_ptr<Tensor> grad;  // leaf accumulation buffer
};

int64_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

}  // namespace unfilter
