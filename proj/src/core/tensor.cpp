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

#include "unfilter/core/tensor.hpp"

#include <numeric>
#include <sstream>

#include "unfilter/core/autograd.hpp"

namespace unfilter {

int64_t shape_numel(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  Tensor t;
  t.impl_ = std::make_shared<TensorImpl>();
  t.impl_->shape = std::move(shape);
  t.impl_->numel = shape_numel(t.impl_->shape);
  t.impl_->storage = std::make_shared<Buffer>(t.impl_->numel, value);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data,
                         bool requires_grad) {
  UF_CHECK(shape_numel(shape) == static_cast<int64_t>(data.size()), ShapeError,
           "from_data: element count mismatch for shape " + shape_str(shape));
  Tensor t;
  t.impl_ = std::make_shared<TensorImpl>();
  t.impl_->shape = std::move(shape);
  t.impl_->numel = shape_numel(t.impl_->shape);
  t.impl_->storage = std::make_shared<Buffer>(data);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from_buffer(std::vector<int> shape, Buffer data,
                           bool requires_grad) {
  UF_CHECK(shape_numel(shape) == data.size(), ShapeError,
           "from_buffer: element count mismatch for shape " + shape_str(shape));
  Tensor t;
  t.impl_ = std::make_shared<TensorImpl>();
  t.impl_->shape = std::move(shape);
  t.impl_->numel = shape_numel(t.impl_->shape);
  t.impl_->storage = std::make_shared<Buffer>(std::move(data));
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value) { return full({1}, value); }

const std::vector<int>& Tensor::shape() const { return impl_->shape; }
int Tensor::dim(int i) const { return impl_->shape.at(i); }
int Tensor::ndim() const { return static_cast<int>(impl_->shape.size()); }
int64_t Tensor::numel() const { return impl_->numel; }

double* Tensor::data() { return impl_->storage->data(); }
const double* Tensor::data() const { return impl_->storage->data(); }

double Tensor::item() const {
  UF_CHECK(numel() == 1, ShapeError, "item() on non-scalar " + shape_str(shape()));
  return (*impl_->storage)[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool value) {
  UF_CHECK(!impl_->grad_fn || !value, ValidationError,
           "set_requires_grad on non-leaf tensor");
  impl_->requires_grad = value;
}

const std::shared_ptr<Node>& Tensor::grad_fn() const { return impl_->grad_fn; }

Tensor Tensor::grad() const {
  return impl_->grad ? *impl_->grad : Tensor();
}

void Tensor::set_grad(const Tensor& g) {
  impl_->grad = std::make_shared<Tensor>(g);
}

void Tensor::zero_grad() { impl_->grad.reset(); }

Tensor Tensor::detach() const {
  Tensor t;
  t.impl_ = std::make_shared<TensorImpl>();
  t.impl_->shape = impl_->shape;
  t.impl_->numel = impl_->numel;
  t.impl_->storage = impl_->storage;
  t.impl_->requires_grad = false;
  return t;
}

Tensor Tensor::view(std::vector<int> new_shape) const {
  UF_CHECK(!impl_->grad_fn && !impl_->requires_grad, ValidationError,
           "view() is for graph-free tensors; use ops::reshape in graphs");
  UF_CHECK(shape_numel(new_shape) == numel(), ShapeError,
           "view: numel mismatch " + shape_str(new_shape));
  Tensor t;
  t.impl_ = std::make_shared<TensorImpl>();
  t.impl_->shape = std::move(new_shape);
  t.impl_->numel = impl_->numel;
  t.impl_->storage = impl_->storage;
  return t;
}

Tensor Tensor::clone_detached() const {
  return Tensor::from_buffer(impl_->shape, *impl_->storage);
}

}  // namespace unfilter
