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

#include "unfilter/core/autograd.hpp"

#include <unordered_map>
#include <unordered_set>

#include "unfilter/core/ops.hpp"

namespace unfilter {

namespace {
thread_local bool g_grad_enabled = true;
}

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set(bool value) { g_grad_enabled = value; }

Tensor make_op(std::vector<int> shape, Buffer data, std::vector<Tensor> inputs,
               const char* name, BackwardFn backward) {
  Tensor out = Tensor::from_buffer(std::move(shape), std::move(data));
  if (GradMode::enabled()) {
    bool any = false;
    for (const auto& in : inputs) {
      if (in.defined() && in.requires_grad()) {
        any = true;
        break;
      }
    }
    if (any) {
      auto* impl = out.unsafe_impl();
      impl->grad_fn = std::make_shared<Node>(std::move(inputs), name, std::move(backward));
      impl->requires_grad = true;
    }
  }
  return out;
}

namespace autograd {
namespace {

// Post-order over the tensor DAG (children = grad_fn inputs).
std::vector<Tensor> topo_order(const Tensor& root) {
  std::vector<Tensor> order;
  std::unordered_set<TensorImpl*> visited;
  std::vector<std::pair<Tensor, size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root.unsafe_impl());
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    const auto& fn = t.grad_fn();
    if (fn && next < fn->inputs().size()) {
      const Tensor& child = fn->inputs()[next++];
      if (child.defined() && (child.grad_fn() || child.requires_grad()) &&
          !visited.count(child.unsafe_impl())) {
        visited.insert(child.unsafe_impl());
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(t);
      stack.pop_back();
    }
  }
  return order;
}

void run_engine(const Tensor& root,
                const std::function<bool(const Tensor&)>& needs_grad,
                const std::unordered_set<TensorImpl*>* keep,
                std::unordered_map<TensorImpl*, Tensor>& grads) {
  UF_CHECK(root.numel() == 1, ValidationError,
           "backward root must be a single element, got " + shape_str(root.shape()));
  std::vector<Tensor> order = topo_order(root);
  grads[root.unsafe_impl()] = Tensor::full({1}, 1.0).view(root.shape());
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Tensor& t = *it;
    const auto& fn = t.grad_fn();
    if (!fn) continue;
    auto git = grads.find(t.unsafe_impl());
    if (git == grads.end()) continue;
    const Tensor g = git->second;
    if (!keep || !keep->count(t.unsafe_impl())) grads.erase(git);
    const auto& inputs = fn->inputs();
    std::vector<char> needs(inputs.size(), 0);
    bool any = false;
    for (size_t i = 0; i < inputs.size(); ++i) {
      if (inputs[i].defined() && needs_grad(inputs[i])) {
        needs[i] = 1;
        any = true;
      }
    }
    if (!any) continue;
    std::vector<Tensor> gin = fn->apply_backward(g, needs);
    UF_CHECK(gin.size() == inputs.size(), ValidationError,
             std::string("backward of ") + fn->name() + " returned wrong arity");
    for (size_t i = 0; i < inputs.size(); ++i) {
      if (!needs[i] || !gin[i].defined()) continue;
      UF_CHECK(gin[i].shape() == inputs[i].shape(), ShapeError,
               std::string("backward of ") + fn->name() + " input " +
                   std::to_string(i) + ": grad shape " + shape_str(gin[i].shape()) +
                   " vs " + shape_str(inputs[i].shape()));
      auto slot = grads.find(inputs[i].unsafe_impl());
      if (slot == grads.end()) {
        grads[inputs[i].unsafe_impl()] = gin[i];
      } else {
        slot->second = ops::add(slot->second, gin[i]);
      }
    }
  }
}

}  // namespace

void backward(const Tensor& root) {
  NoGradGuard no_grad;
  std::unordered_map<TensorImpl*, Tensor> grads;
  run_engine(root, [](const Tensor& t) { return t.requires_grad(); }, nullptr,
             grads);
  // accumulate into leaves
  for (auto& [impl, g] : grads) {
    if (impl->grad_fn || !impl->requires_grad) continue;
    if (impl->grad && impl->grad->defined()) {
      *impl->grad = ops::add(*impl->grad, g);
    } else {
      impl->grad = std::make_shared<Tensor>(g.clone_detached());
    }
  }
}

std::vector<Tensor> grad(const Tensor& root, const std::vector<Tensor>& wrt,
                         bool create_graph) {
  std::unordered_set<TensorImpl*> targets;
  for (const auto& t : wrt) targets.insert(t.unsafe_impl());

  // reach(t): t is a target or some graph ancestor path leads to one
  std::unordered_map<TensorImpl*, bool> reach;
  std::function<bool(const Tensor&)> reaches = [&](const Tensor& t) -> bool {
    auto* impl = t.unsafe_impl();
    if (targets.count(impl)) return true;
    auto it = reach.find(impl);
    if (it != reach.end()) return it->second;
    reach[impl] = false;  // guard (DAG, but keeps lookups O(1))
    bool r = false;
    if (t.grad_fn()) {
      for (const auto& in : t.grad_fn()->inputs()) {
        if (in.defined() && reaches(in)) {
          r = true;
          break;
        }
      }
    }
    reach[impl] = r;
    return r;
  };

  std::unordered_map<TensorImpl*, Tensor> grads;
  {
    bool prev = GradMode::enabled();
    GradMode::set(create_graph);
    run_engine(root, reaches, &targets, grads);
    GradMode::set(prev);
  }
  std::vector<Tensor> out;
  out.reserve(wrt.size());
  for (const auto& t : wrt) {
    auto it = grads.find(t.unsafe_impl());
    out.push_back(it == grads.end() ? Tensor() : it->second);
  }
  return out;
}

}  // namespace autograd
}  // namespace unfilter
