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

#include <doctest.h>

#include "test_util.hpp"

using namespace unfilter;
namespace o = unfilter::ops;

TEST_CASE("elementwise forward values") {
  Tensor a = Tensor::from_data({4}, {1.0, -2.0, 0.5, 0.0});
  Tensor b = Tensor::from_data({4}, {2.0, 3.0, -1.0, 4.0});
  CHECK(o::add(a, b).data()[1] == 1.0);
  CHECK(o::mul(a, b).data()[0] == 2.0);
  CHECK(o::relu(a).data()[1] == 0.0);
  CHECK(o::leaky_relu(a, 0.2).data()[1] == doctest::Approx(-0.4));
  CHECK(o::abs(a).data()[1] == 2.0);
  CHECK(o::square(a).data()[2] == 0.25);
  CHECK(o::mean_all(b).item() == doctest::Approx(2.0));
}

TEST_CASE("reduction/expand adjoint pairs gradcheck") {
  RngStream rng(10);
  auto check = [&](const std::function<Tensor(const Tensor&)>& fn, std::vector<int> shape) {
    Tensor x = testutil::random_tensor(shape, rng, 1.0, true);
    auto res = testutil::grad_check([&] { return o::mean_all(o::square(fn(x))); }, {x});
    CHECK(res.max_rel_err < 1e-4);
  };
  check([](const Tensor& x) { return o::rows_sum(x); }, {5, 7});
  check([](const Tensor& x) { return o::cols_sum(x); }, {5, 7});
  check([](const Tensor& x) { return o::hw_sum(x); }, {2, 3, 4, 5});
  check([](const Tensor& x) { return o::channel_sum(x); }, {2, 3, 4, 5});
  check([](const Tensor& x) { return o::batch_sum(x); }, {3, 4, 5});
  check([](const Tensor& x) { return o::rows_expand(x, 6); }, {5});
  check([](const Tensor& x) { return o::cols_expand(x, 6); }, {5});
  check([](const Tensor& x) { return o::hw_expand(x, 3, 4); }, {2, 5});
  check([](const Tensor& x) { return o::channel_expand(x, 2, 3, 4); }, {5});
  check([](const Tensor& x) { return o::batch_expand(x, {4, 3, 2}); }, {4});
  check([](const Tensor& x) { return o::full_expand(x, {3, 4}); }, {1});
}

TEST_CASE("matmul and bmm gradcheck") {
  RngStream rng(11);
  for (bool ta : {false, true}) {
    for (bool tb : {false, true}) {
      Tensor a = testutil::random_tensor(ta ? std::vector<int>{4, 3} : std::vector<int>{3, 4},
                                         rng, 1.0, true);
      Tensor b = testutil::random_tensor(tb ? std::vector<int>{5, 4} : std::vector<int>{4, 5},
                                         rng, 1.0, true);
      auto res = testutil::grad_check(
          [&] { return o::mean_all(o::square(o::matmul(a, b, ta, tb))); }, {a, b});
      CHECK(res.max_rel_err < 1e-4);
    }
  }
  Tensor a = testutil::random_tensor({3, 2, 4}, rng, 1.0, true);
  Tensor b = testutil::random_tensor({3, 4, 5}, rng, 1.0, true);
  auto res = testutil::grad_check(
      [&] { return o::mean_all(o::square(o::bmm(a, b))); }, {a, b});
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("structural op gradchecks") {
  RngStream rng(12);
  Tensor x = testutil::random_tensor({2, 3, 4, 4}, rng, 1.0, true);
  auto res = testutil::grad_check(
      [&] { return o::mean_all(o::square(o::upsample_nearest2(x))); }, {x});
  CHECK(res.max_rel_err < 1e-4);
  res = testutil::grad_check(
      [&] { return o::mean_all(o::square(o::halve_sum2(x))); }, {x});
  CHECK(res.max_rel_err < 1e-4);
  res = testutil::grad_check(
      [&] { return o::mean_all(o::square(o::slice_channels(x, 1, 2))); }, {x});
  CHECK(res.max_rel_err < 1e-4);
  Tensor y = testutil::random_tensor({2, 2, 4, 4}, rng, 1.0, true);
  res = testutil::grad_check(
      [&] { return o::mean_all(o::square(o::concat_channels(x, y))); }, {x, y});
  CHECK(res.max_rel_err < 1e-4);

  std::vector<int> idx = {0, 3, 7, 9};
  res = testutil::grad_check(
      [&] { return o::mean_all(o::square(o::gather_hw(x, idx))); }, {x});
  CHECK(res.max_rel_err < 1e-4);

  Tensor m = testutil::random_tensor({6, 5}, rng, 1.0, true);
  std::vector<int> ridx = {1, 1, 4, 0};  // duplicates exercise scatter-add
  res = testutil::grad_check(
      [&] { return o::mean_all(o::square(o::gather_rows(m, ridx))); }, {m});
  CHECK(res.max_rel_err < 1e-4);

  Tensor sq = testutil::random_tensor({2, 4, 4}, rng, 1.0, true);
  res = testutil::grad_check(
      [&] { return o::mean_all(o::square(o::bdiag(sq))); }, {sq});
  CHECK(res.max_rel_err < 1e-4);
  res = testutil::grad_check(
      [&] { return o::mean_all(o::square(o::triu_flatten(sq))); }, {sq});
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("conv2d gradcheck, stride 1 and 2") {
  RngStream rng(13);
  for (int stride : {1, 2}) {
    Tensor x = testutil::random_tensor({2, 3, 8, 8}, rng, 1.0, true);
    Tensor w = testutil::random_tensor({4, 3, 3, 3}, rng, 0.5, true);
    auto res = testutil::grad_check(
        [&] { return o::mean_all(o::square(o::conv2d(x, w, stride, 1))); }, {x, w});
    CHECK(res.max_rel_err < 1e-4);
  }
}

TEST_CASE("logsumexp is stable and exact") {
  Tensor x = Tensor::from_data({1, 3}, {1000.0, 999.0, 998.0});
  const double lse = o::logsumexp_rows(x).item();
  CHECK(lse == doctest::Approx(1000.0 + std::log(1 + std::exp(-1.0) + std::exp(-2.0))));
  RngStream rng(14);
  Tensor y = testutil::random_tensor({4, 6}, rng, 3.0, true);
  auto res = testutil::grad_check(
      [&] { return o::mean_all(o::logsumexp_rows(y)); }, {y});
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("l2_normalize_rows produces unit rows and correct gradients") {
  RngStream rng(15);
  Tensor x = testutil::random_tensor({5, 8}, rng, 2.0, true);
  Tensor n = o::l2_normalize_rows(x);
  for (int r = 0; r < 5; ++r) {
    double s = 0;
    for (int c = 0; c < 8; ++c) s += n.data()[r * 8 + c] * n.data()[r * 8 + c];
    CHECK(std::abs(std::sqrt(s) - 1.0) < 1e-9);
  }
  auto res = testutil::grad_check(
      [&] { return o::mean_all(o::mul(o::l2_normalize_rows(x), x)); }, {x});
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("second-order gradients through composite graphs") {
  // d/dx of ||dG/dx|| style expressions must match finite differences of the
  // first-order gradient
  RngStream rng(16);
  Tensor x = testutil::random_tensor({3}, rng, 1.0, true);
  // f(x) = sum(tanh(x)^2); g = df/dx; s = sum(g^2). ds/dx via autograd vs fd.
  auto first_grad = [&]() {
    Tensor f = o::sum_all(o::square(o::tanh(x)));
    return autograd::grad(f, {x}, true)[0];
  };
  Tensor s = o::sum_all(o::square(first_grad()));
  auto gs = autograd::grad(s, {x}, false);
  REQUIRE(gs[0].defined());
  for (int k = 0; k < 3; ++k) {
    const double h = 1e-6;
    const double saved = x.data()[k];
    auto eval = [&]() {
      NoGradGuard ng_outer;  // numeric: s(x) recomputed; inner grad needs graph
      double out;
      {
        GradEnableGuard ge;
        Tensor g = first_grad();
        NoGradGuard ng;
        out = o::sum_all(o::square(g)).item();
      }
      return out;
    };
    x.data()[k] = saved + h;
    const double fp = eval();
    x.data()[k] = saved - h;
    const double fm = eval();
    x.data()[k] = saved;
    CHECK(gs[0].data()[k] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-4));
  }
}

TEST_CASE("backward accumulates and zero_grad clears") {
  Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
  Tensor loss = o::sum_all(o::square(x));
  autograd::backward(loss);
  CHECK(x.grad().data()[0] == doctest::Approx(2.0));
  autograd::backward(o::sum_all(o::square(x)));
  CHECK(x.grad().data()[0] == doctest::Approx(4.0));  // accumulated
  x.zero_grad();
  CHECK_FALSE(x.grad().defined());
}

TEST_CASE("grad() does not touch .grad and prunes unreachable targets") {
  Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
  Tensor z = Tensor::from_data({2}, {3.0, 4.0}, true);
  Tensor loss = o::sum_all(o::square(x));
  auto gs = autograd::grad(loss, {x, z}, false);
  CHECK(gs[0].defined());
  CHECK_FALSE(gs[1].defined());  // z unreachable -> treated as zero
  CHECK_FALSE(x.grad().defined());
}

TEST_CASE("detach cuts the graph") {
  Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
  Tensor y = o::square(x).detach();
  Tensor loss = o::sum_all(o::mul(y, y));
  auto gs = autograd::grad(loss, {x}, false);
  CHECK_FALSE(gs[0].defined());
}
