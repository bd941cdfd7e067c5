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

#include "unfilter/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "unfilter/core/kernels.hpp"


#ifdef UNFILTER_OP_PROFILE
#include <chrono>
#include <cstdio>
#include <map>
namespace unfilter::ops {
namespace {
struct OpProfile {
  std::map<std::string, double> total_ms;
  std::map<std::string, int64_t> count;
  ~OpProfile() {
    std::vector<std::pair<double, std::string>> rows;
    for (auto& [k, v] : total_ms) rows.push_back({v, k});
    std::sort(rows.rbegin(), rows.rend());
    std::fprintf(stderr, "== op profile ==\n");
    for (auto& [v, k] : rows)
      std::fprintf(stderr, "%-28s %10.1f ms  x%ld\n", k.c_str(), v, count[k]);
  }
};
OpProfile g_op_profile;
struct ScopedOpTimer {
  const char* name;
  std::chrono::steady_clock::time_point t0;
  explicit ScopedOpTimer(const char* n) : name(n), t0(std::chrono::steady_clock::now()) {}
  ~ScopedOpTimer() {
    g_op_profile.total_ms[name] +=
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    g_op_profile.count[name]++;
  }
};
}  // namespace
}  // namespace unfilter::ops
#define UF_OP_TIMER(n) ::unfilter::ops::ScopedOpTimer _uf_op_timer(n)
#else
#define UF_OP_TIMER(n)
#endif

namespace unfilter::ops {

namespace {

using Vec = Buffer;

void check_same_shape(const Tensor& a, const Tensor& b, const char* name) {
  UF_CHECK(a.shape() == b.shape(), ShapeError,
           std::string(name) + ": shape mismatch " + shape_str(a.shape()) +
               " vs " + shape_str(b.shape()));
}

void check_ndim(const Tensor& a, int nd, const char* name) {
  UF_CHECK(a.ndim() == nd, ShapeError,
           std::string(name) + ": expected " + std::to_string(nd) +
               "-d tensor, got " + shape_str(a.shape()));
}

// Piecewise-constant factors (signs, masks) enter gradients as plain data.
template <typename F>
Tensor constant_like(const Tensor& a, F&& f) {
  UF_OP_TIMER("constant_like");
  const int64_t n = a.numel();
  Vec out(n);
  const double* p = a.data();
#pragma omp parallel for schedule(static) if (n > 16384)
  for (int64_t i = 0; i < n; ++i) out[i] = f(p[i]);
  return Tensor::from_buffer(a.shape(), std::move(out));
}

}  // namespace

// ---------------- elementwise ----------------

Tensor add(const Tensor& a, const Tensor& b) {
  UF_OP_TIMER("add");
  check_same_shape(a, b, "add");
  Vec out(a.numel());
  const double *pa = a.data(), *pb = b.data();
  const int64_t n = a.numel();
#pragma omp parallel for schedule(static) if (n > 16384)
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] + pb[i];
  return make_op(a.shape(), std::move(out), {a, b}, "add",
                 [](const Tensor& g, const std::vector<Tensor>&,
                    const std::vector<char>& needs) -> std::vector<Tensor> {
                   return {needs[0] ? g : Tensor(), needs[1] ? g : Tensor()};
                 });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  UF_OP_TIMER("sub");
  check_same_shape(a, b, "sub");
  Vec out(a.numel());
  const double *pa = a.data(), *pb = b.data();
  const int64_t n = a.numel();
#pragma omp parallel for schedule(static) if (n > 16384)
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] - pb[i];
  return make_op(a.shape(), std::move(out), {a, b}, "sub",
                 [](const Tensor& g, const std::vector<Tensor>&,
                    const std::vector<char>& needs) -> std::vector<Tensor> {
                   return {needs[0] ? g : Tensor(), needs[1] ? neg(g) : Tensor()};
                 });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  UF_OP_TIMER("mul");
  check_same_shape(a, b, "mul");
  Vec out(a.numel());
  const double *pa = a.data(), *pb = b.data();
  const int64_t n = a.numel();
#pragma omp parallel for schedule(static) if (n > 16384)
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] * pb[i];
  return make_op(a.shape(), std::move(out), {a, b}, "mul",
                 [](const Tensor& g, const std::vector<Tensor>& in,
                    const std::vector<char>& needs) -> std::vector<Tensor> {
                   return {needs[0] ? mul(g, in[1]) : Tensor(),
                           needs[1] ? mul(g, in[0]) : Tensor()};
                 });
}

Tensor add_scalar(const Tensor& a, double s) {
  UF_OP_TIMER("add_scalar");
  const int64_t n = a.numel();
  Vec out(n);
  const double* pa = a.data();
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] + s;
  return make_op(a.shape(), std::move(out), {a}, "add_scalar",
                 [](const Tensor& g, const std::vector<Tensor>&,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {g};
                 });
}

Tensor mul_scalar(const Tensor& a, double s) {
  UF_OP_TIMER("mul_scalar");
  const int64_t n = a.numel();
  Vec out(n);
  const double* pa = a.data();
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] * s;
  return make_op(a.shape(), std::move(out), {a}, "mul_scalar",
                 [s](const Tensor& g, const std::vector<Tensor>&,
                     const std::vector<char>&) -> std::vector<Tensor> {
                   return {mul_scalar(g, s)};
                 });
}

Tensor neg(const Tensor& a) {
  UF_OP_TIMER("neg"); return mul_scalar(a, -1.0); }

Tensor exp(const Tensor& a) {
  UF_OP_TIMER("exp");
  const int64_t n = a.numel();
  Vec out(n);
  const double* pa = a.data();
  for (int64_t i = 0; i < n; ++i) out[i] = std::exp(pa[i]);
  return make_op(a.shape(), std::move(out), {a}, "exp",
                 [](const Tensor& g, const std::vector<Tensor>& in,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {mul(g, exp(in[0]))};
                 });
}

Tensor log(const Tensor& a) {
  UF_OP_TIMER("log");
  const int64_t n = a.numel();
  Vec out(n);
  const double* pa = a.data();
  for (int64_t i = 0; i < n; ++i) out[i] = std::log(pa[i]);
  return make_op(a.shape(), std::move(out), {a}, "log",
                 [](const Tensor& g, const std::vector<Tensor>& in,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {mul(g, recip(in[0]))};
                 });
}

Tensor sqrt(const Tensor& a) {
  UF_OP_TIMER("sqrt");
  const int64_t n = a.numel();
  Vec out(n);
  const double* pa = a.data();
  for (int64_t i = 0; i < n; ++i) out[i] = std::sqrt(pa[i]);
  return make_op(a.shape(), std::move(out), {a}, "sqrt",
                 [](const Tensor& g, const std::vector<Tensor>& in,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {mul(g, mul_scalar(recip(sqrt(in[0])), 0.5))};
                 });
}

Tensor recip(const Tensor& a) {
  UF_OP_TIMER("recip");
  const int64_t n = a.numel();
  Vec out(n);
  const double* pa = a.data();
  for (int64_t i = 0; i < n; ++i) out[i] = 1.0 / pa[i];
  return make_op(a.shape(), std::move(out), {a}, "recip",
                 [](const Tensor& g, const std::vector<Tensor>& in,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {neg(mul(g, recip(square(in[0]))))};
                 });
}

Tensor abs(const Tensor& a) {
  UF_OP_TIMER("abs");
  const int64_t n = a.numel();
  Vec out(n);
  const double* pa = a.data();
  for (int64_t i = 0; i < n; ++i) out[i] = std::abs(pa[i]);
  return make_op(a.shape(), std::move(out), {a}, "abs",
                 [](const Tensor& g, const std::vector<Tensor>& in,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   Tensor sign = constant_like(
                       in[0], [](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
                   return {mul(g, sign)};
                 });
}

Tensor square(const Tensor& a) {
  UF_OP_TIMER("square");
  Vec out(a.numel());
  const double* pa = a.data();
  const int64_t n = a.numel();
#pragma omp parallel for schedule(static) if (n > 16384)
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] * pa[i];
  return make_op(a.shape(), std::move(out), {a}, "square",
                 [](const Tensor& g, const std::vector<Tensor>& in,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {mul(g, mul_scalar(in[0], 2.0))};
                 });
}

Tensor tanh(const Tensor& a) {
  UF_OP_TIMER("tanh");
  Vec out(a.numel());
  const double* pa = a.data();
  const int64_t n = a.numel();
#pragma omp parallel for schedule(static) if (n > 16384)
  for (int64_t i = 0; i < n; ++i) out[i] = std::tanh(pa[i]);
  return make_op(a.shape(), std::move(out), {a}, "tanh",
                 [](const Tensor& g, const std::vector<Tensor>& in,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   Tensor t = tanh(in[0]);
                   return {mul(g, add_scalar(neg(square(t)), 1.0))};
                 });
}

Tensor relu(const Tensor& a) {
  UF_OP_TIMER("relu");
  Vec out(a.numel());
  const double* pa = a.data();
  const int64_t n = a.numel();
#pragma omp parallel for schedule(static) if (n > 16384)
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] > 0 ? pa[i] : 0.0;
  return make_op(a.shape(), std::move(out), {a}, "relu",
                 [](const Tensor& g, const std::vector<Tensor>& in,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   Tensor mask =
                       constant_like(in[0], [](double v) { return v > 0 ? 1.0 : 0.0; });
                   return {mul(g, mask)};
                 });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  UF_OP_TIMER("leaky_relu");
  Vec out(a.numel());
  const double* pa = a.data();
  const int64_t n = a.numel();
#pragma omp parallel for schedule(static) if (n > 16384)
  for (int64_t i = 0; i < n; ++i) out[i] = pa[i] > 0 ? pa[i] : slope * pa[i];
  return make_op(a.shape(), std::move(out), {a}, "leaky_relu",
                 [slope](const Tensor& g, const std::vector<Tensor>& in,
                         const std::vector<char>&) -> std::vector<Tensor> {
                   Tensor mask = constant_like(
                       in[0], [slope](double v) { return v > 0 ? 1.0 : slope; });
                   return {mul(g, mask)};
                 });
}

// ---------------- reductions ----------------

Tensor sum_all(const Tensor& a) {
  UF_OP_TIMER("sum_all");
  double s = kernels::reduce_sum(a.data(), a.numel());
  Vec out(1);
  out[0] = s;
  return make_op({1}, std::move(out), {a}, "sum_all",
                 [](const Tensor& g, const std::vector<Tensor>& in,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {full_expand(g, in[0].shape())};
                 });
}

Tensor rows_sum(const Tensor& a) {
  UF_OP_TIMER("rows_sum");
  check_ndim(a, 2, "rows_sum");
  const int r = a.dim(0), c = a.dim(1);
  Vec out(r);
  const double* pa = a.data();
#pragma omp parallel for schedule(static) if (r * c > 16384)
  for (int i = 0; i < r; ++i) {
    double s = 0.0;
    for (int j = 0; j < c; ++j) s += pa[static_cast<int64_t>(i) * c + j];
    out[i] = s;
  }
  return make_op({r}, std::move(out), {a}, "rows_sum",
                 [c](const Tensor& g, const std::vector<Tensor>&,
                     const std::vector<char>&) -> std::vector<Tensor> {
                   return {rows_expand(g, c)};
                 });
}

Tensor cols_sum(const Tensor& a) {
  UF_OP_TIMER("cols_sum");
  check_ndim(a, 2, "cols_sum");
  const int r = a.dim(0), c = a.dim(1);
  Vec out(c, 0.0);
  const double* pa = a.data();
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) out[j] += pa[static_cast<int64_t>(i) * c + j];
  }
  return make_op({c}, std::move(out), {a}, "cols_sum",
                 [r](const Tensor& g, const std::vector<Tensor>&,
                     const std::vector<char>&) -> std::vector<Tensor> {
                   return {cols_expand(g, r)};
                 });
}

Tensor hw_sum(const Tensor& a) {
  UF_OP_TIMER("hw_sum");
  check_ndim(a, 4, "hw_sum");
  const int b = a.dim(0), c = a.dim(1), h = a.dim(2), w = a.dim(3);
  const int64_t hw = static_cast<int64_t>(h) * w;
  Vec out(static_cast<size_t>(b) * c);
  const double* pa = a.data();
#pragma omp parallel for schedule(static) if (a.numel() > 16384)
  for (int bc = 0; bc < b * c; ++bc) {
    double s = 0.0;
    const double* p = pa + bc * hw;
    for (int64_t i = 0; i < hw; ++i) s += p[i];
    out[bc] = s;
  }
  return make_op({b, c}, std::move(out), {a}, "hw_sum",
                 [h, w](const Tensor& g, const std::vector<Tensor>&,
                        const std::vector<char>&) -> std::vector<Tensor> {
                   return {hw_expand(g, h, w)};
                 });
}

Tensor channel_sum(const Tensor& a) {
  UF_OP_TIMER("channel_sum");
  check_ndim(a, 4, "channel_sum");
  const int b = a.dim(0), c = a.dim(1), h = a.dim(2), w = a.dim(3);
  const int64_t hw = static_cast<int64_t>(h) * w;
  Vec out(c, 0.0);
  const double* pa = a.data();
  for (int bi = 0; bi < b; ++bi) {
    for (int ci = 0; ci < c; ++ci) {
      double s = 0.0;
      const double* p = pa + (static_cast<int64_t>(bi) * c + ci) * hw;
      for (int64_t i = 0; i < hw; ++i) s += p[i];
      out[ci] += s;
    }
  }
  return make_op({c}, std::move(out), {a}, "channel_sum",
                 [b, h, w](const Tensor& g, const std::vector<Tensor>&,
                           const std::vector<char>&) -> std::vector<Tensor> {
                   return {channel_expand(g, b, h, w)};
                 });
}

Tensor batch_sum(const Tensor& a) {
  UF_OP_TIMER("batch_sum");
  UF_CHECK(a.ndim() >= 1, ShapeError, "batch_sum: needs batch dim");
  const int b = a.dim(0);
  const int64_t rest = a.numel() / b;
  Vec out(b);
  const double* pa = a.data();
#pragma omp parallel for schedule(static) if (a.numel() > 16384)
  for (int bi = 0; bi < b; ++bi) {
    double s = 0.0;
    const double* p = pa + bi * rest;
    for (int64_t i = 0; i < rest; ++i) s += p[i];
    out[bi] = s;
  }
  return make_op({b}, std::move(out), {a}, "batch_sum",
                 [](const Tensor& g, const std::vector<Tensor>& in,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {batch_expand(g, in[0].shape())};
                 });
}

Tensor row_max(const Tensor& a) {
  UF_OP_TIMER("row_max");
  check_ndim(a, 2, "row_max");
  const int r = a.dim(0), c = a.dim(1);
  UF_CHECK(c >= 1, ShapeError, "row_max: empty rows");
  Vec out(r);
  const double* pa = a.data();
  for (int i = 0; i < r; ++i) {
    double m = pa[static_cast<int64_t>(i) * c];
    for (int j = 1; j < c; ++j) m = std::max(m, pa[static_cast<int64_t>(i) * c + j]);
    out[i] = m;
  }
  return Tensor::from_buffer({r}, std::move(out));  // detached by design
}

// ---------------- expands ----------------

Tensor full_expand(const Tensor& s, std::vector<int> shape) {
  UF_OP_TIMER("full_expand");
  UF_CHECK(s.numel() == 1, ShapeError, "full_expand: source must be scalar");
  Vec out(shape_numel(shape), s.data()[0]);
  return make_op(std::move(shape), std::move(out), {s}, "full_expand",
                 [](const Tensor& g, const std::vector<Tensor>&,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {sum_all(g)};
                 });
}

Tensor rows_expand(const Tensor& v, int cols) {
  UF_OP_TIMER("rows_expand");
  check_ndim(v, 1, "rows_expand");
  const int r = v.dim(0);
  Vec out(static_cast<size_t>(r) * cols);
  const double* pv = v.data();
#pragma omp parallel for schedule(static) if (static_cast<int64_t>(r) * cols > 16384)
  for (int i = 0; i < r; ++i) {
    std::fill(out.data() + static_cast<int64_t>(i) * cols,
              out.data() + static_cast<int64_t>(i + 1) * cols, pv[i]);
  }
  return make_op({r, cols}, std::move(out), {v}, "rows_expand",
                 [](const Tensor& g, const std::vector<Tensor>&,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {rows_sum(g)};
                 });
}

Tensor cols_expand(const Tensor& v, int rows) {
  UF_OP_TIMER("cols_expand");
  check_ndim(v, 1, "cols_expand");
  const int c = v.dim(0);
  Vec out(static_cast<size_t>(rows) * c);
  const double* pv = v.data();
  for (int i = 0; i < rows; ++i) {
    std::memcpy(out.data() + static_cast<int64_t>(i) * c, pv, sizeof(double) * c);
  }
  return make_op({rows, c}, std::move(out), {v}, "cols_expand",
                 [](const Tensor& g, const std::vector<Tensor>&,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {cols_sum(g)};
                 });
}

Tensor hw_expand(const Tensor& v, int h, int w) {
  UF_OP_TIMER("hw_expand");
  check_ndim(v, 2, "hw_expand");
  const int b = v.dim(0), c = v.dim(1);
  const int64_t hw = static_cast<int64_t>(h) * w;
  Vec out(static_cast<size_t>(b) * c * hw);
  const double* pv = v.data();
#pragma omp parallel for schedule(static) if (static_cast<int64_t>(b) * c * hw > 16384)
  for (int bc = 0; bc < b * c; ++bc) {
    std::fill(out.data() + bc * hw, out.data() + (bc + 1) * hw, pv[bc]);
  }
  return make_op({b, c, h, w}, std::move(out), {v}, "hw_expand",
                 [](const Tensor& g, const std::vector<Tensor>&,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {hw_sum(g)};
                 });
}

Tensor channel_expand(const Tensor& v, int b, int h, int w) {
  UF_OP_TIMER("channel_expand");
  check_ndim(v, 1, "channel_expand");
  const int c = v.dim(0);
  const int64_t hw = static_cast<int64_t>(h) * w;
  Vec out(static_cast<size_t>(b) * c * hw);
  const double* pv = v.data();
#pragma omp parallel for schedule(static) if (static_cast<int64_t>(b) * c * hw > 16384)
  for (int bc = 0; bc < b * c; ++bc) {
    std::fill(out.data() + bc * hw, out.data() + (bc + 1) * hw, pv[bc % c]);
  }
  return make_op({b, c, h, w}, std::move(out), {v}, "channel_expand",
                 [](const Tensor& g, const std::vector<Tensor>&,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {channel_sum(g)};
                 });
}

Tensor batch_expand(const Tensor& v, std::vector<int> shape) {
  UF_OP_TIMER("batch_expand");
  check_ndim(v, 1, "batch_expand");
  UF_CHECK(!shape.empty() && shape[0] == v.dim(0), ShapeError,
           "batch_expand: batch dim mismatch");
  const int b = v.dim(0);
  const int64_t rest = shape_numel(shape) / b;
  Vec out(shape_numel(shape));
  const double* pv = v.data();
#pragma omp parallel for schedule(static) if (shape_numel(shape) > 16384)
  for (int bi = 0; bi < b; ++bi) {
    std::fill(out.data() + bi * rest, out.data() + (bi + 1) * rest, pv[bi]);
  }
  return make_op(std::move(shape), std::move(out), {v}, "batch_expand",
                 [](const Tensor& g, const std::vector<Tensor>&,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {batch_sum(g)};
                 });
}

Tensor mean_all(const Tensor& a) {
  UF_OP_TIMER("mean_all");
  return mul_scalar(sum_all(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor hw_mean(const Tensor& a) {
  UF_OP_TIMER("hw_mean");
  check_ndim(a, 4, "hw_mean");
  return mul_scalar(hw_sum(a), 1.0 / (static_cast<double>(a.dim(2)) * a.dim(3)));
}

// ---------------- linear algebra ----------------

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  UF_OP_TIMER("matmul");
  check_ndim(a, 2, "matmul");
  check_ndim(b, 2, "matmul");
  const int m = trans_a ? a.dim(1) : a.dim(0);
  const int k = trans_a ? a.dim(0) : a.dim(1);
  const int kb = trans_b ? b.dim(1) : b.dim(0);
  const int n = trans_b ? b.dim(0) : b.dim(1);
  UF_CHECK(k == kb, ShapeError,
           "matmul: inner dim mismatch " + shape_str(a.shape()) + " x " +
               shape_str(b.shape()));
  Vec out(static_cast<size_t>(m) * n);
  kernels::gemm(trans_a, trans_b, m, n, k, a.data(), b.data(), out.data());
  return make_op({m, n}, std::move(out), {a, b}, "matmul",
                 [trans_a, trans_b](const Tensor& g, const std::vector<Tensor>& in,
                                    const std::vector<char>& needs) -> std::vector<Tensor> {
                   Tensor ga, gb;
                   if (needs[0]) {
                     ga = trans_a ? matmul(in[1], g, trans_b, true)
                                  : matmul(g, in[1], false, !trans_b);
                   }
                   if (needs[1]) {
                     gb = trans_b ? matmul(g, in[0], true, trans_a)
                                  : matmul(in[0], g, !trans_a, false);
                   }
                   return {ga, gb};
                 });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  UF_OP_TIMER("bmm");
  check_ndim(a, 3, "bmm");
  check_ndim(b, 3, "bmm");
  const int r = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  UF_CHECK(b.dim(0) == r && b.dim(1) == k, ShapeError,
           "bmm: shape mismatch " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  Vec out(static_cast<size_t>(r) * m * n);
  kernels::bmm(r, m, n, k, a.data(), b.data(), out.data());
  return make_op({r, m, n}, std::move(out), {a, b}, "bmm",
                 [](const Tensor& g, const std::vector<Tensor>& in,
                    const std::vector<char>& needs) -> std::vector<Tensor> {
                   Tensor ga, gb;
                   if (needs[0]) ga = bmm(g, transpose_last2(in[1]));
                   if (needs[1]) gb = bmm(transpose_last2(in[0]), g);
                   return {ga, gb};
                 });
}

Tensor transpose_last2(const Tensor& a) {
  UF_OP_TIMER("transpose_last2");
  check_ndim(a, 3, "transpose_last2");
  const int r = a.dim(0), m = a.dim(1), n = a.dim(2);
  Vec out(a.numel());
  const double* pa = a.data();
#pragma omp parallel for schedule(static) if (a.numel() > 16384)
  for (int i = 0; i < r; ++i) {
    const double* src = pa + static_cast<int64_t>(i) * m * n;
    double* dst = out.data() + static_cast<int64_t>(i) * m * n;
    for (int x = 0; x < m; ++x) {
      for (int y = 0; y < n; ++y) dst[static_cast<int64_t>(y) * m + x] = src[static_cast<int64_t>(x) * n + y];
    }
  }
  return make_op({r, n, m}, std::move(out), {a}, "transpose_last2",
                 [](const Tensor& g, const std::vector<Tensor>&,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {transpose_last2(g)};
                 });
}

// ---------------- convolution ----------------

Tensor bias_add_channel(const Tensor& x, const Tensor& bias) {
  UF_OP_TIMER("bias_add_channel");
  check_ndim(x, 4, "bias_add_channel");
  check_ndim(bias, 1, "bias_add_channel");
  const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  UF_CHECK(bias.dim(0) == c, ShapeError, "bias_add_channel: channel mismatch");
  const int64_t hw = static_cast<int64_t>(h) * w;
  Vec out(x.numel());
  const double* px = x.data();
  const double* pb = bias.data();
#pragma omp parallel for schedule(static) if (x.numel() > 16384)
  for (int bc = 0; bc < b * c; ++bc) {
    const double bv = pb[bc % c];
    const double* src = px + bc * hw;
    double* dst = out.data() + bc * hw;
#pragma omp simd
    for (int64_t i = 0; i < hw; ++i) dst[i] = src[i] + bv;
  }
  return make_op({b, c, h, w}, std::move(out), {x, bias}, "bias_add_channel",
                 [](const Tensor& g, const std::vector<Tensor>&,
                    const std::vector<char>& needs) -> std::vector<Tensor> {
                   return {needs[0] ? g : Tensor(),
                           needs[1] ? channel_sum(g) : Tensor()};
                 });
}

Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int pad) {
  UF_OP_TIMER("conv2d");
  check_ndim(x, 4, "conv2d");
  check_ndim(w, 4, "conv2d");
  UF_CHECK(x.dim(1) == w.dim(1), ShapeError,
           "conv2d: channel mismatch " + shape_str(x.shape()) + " vs " +
               shape_str(w.shape()));
  const int b = x.dim(0), c = x.dim(1), h = x.dim(2), win = x.dim(3);
  const int oc = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int oh = kernels::conv_out_dim(h, kh, stride, pad);
  const int ow = kernels::conv_out_dim(win, kw, stride, pad);
  UF_CHECK(oh > 0 && ow > 0, ShapeError, "conv2d: kernel larger than padded input");
  Vec out(static_cast<size_t>(b) * oc * oh * ow);
  kernels::conv2d_forward(x.data(), w.data(), out.data(), b, c, h, win, oc, kh,
                          kw, stride, pad);
  return make_op({b, oc, oh, ow}, std::move(out), {x, w}, "conv2d",
                 [stride, pad, h, win, kh, kw](
                     const Tensor& g, const std::vector<Tensor>& in,
                     const std::vector<char>& needs) -> std::vector<Tensor> {
                   Tensor gx, gw;
                   if (needs[0]) gx = conv2d_grad_input_op(g, in[1], stride, pad, h, win);
                   if (needs[1]) gw = conv2d_grad_weight_op(in[0], g, stride, pad, kh, kw);
                   return {gx, gw};
                 });
}

Tensor conv2d_grad_input_op(const Tensor& gy, const Tensor& w, int stride,
                            int pad, int in_h, int in_w) {
  UF_OP_TIMER("conv2d_grad_input_op");
  const int b = gy.dim(0), oc = gy.dim(1);
  const int c = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  UF_CHECK(gy.dim(1) == w.dim(0), ShapeError, "conv2d_grad_input: oc mismatch");
  Vec out(static_cast<size_t>(b) * c * in_h * in_w);
  kernels::conv2d_grad_input(gy.data(), w.data(), out.data(), b, c, in_h, in_w,
                             oc, kh, kw, stride, pad);
  return make_op({b, c, in_h, in_w}, std::move(out), {gy, w}, "conv2d_grad_input",
                 [stride, pad, in_h, in_w, kh, kw](
                     const Tensor& g, const std::vector<Tensor>& in,
                     const std::vector<char>& needs) -> std::vector<Tensor> {
                   Tensor ggy, gw;
                   if (needs[0]) ggy = conv2d(g, in[1], stride, pad);
                   if (needs[1]) gw = conv2d_grad_weight_op(g, in[0], stride, pad, kh, kw);
                   return {ggy, gw};
                 });
}

Tensor conv2d_grad_weight_op(const Tensor& x, const Tensor& gy, int stride,
                             int pad, int kh, int kw) {
  UF_OP_TIMER("conv2d_grad_weight_op");
  const int b = x.dim(0), c = x.dim(1), h = x.dim(2), win = x.dim(3);
  const int oc = gy.dim(1);
  UF_CHECK(gy.dim(0) == b, ShapeError, "conv2d_grad_weight: batch mismatch");
  Vec out(static_cast<size_t>(oc) * c * kh * kw);
  kernels::conv2d_grad_weight(x.data(), gy.data(), out.data(), b, c, h, win,
                              oc, kh, kw, stride, pad);
  return make_op({oc, c, kh, kw}, std::move(out), {x, gy}, "conv2d_grad_weight",
                 [stride, pad, h, win, kh, kw](
                     const Tensor& g, const std::vector<Tensor>& in,
                     const std::vector<char>& needs) -> std::vector<Tensor> {
                   Tensor gx, ggy;
                   if (needs[0]) gx = conv2d_grad_input_op(in[1], g, stride, pad, h, win);
                   if (needs[1]) ggy = conv2d(in[0], g, stride, pad);
                   return {gx, ggy};
                 });
}

// ---------------- spatial / structural ----------------

Tensor upsample_nearest2(const Tensor& x) {
  UF_OP_TIMER("upsample_nearest2");
  check_ndim(x, 4, "upsample_nearest2");
  const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Vec out(static_cast<size_t>(b) * c * h * 2 * w * 2);
  const double* px = x.data();
#pragma omp parallel for schedule(static) if (x.numel() > 8192)
  for (int bc = 0; bc < b * c; ++bc) {
    const double* src = px + static_cast<int64_t>(bc) * h * w;
    double* dst = out.data() + static_cast<int64_t>(bc) * h * w * 4;
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        const double v = src[static_cast<int64_t>(y) * w + xx];
        const int64_t o = (static_cast<int64_t>(2 * y) * 2 * w) + 2 * xx;
        dst[o] = v;
        dst[o + 1] = v;
        dst[o + 2 * w] = v;
        dst[o + 2 * w + 1] = v;
      }
    }
  }
  return make_op({b, c, 2 * h, 2 * w}, std::move(out), {x}, "upsample_nearest2",
                 [](const Tensor& g, const std::vector<Tensor>&,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {halve_sum2(g)};
                 });
}

Tensor halve_sum2(const Tensor& x) {
  UF_OP_TIMER("halve_sum2");
  check_ndim(x, 4, "halve_sum2");
  const int b = x.dim(0), c = x.dim(1), h2 = x.dim(2), w2 = x.dim(3);
  UF_CHECK(h2 % 2 == 0 && w2 % 2 == 0, ShapeError, "halve_sum2: odd spatial dims");
  const int h = h2 / 2, w = w2 / 2;
  Vec out(static_cast<size_t>(b) * c * h * w);
  const double* px = x.data();
#pragma omp parallel for schedule(static) if (x.numel() > 8192)
  for (int bc = 0; bc < b * c; ++bc) {
    const double* src = px + static_cast<int64_t>(bc) * h2 * w2;
    double* dst = out.data() + static_cast<int64_t>(bc) * h * w;
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        const int64_t o = (static_cast<int64_t>(2 * y) * w2) + 2 * xx;
        dst[static_cast<int64_t>(y) * w + xx] =
            src[o] + src[o + 1] + src[o + w2] + src[o + w2 + 1];
      }
    }
  }
  return make_op({b, c, h, w}, std::move(out), {x}, "halve_sum2",
                 [](const Tensor& g, const std::vector<Tensor>&,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {upsample_nearest2(g)};
                 });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  UF_OP_TIMER("concat_channels");
  check_ndim(a, 4, "concat_channels");
  check_ndim(b, 4, "concat_channels");
  UF_CHECK(a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2) && a.dim(3) == b.dim(3),
           ShapeError, "concat_channels: incompatible shapes");
  const int bn = a.dim(0), c1 = a.dim(1), c2 = b.dim(1), h = a.dim(2), w = a.dim(3);
  const int64_t hw = static_cast<int64_t>(h) * w;
  Vec out(static_cast<size_t>(bn) * (c1 + c2) * hw);
  const double *pa = a.data(), *pb = b.data();
  for (int bi = 0; bi < bn; ++bi) {
    std::memcpy(out.data() + static_cast<int64_t>(bi) * (c1 + c2) * hw,
                pa + static_cast<int64_t>(bi) * c1 * hw, sizeof(double) * c1 * hw);
    std::memcpy(out.data() + static_cast<int64_t>(bi) * (c1 + c2) * hw + c1 * hw,
                pb + static_cast<int64_t>(bi) * c2 * hw, sizeof(double) * c2 * hw);
  }
  return make_op({bn, c1 + c2, h, w}, std::move(out), {a, b}, "concat_channels",
                 [c1, c2](const Tensor& g, const std::vector<Tensor>&,
                          const std::vector<char>& needs) -> std::vector<Tensor> {
                   return {needs[0] ? slice_channels(g, 0, c1) : Tensor(),
                           needs[1] ? slice_channels(g, c1, c2) : Tensor()};
                 });
}

Tensor slice_channels(const Tensor& x, int c0, int len) {
  UF_OP_TIMER("slice_channels");
  check_ndim(x, 4, "slice_channels");
  const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  UF_CHECK(c0 >= 0 && c0 + len <= c, ShapeError, "slice_channels: out of range");
  const int64_t hw = static_cast<int64_t>(h) * w;
  Vec out(static_cast<size_t>(b) * len * hw);
  const double* px = x.data();
  for (int bi = 0; bi < b; ++bi) {
    std::memcpy(out.data() + static_cast<int64_t>(bi) * len * hw,
                px + (static_cast<int64_t>(bi) * c + c0) * hw,
                sizeof(double) * len * hw);
  }
  return make_op({b, len, h, w}, std::move(out), {x}, "slice_channels",
                 [c0, c](const Tensor& g, const std::vector<Tensor>&,
                         const std::vector<char>&) -> std::vector<Tensor> {
                   return {channel_zero_pad(g, c0, c)};
                 });
}

Tensor channel_zero_pad(const Tensor& x, int c0, int c_total) {
  UF_OP_TIMER("channel_zero_pad");
  check_ndim(x, 4, "channel_zero_pad");
  const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  UF_CHECK(c0 >= 0 && c0 + c <= c_total, ShapeError, "channel_zero_pad: out of range");
  const int64_t hw = static_cast<int64_t>(h) * w;
  Vec out(static_cast<size_t>(b) * c_total * hw, 0.0);
  const double* px = x.data();
  for (int bi = 0; bi < b; ++bi) {
    std::memcpy(out.data() + (static_cast<int64_t>(bi) * c_total + c0) * hw,
                px + static_cast<int64_t>(bi) * c * hw, sizeof(double) * c * hw);
  }
  return make_op({b, c_total, h, w}, std::move(out), {x}, "channel_zero_pad",
                 [c0, c](const Tensor& g, const std::vector<Tensor>&,
                         const std::vector<char>&) -> std::vector<Tensor> {
                   return {slice_channels(g, c0, c)};
                 });
}

Tensor reshape(const Tensor& x, std::vector<int> shape) {
  UF_OP_TIMER("reshape");
  UF_CHECK(shape_numel(shape) == x.numel(), ShapeError,
           "reshape: numel mismatch " + shape_str(x.shape()) + " -> " + shape_str(shape));
  Vec out(x.numel());
  std::memcpy(out.data(), x.data(), sizeof(double) * x.numel());
  std::vector<int> old_shape = x.shape();
  return make_op(std::move(shape), std::move(out), {x}, "reshape",
                 [old_shape](const Tensor& g, const std::vector<Tensor>&,
                             const std::vector<char>&) -> std::vector<Tensor> {
                   return {reshape(g, old_shape)};
                 });
}

// ---------------- indexing ----------------

Tensor gather_hw(const Tensor& x, std::vector<int> idx) {
  UF_OP_TIMER("gather_hw");
  check_ndim(x, 4, "gather_hw");
  const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int t = static_cast<int>(idx.size());
  const int64_t hw = static_cast<int64_t>(h) * w;
  for (int i : idx) UF_CHECK(i >= 0 && i < hw, ValidationError, "gather_hw: location out of range");
  Vec out(static_cast<size_t>(b) * t * c);
  const double* px = x.data();
  for (int bi = 0; bi < b; ++bi) {
    for (int ti = 0; ti < t; ++ti) {
      for (int ci = 0; ci < c; ++ci) {
        out[(static_cast<int64_t>(bi) * t + ti) * c + ci] =
            px[(static_cast<int64_t>(bi) * c + ci) * hw + idx[ti]];
      }
    }
  }
  return make_op({b, t, c}, std::move(out), {x}, "gather_hw",
                 [idx, h, w](const Tensor& g, const std::vector<Tensor>&,
                             const std::vector<char>&) -> std::vector<Tensor> {
                   return {scatter_hw(g, idx, h, w)};
                 });
}

Tensor scatter_hw(const Tensor& g, std::vector<int> idx, int h, int w) {
  UF_OP_TIMER("scatter_hw");
  check_ndim(g, 3, "scatter_hw");
  const int b = g.dim(0), t = g.dim(1), c = g.dim(2);
  UF_CHECK(static_cast<int>(idx.size()) == t, ShapeError, "scatter_hw: index count");
  const int64_t hw = static_cast<int64_t>(h) * w;
  Vec out(static_cast<size_t>(b) * c * hw, 0.0);
  const double* pg = g.data();
  for (int bi = 0; bi < b; ++bi) {
    for (int ti = 0; ti < t; ++ti) {
      for (int ci = 0; ci < c; ++ci) {
        out[(static_cast<int64_t>(bi) * c + ci) * hw + idx[ti]] +=
            pg[(static_cast<int64_t>(bi) * t + ti) * c + ci];
      }
    }
  }
  return make_op({b, c, h, w}, std::move(out), {g}, "scatter_hw",
                 [idx](const Tensor& gg, const std::vector<Tensor>&,
                       const std::vector<char>&) -> std::vector<Tensor> {
                   return {gather_hw(gg, idx)};
                 });
}

Tensor gather_rows(const Tensor& x, std::vector<int> idx) {
  UF_OP_TIMER("gather_rows");
  check_ndim(x, 2, "gather_rows");
  const int r = x.dim(0), c = x.dim(1);
  for (int i : idx) UF_CHECK(i >= 0 && i < r, ValidationError, "gather_rows: row out of range");
  const int n = static_cast<int>(idx.size());
  Vec out(static_cast<size_t>(n) * c);
  const double* px = x.data();
  for (int i = 0; i < n; ++i) {
    std::memcpy(out.data() + static_cast<int64_t>(i) * c,
                px + static_cast<int64_t>(idx[i]) * c, sizeof(double) * c);
  }
  return make_op({n, c}, std::move(out), {x}, "gather_rows",
                 [idx, r](const Tensor& g, const std::vector<Tensor>&,
                          const std::vector<char>&) -> std::vector<Tensor> {
                   return {scatter_add_rows(g, idx, r)};
                 });
}

Tensor scatter_add_rows(const Tensor& g, std::vector<int> idx, int rows) {
  UF_OP_TIMER("scatter_add_rows");
  check_ndim(g, 2, "scatter_add_rows");
  const int n = g.dim(0), c = g.dim(1);
  UF_CHECK(static_cast<int>(idx.size()) == n, ShapeError, "scatter_add_rows: index count");
  Vec out(static_cast<size_t>(rows) * c, 0.0);
  const double* pg = g.data();
  for (int i = 0; i < n; ++i) {
    double* dst = out.data() + static_cast<int64_t>(idx[i]) * c;
    const double* src = pg + static_cast<int64_t>(i) * c;
    for (int j = 0; j < c; ++j) dst[j] += src[j];
  }
  return make_op({rows, c}, std::move(out), {g}, "scatter_add_rows",
                 [idx](const Tensor& gg, const std::vector<Tensor>&,
                       const std::vector<char>&) -> std::vector<Tensor> {
                   return {gather_rows(gg, idx)};
                 });
}

Tensor bdiag(const Tensor& x) {
  UF_OP_TIMER("bdiag");
  check_ndim(x, 3, "bdiag");
  const int b = x.dim(0), t = x.dim(1);
  UF_CHECK(x.dim(2) == t, ShapeError, "bdiag: not square");
  Vec out(static_cast<size_t>(b) * t);
  const double* px = x.data();
  for (int bi = 0; bi < b; ++bi) {
    for (int ti = 0; ti < t; ++ti) {
      out[static_cast<int64_t>(bi) * t + ti] =
          px[(static_cast<int64_t>(bi) * t + ti) * t + ti];
    }
  }
  return make_op({b, t}, std::move(out), {x}, "bdiag",
                 [t](const Tensor& g, const std::vector<Tensor>&,
                     const std::vector<char>&) -> std::vector<Tensor> {
                   return {bdiag_expand(g, t)};
                 });
}

Tensor bdiag_expand(const Tensor& v, int t) {
  UF_OP_TIMER("bdiag_expand");
  check_ndim(v, 2, "bdiag_expand");
  const int b = v.dim(0);
  UF_CHECK(v.dim(1) == t, ShapeError, "bdiag_expand: dim mismatch");
  Vec out(static_cast<size_t>(b) * t * t, 0.0);
  const double* pv = v.data();
  for (int bi = 0; bi < b; ++bi) {
    for (int ti = 0; ti < t; ++ti) {
      out[(static_cast<int64_t>(bi) * t + ti) * t + ti] = pv[static_cast<int64_t>(bi) * t + ti];
    }
  }
  return make_op({b, t, t}, std::move(out), {v}, "bdiag_expand",
                 [](const Tensor& g, const std::vector<Tensor>&,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {bdiag(g)};
                 });
}

Tensor col_slice(const Tensor& x, int j) {
  UF_OP_TIMER("col_slice");
  check_ndim(x, 2, "col_slice");
  const int r = x.dim(0), c = x.dim(1);
  UF_CHECK(j >= 0 && j < c, ShapeError, "col_slice: out of range");
  Vec out(r);
  const double* px = x.data();
  for (int i = 0; i < r; ++i) out[i] = px[static_cast<int64_t>(i) * c + j];
  return make_op({r}, std::move(out), {x}, "col_slice",
                 [j, c](const Tensor& g, const std::vector<Tensor>&,
                        const std::vector<char>&) -> std::vector<Tensor> {
                   return {col_scatter(g, j, c)};
                 });
}

Tensor col_scatter(const Tensor& v, int j, int cols) {
  UF_OP_TIMER("col_scatter");
  check_ndim(v, 1, "col_scatter");
  const int r = v.dim(0);
  UF_CHECK(j >= 0 && j < cols, ShapeError, "col_scatter: out of range");
  Vec out(static_cast<size_t>(r) * cols, 0.0);
  const double* pv = v.data();
  for (int i = 0; i < r; ++i) out[static_cast<int64_t>(i) * cols + j] = pv[i];
  return make_op({r, cols}, std::move(out), {v}, "col_scatter",
                 [j](const Tensor& g, const std::vector<Tensor>&,
                     const std::vector<char>&) -> std::vector<Tensor> {
                   return {col_slice(g, j)};
                 });
}

Tensor triu_flatten(const Tensor& x) {
  UF_OP_TIMER("triu_flatten");
  check_ndim(x, 3, "triu_flatten");
  const int r = x.dim(0), k = x.dim(1);
  UF_CHECK(x.dim(2) == k, ShapeError, "triu_flatten: not square");
  const int m = k * (k + 1) / 2;
  Vec out(static_cast<size_t>(r) * m);
  const double* px = x.data();
#pragma omp parallel for schedule(static) if (x.numel() > 16384)
  for (int ri = 0; ri < r; ++ri) {
    const double* src = px + static_cast<int64_t>(ri) * k * k;
    double* dst = out.data() + static_cast<int64_t>(ri) * m;
    int o = 0;
    for (int i = 0; i < k; ++i) {
      for (int j = i; j < k; ++j) dst[o++] = src[static_cast<int64_t>(i) * k + j];
    }
  }
  return make_op({r, m}, std::move(out), {x}, "triu_flatten",
                 [k](const Tensor& g, const std::vector<Tensor>&,
                     const std::vector<char>&) -> std::vector<Tensor> {
                   return {triu_unflatten(g, k)};
                 });
}

Tensor triu_unflatten(const Tensor& v, int k) {
  UF_OP_TIMER("triu_unflatten");
  check_ndim(v, 2, "triu_unflatten");
  const int r = v.dim(0), m = v.dim(1);
  UF_CHECK(m == k * (k + 1) / 2, ShapeError, "triu_unflatten: length mismatch");
  Vec out(static_cast<size_t>(r) * k * k, 0.0);
  const double* pv = v.data();
#pragma omp parallel for schedule(static) if (out.size() > 16384)
  for (int ri = 0; ri < r; ++ri) {
    const double* src = pv + static_cast<int64_t>(ri) * m;
    double* dst = out.data() + static_cast<int64_t>(ri) * k * k;
    int o = 0;
    for (int i = 0; i < k; ++i) {
      for (int j = i; j < k; ++j) dst[static_cast<int64_t>(i) * k + j] = src[o++];
    }
  }
  return make_op({r, k, k}, std::move(out), {v}, "triu_unflatten",
                 [](const Tensor& g, const std::vector<Tensor>&,
                    const std::vector<char>&) -> std::vector<Tensor> {
                   return {triu_flatten(g)};
                 });
}

// ---------------- composites ----------------

Tensor logsumexp_rows(const Tensor& x) {
  UF_OP_TIMER("logsumexp_rows");
  check_ndim(x, 2, "logsumexp_rows");
  Tensor m = row_max(x);  // detached shift; exact gradient via softmax identity
  Tensor shifted = sub(x, rows_expand(m, x.dim(1)));
  return add(log(rows_sum(exp(shifted))), m);
}

Tensor l2_normalize_rows(const Tensor& x, double eps) {
  UF_OP_TIMER("l2_normalize_rows");
  check_ndim(x, 2, "l2_normalize_rows");
  Tensor norm2 = rows_sum(square(x));
  Tensor inv = recip(sqrt(add_scalar(norm2, eps)));
  return mul(x, rows_expand(inv, x.dim(1)));
}

Tensor row_dot(const Tensor& a, const Tensor& b) {
  UF_OP_TIMER("row_dot");
  check_same_shape(a, b, "row_dot");
  return rows_sum(mul(a, b));
}

}  // namespace unfilter::ops
