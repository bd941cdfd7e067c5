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
#include "unfilter/loss/losses.hpp"

using namespace unfilter;
using namespace unfilter::loss;
namespace o = unfilter::ops;

namespace {

// independent oracle: softmax cross-entropy with the positive as class 0
double info_nce_oracle(const std::vector<double>& q, const std::vector<double>& p,
                       const std::vector<std::vector<double>>& negs, double tau) {
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  std::vector<double> logits;
  logits.push_back(dot(q, p) / tau);
  for (const auto& n : negs) logits.push_back(dot(q, n) / tau);
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0;
  for (double l : logits) z += std::exp(l - m);
  return -(logits[0] - m - std::log(z));
}

std::vector<double> unit_vec(std::vector<double> v) {
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

std::vector<double> random_unit(int k, RngStream& rng) {
  std::vector<double> v(k);
  for (double& x : v) x = rng.normal();
  return unit_vec(std::move(v));
}

patches::PatchSet manual_set(int batch, const std::vector<std::vector<double>>& rows,
                             const std::vector<int>& locations) {
  patches::PatchSet set;
  set.batch = batch;
  const int d = static_cast<int>(rows[0].size());
  std::vector<double> data;
  for (const auto& r : rows) data.insert(data.end(), r.begin(), r.end());
  set.embeddings.push_back(
      Tensor::from_data({static_cast<int>(rows.size()), d}, std::move(data)));
  set.locations.push_back(locations);
  return set;
}

}  // namespace

TEST_CASE("info_nce: uniform similarities give ln(N+1)") {
  // q orthogonal to p and every negative -> all similarities equal (zero)
  const int k = 4, n = 255;
  std::vector<double> q = {1, 0, 0, 0}, p = {0, 1, 0, 0};
  std::vector<double> negs(n * k, 0.0);
  for (int i = 0; i < n; ++i) negs[i * k + 2] = 1.0;
  Tensor loss = info_nce(Tensor::from_data({k}, q), Tensor::from_data({k}, p),
                         Tensor::from_data({n, k}, negs), 0.07);
  CHECK(loss.item() == doctest::Approx(std::log(256.0)).epsilon(1e-9));
  CHECK(std::log(256.0) == doctest::Approx(5.5452).epsilon(1e-4));
}

TEST_CASE("info_nce: strongly separated 2-way case is nearly zero") {
  std::vector<double> q = {1, 0}, p = {1, 0}, n = {-1, 0};
  Tensor loss = info_nce(Tensor::from_data({2}, q), Tensor::from_data({2}, p),
                         Tensor::from_data({1, 2}, n), 0.07);
  CHECK(loss.item() == doctest::Approx(std::log1p(std::exp(-2.0 / 0.07))).epsilon(1e-6));
  CHECK(loss.item() < 1e-11);
  CHECK(loss.item() > 0.0);
}

TEST_CASE("info_nce equals the brute-force oracle on random draws") {
  RngStream rng(50);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.randint(6));
    const int n = 1 + static_cast<int>(rng.randint(8));
    const double tau = 0.03 + rng.uniform() * 0.5;
    auto q = random_unit(k, rng);
    auto p = random_unit(k, rng);
    std::vector<std::vector<double>> negs;
    std::vector<double> flat;
    for (int i = 0; i < n; ++i) {
      negs.push_back(random_unit(k, rng));
      flat.insert(flat.end(), negs.back().begin(), negs.back().end());
    }
    Tensor loss = info_nce(Tensor::from_data({k}, q), Tensor::from_data({k}, p),
                           Tensor::from_data({n, k}, flat), tau);
    CHECK(std::abs(loss.item() - info_nce_oracle(q, p, negs, tau)) < 1e-6);
  }
}

TEST_CASE("info_nce: bounds, monotonicity, stability, validation") {
  RngStream rng(51);
  auto q = random_unit(3, rng);
  std::vector<double> negs_flat;
  for (int i = 0; i < 4; ++i) {
    auto n = random_unit(3, rng);
    negs_flat.insert(negs_flat.end(), n.begin(), n.end());
  }
  Tensor qt = Tensor::from_data({3}, q);
  Tensor nt = Tensor::from_data({4, 3}, negs_flat);
  // loss strictly decreases as q.p increases (p rotated toward q)
  double prev = 1e9;
  for (double align : {-0.5, 0.0, 0.5, 0.9, 0.99}) {
    std::vector<double> p = {align, std::sqrt(1 - align * align), 0.0};
    // express p in a basis where q is the first axis
    std::vector<double> pw(3);
    std::vector<double> e2 = unit_vec({-q[1], q[0], 0.0});
    std::vector<double> e3 = {q[1] * e2[2] - q[2] * e2[1], q[2] * e2[0] - q[0] * e2[2],
                              q[0] * e2[1] - q[1] * e2[0]};
    for (int i = 0; i < 3; ++i) pw[i] = p[0] * q[i] + p[1] * e2[i] + p[2] * e3[i];
    const double v = info_nce(qt, Tensor::from_data({3}, pw), nt, 0.2).item();
    CHECK(v > 0.0);
    CHECK(v < prev);
    prev = v;
  }
  // extreme temperature and similarity stay finite (log-sum-exp)
  std::vector<double> p_eq = q;
  std::vector<double> n_opp = {-q[0], -q[1], -q[2]};
  Tensor stable = info_nce(qt, Tensor::from_data({3}, p_eq),
                           Tensor::from_data({1, 3}, n_opp), 0.01);
  CHECK(std::isfinite(stable.item()));
  CHECK_THROWS_AS(info_nce(qt, qt, nt, 0.0), ValidationError);
  CHECK_THROWS_AS(info_nce(qt, qt, nt, -1.0), ValidationError);
}

TEST_CASE("content_nce matches a hand-rolled oracle (L=1, T=3, K=2, B=1)") {
  const double tau = 0.2;
  std::vector<std::vector<double>> out_rows = {
      unit_vec({1.0, 0.2}), unit_vec({-0.3, 1.0}), unit_vec({0.8, -0.6})};
  std::vector<std::vector<double>> filt_rows = {
      unit_vec({0.9, 0.1}), unit_vec({-0.2, 0.9}), unit_vec({0.7, -0.7})};
  patches::PatchSet out_set = manual_set(1, out_rows, {0, 1, 2});
  patches::PatchSet filt_set = manual_set(1, filt_rows, {0, 1, 2});
  Tensor loss = content_nce(out_set, filt_set, tau);
  double expected = 0;
  for (int t = 0; t < 3; ++t) {
    std::vector<std::vector<double>> negs;
    for (int j = 0; j < 3; ++j) {
      if (j != t) negs.push_back(filt_rows[j]);
    }
    expected += info_nce_oracle(out_rows[t], filt_rows[t], negs, tau);
  }
  expected /= 3.0;
  CHECK(loss.item() == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("content_nce: T=2 means exactly one negative per term") {
  const double tau = 0.5;
  std::vector<std::vector<double>> a = {unit_vec({1.0, 0.0}), unit_vec({0.0, 1.0})};
  std::vector<std::vector<double>> b = {unit_vec({0.6, 0.8}), unit_vec({0.8, -0.6})};
  Tensor loss = content_nce(manual_set(1, a, {0, 1}), manual_set(1, b, {0, 1}), tau);
  double expected = (info_nce_oracle(a[0], b[0], {b[1]}, tau) +
                     info_nce_oracle(a[1], b[1], {b[0]}, tau)) /
                    2.0;
  CHECK(loss.item() == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("content_nce: negatives never cross the batch boundary") {
  // two samples with identical rows; if negatives leaked across the batch the
  // loss would change when batch items are swapped with different content
  const double tau = 0.3;
  std::vector<std::vector<double>> rows1 = {unit_vec({1.0, 0.1}), unit_vec({0.2, 1.0})};
  std::vector<std::vector<double>> rows2 = {unit_vec({-1.0, 0.3}), unit_vec({0.9, -0.4})};
  std::vector<std::vector<double>> both = rows1;
  both.insert(both.end(), rows2.begin(), rows2.end());
  patches::PatchSet q2 = manual_set(2, both, {0, 1});
  patches::PatchSet p2 = manual_set(2, both, {0, 1});
  double expected = 0;
  expected += info_nce_oracle(rows1[0], rows1[0], {rows1[1]}, tau);
  expected += info_nce_oracle(rows1[1], rows1[1], {rows1[0]}, tau);
  expected += info_nce_oracle(rows2[0], rows2[0], {rows2[1]}, tau);
  expected += info_nce_oracle(rows2[1], rows2[1], {rows2[0]}, tau);
  expected /= 4.0;
  CHECK(content_nce(q2, p2, tau).item() == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("content_nce: same-location pairing beats shuffled positives") {
  RngStream rng(52);
  const int t = 8, k = 6;
  std::vector<std::vector<double>> base;
  for (int i = 0; i < t; ++i) base.push_back(random_unit(k, rng));
  // "output equals filtered": embeddings identical -> diagonal optimal
  std::vector<int> locs(t);
  for (int i = 0; i < t; ++i) locs[i] = i;
  Tensor aligned = content_nce(manual_set(1, base, locs), manual_set(1, base, locs), 0.07);
  std::vector<std::vector<double>> shuffled = base;
  std::rotate(shuffled.begin(), shuffled.begin() + 1, shuffled.end());
  Tensor rotated = content_nce(manual_set(1, shuffled, locs), manual_set(1, base, locs), 0.07);
  CHECK(aligned.item() < rotated.item());
}

TEST_CASE("content_nce requires at least 2 locations") {
  std::vector<std::vector<double>> one = {unit_vec({1.0, 0.0})};
  CHECK_THROWS_AS(content_nce(manual_set(1, one, {0}), manual_set(1, one, {0}), 0.07),
                  ValidationError);
}

TEST_CASE("style_nce: equal similarities give ln 2") {
  // all descriptors identical: q.p == q.n always
  std::vector<std::vector<double>> rows = {unit_vec({1.0, 1.0}), unit_vec({1.0, 1.0})};
  patches::PatchSet a = manual_set(1, rows, {0, 1});
  RngStream rng(53);
  Tensor loss = style_nce(a, a, a, 0.07, rng);
  CHECK(loss.item() == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  CHECK(std::log(2.0) == doctest::Approx(0.6931).epsilon(1e-4));
}

TEST_CASE("style_nce matches a 2-way oracle with a pinned negative draw") {
  const double tau = 0.3;
  std::vector<std::vector<double>> out_rows = {unit_vec({1.0, 0.0}), unit_vec({0.0, 1.0})};
  std::vector<std::vector<double>> org_rows = {unit_vec({0.9, 0.2}), unit_vec({0.1, 0.8})};
  std::vector<std::vector<double>> filt_rows = {unit_vec({-0.9, 0.1}), unit_vec({0.3, -0.9})};
  patches::PatchSet out_set = manual_set(1, out_rows, {0, 1});
  patches::PatchSet org_set = manual_set(1, org_rows, {0, 1});
  patches::PatchSet filt_set = manual_set(1, filt_rows, {0, 1});
  // with T=2 the "different location" negative is forced: t'=1 for t=0, t'=0 for t=1
  RngStream rng(54);
  Tensor loss = style_nce(out_set, org_set, filt_set, tau, rng);
  const double expected = (info_nce_oracle(out_rows[0], org_rows[0], {filt_rows[1]}, tau) +
                           info_nce_oracle(out_rows[1], org_rows[1], {filt_rows[0]}, tau)) /
                          2.0;
  CHECK(loss.item() == doctest::Approx(expected).epsilon(1e-6));

  // alternative reading: negative at the same location
  RngStream rng2(55);
  Tensor same_loc = style_nce(out_set, org_set, filt_set, tau, rng2, true);
  const double expected_same =
      (info_nce_oracle(out_rows[0], org_rows[0], {filt_rows[0]}, tau) +
       info_nce_oracle(out_rows[1], org_rows[1], {filt_rows[1]}, tau)) /
      2.0;
  CHECK(same_loc.item() == doctest::Approx(expected_same).epsilon(1e-6));
}

TEST_CASE("style_nce: well-separated descriptors fall below ln 2") {
  std::vector<std::vector<double>> q = {unit_vec({1.0, 0.0}), unit_vec({0.0, 1.0})};
  std::vector<std::vector<double>> n = {unit_vec({-1.0, 0.0}), unit_vec({0.0, -1.0})};
  RngStream rng(56);
  Tensor loss = style_nce(manual_set(1, q, {0, 1}), manual_set(1, q, {0, 1}),
                          manual_set(1, n, {0, 1}), 0.07, rng);
  CHECK(loss.item() < std::log(2.0));
}

TEST_CASE("patchnce_total arithmetic and ablation semantics") {
  NCEConfig cfg;  // gamma 0.5 / 0.5
  Tensor lc = Tensor::scalar(2.0);
  Tensor ls = Tensor::scalar(4.0);
  CHECK(patchnce_total(lc, ls, cfg).item() == doctest::Approx(3.0));
  // no-style-nce: undefined style term -> content-only
  CHECK(patchnce_total(lc, Tensor(), cfg).item() == doctest::Approx(1.0));
  NCEConfig zero;
  zero.gamma_c = 0;
  zero.gamma_s = 0;
  CHECK(patchnce_total(lc, ls, zero).item() == doctest::Approx(0.0));
}

TEST_CASE("discriminator_loss: linear critic gives GP = (|w|-1)^2") {
  RngStream rng(57);
  const int b = 3, h = 4, w = 4;
  // w has norm 3 (per-sample linear critic)
  std::vector<double> wdata(3 * h * w);
  RngStream wrng(58);
  double n2 = 0;
  for (double& v : wdata) {
    v = wrng.normal();
    n2 += v * v;
  }
  for (double& v : wdata) v *= 3.0 / std::sqrt(n2);
  CriticFn critic = [&](const Tensor& x) {
    // score_b = sum_i w_i * x_bi, with w replicated across the batch
    std::vector<double> rep;
    for (int i = 0; i < x.dim(0); ++i) rep.insert(rep.end(), wdata.begin(), wdata.end());
    Tensor wfull = Tensor::from_data(x.shape(), rep);
    return o::batch_sum(o::mul(x, wfull));
  };
  Tensor real = testutil::random_tensor({b, 3, h, w}, rng, 0.4);
  Tensor fake = testutil::random_tensor({b, 3, h, w}, rng, 0.4);
  RngStream u(59);
  DiscLossParts parts = discriminator_loss(critic, real, fake, 10.0, u);
  CHECK(parts.gp.item() == doctest::Approx(4.0).epsilon(1e-6));
  // wasserstein part: mean(fake) - mean(real) under the same critic
  const double sr = critic(real).data()[0] + critic(real).data()[1] + critic(real).data()[2];
  const double sf = critic(fake).data()[0] + critic(fake).data()[1] + critic(fake).data()[2];
  CHECK(parts.wasserstein.item() == doctest::Approx((sf - sr) / 3.0).epsilon(1e-9));
  CHECK(parts.total.item() == doctest::Approx(parts.wasserstein.item() + 10.0 * 4.0).epsilon(1e-6));
}

TEST_CASE("discriminator_loss: constant critic gives GP = 1") {
  CriticFn critic = [](const Tensor& x) {
    return Tensor::full({x.dim(0)}, 2.5);
  };
  RngStream rng(60), u(61);
  Tensor real = testutil::random_tensor({2, 3, 4, 4}, rng, 0.3);
  Tensor fake = testutil::random_tensor({2, 3, 4, 4}, rng, 0.3);
  DiscLossParts parts = discriminator_loss(critic, real, fake, 7.0, u);
  CHECK(parts.wasserstein.item() == doctest::Approx(0.0));
  CHECK(parts.gp.item() == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(parts.total.item() == doctest::Approx(7.0).epsilon(1e-4));
}

TEST_CASE("discriminator_loss: real == fake cancels the wasserstein terms") {
  RngStream rng(62), u(63);
  std::vector<double> wdata(3 * 16, 0.5);
  CriticFn critic = [&](const Tensor& x) {
    std::vector<double> rep;
    for (int i = 0; i < x.dim(0); ++i) rep.insert(rep.end(), wdata.begin(), wdata.end());
    return o::batch_sum(o::mul(x, Tensor::from_data(x.shape(), rep)));
  };
  Tensor img = testutil::random_tensor({2, 3, 4, 4}, rng, 0.3);
  DiscLossParts parts = discriminator_loss(critic, img, img, 2.0, u);
  CHECK(parts.wasserstein.item() == doctest::Approx(0.0));
  CHECK(parts.total.item() == doctest::Approx(2.0 * parts.gp.item()).epsilon(1e-9));
}

TEST_CASE("generator_adv_loss: constant critic and monotonicity") {
  CriticFn constant = [](const Tensor& x) { return Tensor::full({x.dim(0)}, 1.25); };
  RngStream rng(64);
  Tensor fake = testutil::random_tensor({2, 3, 4, 4}, rng, 0.3);
  CHECK(generator_adv_loss(constant, fake).item() == doctest::Approx(-1.25));
  CriticFn higher = [](const Tensor& x) { return Tensor::full({x.dim(0)}, 2.0); };
  CHECK(generator_adv_loss(higher, fake).item() < generator_adv_loss(constant, fake).item());
}

TEST_CASE("generator_objective arithmetic, flags and divergence reporting") {
  LossWeights w;  // 0.5 / 1e-3 / 1e-3
  LossReport report;
  GeneratorLossParts parts;
  parts.patchnce = Tensor::scalar(2.0);
  parts.consistency = Tensor::scalar(10.0);
  parts.adv = Tensor::scalar(-5.0);
  Tensor total = generator_objective(parts, w, report);
  CHECK(total.item() == doctest::Approx(1.005).epsilon(1e-12));
  CHECK(report.total_g ==
        doctest::Approx(w.lambda_p * report.patchnce + w.lambda_c * report.consistency +
                        w.lambda_a * report.adv_g)
            .epsilon(1e-6));

  // identity term enters with lambda_p
  parts.identity = Tensor::scalar(3.0);
  LossReport r2;
  Tensor t2 = generator_objective(parts, w, r2);
  CHECK(t2.item() == doctest::Approx(1.005 + 0.5 * 3.0).epsilon(1e-12));

  LossWeights zero;
  zero.lambda_p = zero.lambda_c = zero.lambda_a = 0;
  LossReport r3;
  GeneratorLossParts p3;
  p3.patchnce = Tensor::scalar(2.0);
  p3.consistency = Tensor::scalar(10.0);
  p3.adv = Tensor::scalar(-5.0);
  CHECK(generator_objective(p3, zero, r3).item() == doctest::Approx(0.0));

  GeneratorLossParts bad;
  bad.patchnce = Tensor::scalar(std::numeric_limits<double>::quiet_NaN());
  bad.adv = Tensor::scalar(0.0);
  LossReport r4;
  try {
    generator_objective(bad, w, r4);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("patchnce") != std::string::npos);
  }
}

TEST_CASE("loss gradchecks on micro shapes") {
  RngStream rng(65);
  // info_nce wrt q, p, negatives
  Tensor q = testutil::random_tensor({4}, rng, 1.0, true);
  Tensor p = testutil::random_tensor({4}, rng, 1.0, true);
  Tensor n = testutil::random_tensor({3, 4}, rng, 1.0, true);
  auto res = testutil::grad_check([&] { return info_nce(q, p, n, 0.3); }, {q, p, n});
  CHECK(res.max_rel_err < 1e-3);
}
