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

#include "unfilter/loss/losses.hpp"

#include <cmath>

namespace unfilter::loss {

namespace o = ::unfilter::ops;

namespace {

// [R,C1] ++ [R,C2] along columns, built on the channel concat op.
Tensor concat_cols(const Tensor& a, const Tensor& b) {
  const int r = a.dim(0);
  Tensor a4 = o::reshape(a, {r, a.dim(1), 1, 1});
  Tensor b4 = o::reshape(b, {r, b.dim(1), 1, 1});
  return o::reshape(o::concat_channels(a4, b4), {r, a.dim(1) + b.dim(1)});
}

void check_aligned(const patches::PatchSet& a, const patches::PatchSet& b,
                   const char* name) {
  UF_CHECK(a.level_count() == b.level_count(), ShapeError,
           std::string(name) + ": level count mismatch");
  UF_CHECK(a.batch == b.batch, ShapeError, std::string(name) + ": batch mismatch");
  UF_CHECK(a.locations == b.locations, ValidationError,
           std::string(name) + ": patch sets must share one location list");
}

double finite_or_throw(const Tensor& t, const char* name) {
  const double v = t.item();
  UF_CHECK(std::isfinite(v), DivergenceError,
           std::string("non-finite loss component: ") + name);
  return v;
}

}  // namespace

nlohmann::ordered_json LossReport::to_json() const {
  return nlohmann::ordered_json{
      {"step", step},           {"content_nce", content_nce},
      {"style_nce", style_nce}, {"patchnce", patchnce},
      {"consistency", consistency}, {"adv_g", adv_g},
      {"adv_d", adv_d},         {"gp", gp},
      {"identity", identity},   {"total_g", total_g}};
}

Tensor info_nce(const Tensor& query, const Tensor& positive,
                const Tensor& negatives, double tau) {
  UF_CHECK(tau > 0, ValidationError, "info_nce: tau must be > 0");
  UF_CHECK(negatives.ndim() == 2, ShapeError, "info_nce: negatives want [N,K]");
  const int k = negatives.dim(1);
  UF_CHECK(query.numel() == k && positive.numel() == k, ShapeError,
           "info_nce: dimension mismatch");
  Tensor q = o::reshape(query, {1, k});
  Tensor p = o::reshape(positive, {1, k});
  Tensor qp = o::row_dot(q, p);                       // [1]
  Tensor qn = o::matmul(q, negatives, false, true);   // [1,N]
  Tensor logits = o::mul_scalar(concat_cols(o::reshape(qp, {1, 1}), qn), 1.0 / tau);
  Tensor lse = o::logsumexp_rows(logits);             // [1]
  return o::sub(lse, o::mul_scalar(qp, 1.0 / tau));
}

Tensor content_nce(const patches::PatchSet& output_set,
                   const patches::PatchSet& filtered_set, double tau) {
  UF_CHECK(tau > 0, ValidationError, "content_nce: tau must be > 0");
  check_aligned(output_set, filtered_set, "content_nce");
  const int levels = output_set.level_count();
  const int b = output_set.batch;
  Tensor acc;
  for (int l = 0; l < levels; ++l) {
    const int t = static_cast<int>(output_set.locations[l].size());
    UF_CHECK(t >= 2, ValidationError,
             "content_nce: fewer than 2 locations in level " + std::to_string(l) +
                 " (no negatives)");
    const int d = output_set.embeddings[l].dim(1);
    Tensor q = o::reshape(output_set.embeddings[l], {b, t, d});
    Tensor p = o::reshape(filtered_set.embeddings[l], {b, t, d});
    // similarities within each sample only: [B,T,T]
    Tensor sim = o::mul_scalar(o::bmm(q, o::transpose_last2(p)), 1.0 / tau);
    Tensor pos = o::reshape(o::bdiag(sim), {b * t});
    Tensor lse = o::logsumexp_rows(o::reshape(sim, {b * t, t}));
    acc = acc.defined() ? o::add(acc, o::mean_all(o::sub(lse, pos)))
                        : o::mean_all(o::sub(lse, pos));
  }
  return o::mul_scalar(acc, 1.0 / levels);
}

Tensor style_nce(const patches::PatchSet& output_set,
                 const patches::PatchSet& original_set,
                 const patches::PatchSet& filtered_set, double tau,
                 RngStream& neg_rng, bool same_location_negative) {
  UF_CHECK(tau > 0, ValidationError, "style_nce: tau must be > 0");
  check_aligned(output_set, original_set, "style_nce");
  check_aligned(output_set, filtered_set, "style_nce");
  const int levels = output_set.level_count();
  const int b = output_set.batch;
  Tensor acc;
  for (int l = 0; l < levels; ++l) {
    const int t = static_cast<int>(output_set.locations[l].size());
    UF_CHECK(t >= 2, ValidationError,
             "style_nce: fewer than 2 locations in level " + std::to_string(l));
    // one negative per (sample, location): a filtered descriptor at t' != t
    std::vector<int> neg_rows(static_cast<size_t>(b) * t);
    for (int bi = 0; bi < b; ++bi) {
      for (int ti = 0; ti < t; ++ti) {
        int tn = ti;
        if (!same_location_negative) {
          tn = static_cast<int>(neg_rng.randint(t - 1));
          if (tn >= ti) ++tn;
        }
        neg_rows[static_cast<size_t>(bi) * t + ti] = bi * t + tn;
      }
    }
    Tensor q = output_set.embeddings[l];
    Tensor pos = o::row_dot(q, original_set.embeddings[l]);  // [B*T]
    Tensor neg = o::row_dot(q, o::gather_rows(filtered_set.embeddings[l], neg_rows));
    Tensor logits = o::mul_scalar(
        concat_cols(o::reshape(pos, {b * t, 1}), o::reshape(neg, {b * t, 1})),
        1.0 / tau);
    Tensor lse = o::logsumexp_rows(logits);
    Tensor term = o::mean_all(o::sub(lse, o::mul_scalar(pos, 1.0 / tau)));
    acc = acc.defined() ? o::add(acc, term) : term;
  }
  return o::mul_scalar(acc, 1.0 / levels);
}

Tensor patchnce_total(const Tensor& l_content, const Tensor& l_style,
                      const NCEConfig& cfg) {
  Tensor total = o::mul_scalar(l_content, cfg.gamma_c);
  if (l_style.defined()) total = o::add(total, o::mul_scalar(l_style, cfg.gamma_s));
  return total;
}

DiscLossParts discriminator_loss(const CriticFn& critic, const Tensor& real,
                                 const Tensor& fake, double lambda_gp,
                                 RngStream& u_rng) {
  UF_CHECK(real.shape() == fake.shape(), ShapeError,
           "discriminator_loss: real/fake shape mismatch");
  const int b = real.dim(0);
  Tensor s_real = critic(real);
  Tensor s_fake = critic(fake);
  Tensor wass = o::sub(o::mean_all(s_fake), o::mean_all(s_real));

  // x_int = u*x + (1-u)*x_hat with per-sample u ~ U(0,1)
  std::vector<double> u(b);
  for (double& v : u) v = u_rng.uniform();
  Tensor u_t = Tensor::from_data({b}, u);
  Tensor interp;
  {
    NoGradGuard ng;
    Tensor u_full = o::batch_expand(u_t, real.shape());
    Tensor um_full = o::add_scalar(o::mul_scalar(u_full, -1.0), 1.0);
    interp = o::add(o::mul(u_full, real.detach()), o::mul(um_full, fake.detach()));
  }
  interp.set_requires_grad(true);
  Tensor s_int = critic(interp);
  std::vector<Tensor> g = autograd::grad(o::sum_all(s_int), {interp}, true);
  // a critic that ignores its input has an exactly-zero gradient
  if (!g[0].defined()) g[0] = Tensor::zeros(interp.shape());
  Tensor grad_norm = o::sqrt(o::add_scalar(o::batch_sum(o::square(g[0])), 1e-12));
  Tensor gp = o::mean_all(o::square(o::add_scalar(grad_norm, -1.0)));

  DiscLossParts parts;
  parts.wasserstein = wass;
  parts.gp = gp;
  parts.total = o::add(wass, o::mul_scalar(gp, lambda_gp));
  return parts;
}

Tensor generator_adv_loss(const CriticFn& critic, const Tensor& fake) {
  return o::neg(o::mean_all(critic(fake)));
}

Tensor consistency_loss(const Tensor& output_image, const Tensor& original_image,
                        const nn::Generator& frozen_encoder) {
  UF_CHECK(output_image.shape() == original_image.shape(), ShapeError,
           "consistency_loss: shape mismatch");
  Tensor pixel = o::mean_all(o::abs(o::sub(output_image, original_image)));
  nn::FeaturePyramid f_out = frozen_encoder.encode_image(output_image);
  nn::FeaturePyramid f_org = frozen_encoder.encode_image(original_image);
  Tensor feat;
  for (int l = 0; l < f_out.num_levels(); ++l) {
    Tensor d = o::mean_all(o::abs(o::sub(f_out.levels[l], f_org.levels[l])));
    feat = feat.defined() ? o::add(feat, d) : d;
  }
  feat = o::mul_scalar(feat, 1.0 / f_out.num_levels());
  return o::add(pixel, feat);
}

Tensor identity_regularization(const nn::Generator& model,
                               const patches::SamplerHeads& heads,
                               const Tensor& original_image, int num_patches,
                               double tau, RngStream& loc_rng,
                               const nn::FeaturePyramid* original_pyramid) {
  Tensor idt = model.remove_filter(original_image);
  nn::FeaturePyramid idt_pyr = model.encode_image(idt);
  nn::FeaturePyramid org_pyr =
      original_pyramid ? *original_pyramid : model.encode_image(original_image);
  auto locations = patches::sample_locations(idt_pyr, num_patches, loc_rng);
  patches::PatchSet idt_set = patches::project_content(idt_pyr, locations, heads);
  patches::PatchSet org_set = patches::project_content(org_pyr, locations, heads);
  return content_nce(idt_set, org_set, tau);
}

Tensor generator_objective(const GeneratorLossParts& parts,
                           const LossWeights& weights, LossReport& report) {
  report.patchnce = finite_or_throw(parts.patchnce, "patchnce");
  report.adv_g = finite_or_throw(parts.adv, "adv_g");
  Tensor total = o::add(o::mul_scalar(parts.patchnce, weights.lambda_p),
                        o::mul_scalar(parts.adv, weights.lambda_a));
  if (parts.consistency.defined()) {
    report.consistency = finite_or_throw(parts.consistency, "consistency");
    total = o::add(total, o::mul_scalar(parts.consistency, weights.lambda_c));
  } else {
    report.consistency = 0;
  }
  if (parts.identity.defined()) {
    report.identity = finite_or_throw(parts.identity, "identity");
    total = o::add(total, o::mul_scalar(parts.identity, weights.lambda_p));
  } else {
    report.identity = 0;
  }
  report.total_g = finite_or_throw(total, "total_g");
  return total;
}

}  // namespace unfilter::loss
