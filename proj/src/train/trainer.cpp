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

#include "unfilter/train/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "unfilter/image/png_io.hpp"

namespace fs = std::filesystem;

namespace unfilter::train {

Trainer::Trainer(TrainConfig cfg)
    : cfg_(std::move(cfg)), rngs_(cfg_.seed, cfg_.stream_seed_overrides) {
  cfg_.validate();
  RngStream& init = rngs_.stream("init");
  gen_ = nn::Generator(cfg_.model, init);
  disc_ = nn::Discriminator(cfg_.model, init);
  heads_.embed_dim = cfg_.model.embed_dim;
  opt_g_ = std::make_unique<Adam>(gen_.params(), cfg_.lr_generator, cfg_.adam_beta1,
                                  cfg_.adam_beta2, cfg_.adam_eps);
  opt_d_ = std::make_unique<Adam>(disc_.params(), cfg_.lr_discriminator,
                                  cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps);
}

void Trainer::ensure_sampler_optimizer() {
  if (!opt_s_ && heads_.initialized()) {
    opt_s_ = std::make_unique<Adam>(heads_.params(), cfg_.lr_samplers,
                                    cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps);
  }
}

loss::LossReport Trainer::train_step(const data::Batch& batch) {
  UF_CHECK(batch.size() > 0, ValidationError, "train_step: empty batch");
  loss::LossReport report;
  report.step = step_;
  for (int i = 0; i < cfg_.d_updates_per_g; ++i) discriminator_update(batch, report);
  generator_update(batch, report);
  ++step_;
  report.step = step_;
  return report;
}

void Trainer::discriminator_update(const data::Batch& batch, loss::LossReport& report) {
  const Tensor real = batch.original;
  const Tensor filtered = batch.filtered;
  loss::CriticFn critic = [this](const Tensor& x) { return disc_.critic_scalar(x); };
  opt_d_->zero_grad();
  Tensor fake;
  {
    NoGradGuard ng;
    fake = gen_.remove_filter(filtered);
  }
  loss::DiscLossParts parts = loss::discriminator_loss(
      critic, real, fake, cfg_.weights.lambda_gp, rngs_.stream("gp_u"));
  report.adv_d = parts.total.item();
  report.gp = parts.gp.item();
  UF_CHECK(std::isfinite(report.adv_d), DivergenceError,
           "non-finite loss component: adv_d");
  autograd::backward(parts.total);
  opt_d_->step();
}

namespace {

// Temporarily drops requires_grad on a parameter group so backward passes
// prune gradient work for parameters that will not be stepped.
class ParamFreezeGuard {
 public:
  explicit ParamFreezeGuard(const nn::ParamList& params) : params_(params) {
    for (auto& p : params_) p.tensor.unsafe_impl()->requires_grad = false;
  }
  ~ParamFreezeGuard() {
    for (auto& p : params_) p.tensor.unsafe_impl()->requires_grad = true;
  }

 private:
  nn::ParamList params_;
};

}  // namespace

void Trainer::generator_update(const data::Batch& batch, loss::LossReport& report) {
  const Tensor real = batch.original;
  const Tensor filtered = batch.filtered;
  loss::CriticFn critic = [this](const Tensor& x) { return disc_.critic_scalar(x); };
  // the adversarial term only needs gradients w.r.t. the generator here
  ParamFreezeGuard freeze_disc(disc_.params());
  opt_g_->zero_grad();
  if (opt_s_) opt_s_->zero_grad();

  nn::FeaturePyramid filt_pyr = gen_.encode_image(filtered);
  Tensor fake = gen_.decode(filt_pyr);
  nn::FeaturePyramid out_pyr = gen_.encode_image(fake);
  heads_.ensure_init(out_pyr, rngs_.stream("init"));
  ensure_sampler_optimizer();

  auto locations =
      patches::sample_locations(out_pyr, cfg_.num_patches, rngs_.stream("locations"));
  patches::PatchSet out_content = patches::project_content(out_pyr, locations, heads_);
  patches::PatchSet filt_content = patches::project_content(filt_pyr, locations, heads_);
  Tensor l_content = loss::content_nce(out_content, filt_content, cfg_.nce.tau);
  report.content_nce = l_content.item();

  nn::FeaturePyramid org_pyr;
  const bool need_org_pyr = cfg_.enable_style_nce || cfg_.enable_identity_reg;
  if (need_org_pyr) org_pyr = gen_.encode_image(real);

  Tensor l_style;
  if (cfg_.enable_style_nce) {
    patches::PatchSet out_style =
        patches::project_style(out_pyr, locations, heads_, cfg_.gram_window);
    patches::PatchSet org_style =
        patches::project_style(org_pyr, locations, heads_, cfg_.gram_window);
    patches::PatchSet filt_style =
        patches::project_style(filt_pyr, locations, heads_, cfg_.gram_window);
    l_style = loss::style_nce(out_style, org_style, filt_style, cfg_.nce.tau,
                              rngs_.stream("style_neg"),
                              cfg_.style_negative_same_location);
    report.style_nce = l_style.item();
  }

  loss::GeneratorLossParts parts;
  parts.patchnce = loss::patchnce_total(l_content, l_style, cfg_.nce);
  parts.adv = loss::generator_adv_loss(critic, fake);
  if (cfg_.enable_consistency) {
    if (!frozen_) frozen_ = std::make_unique<nn::Generator>(gen_.frozen_clone());
    else frozen_->assign_frozen_from(gen_);
    parts.consistency = loss::consistency_loss(fake, real, *frozen_);
  }
  if (cfg_.enable_identity_reg) {
    parts.identity = loss::identity_regularization(
        gen_, heads_, real, cfg_.num_patches, cfg_.nce.tau,
        rngs_.stream("locations"), &org_pyr);
  }
  Tensor total = loss::generator_objective(parts, cfg_.weights, report);
  autograd::backward(total);
  opt_g_->step();
  opt_s_->step();
}

std::string Trainer::train(const data::CorpusManifest& manifest,
                           const std::string& root, const std::string& out_dir) {
  fs::create_directories(fs::path(out_dir) / "checkpoints");
  save_train_config(cfg_, (fs::path(out_dir) / "config.json").string());

  std::ofstream log(fs::path(out_dir) / "loss_log.jsonl",
                    step_ == 0 ? std::ios::trunc : std::ios::app);
  UF_CHECK(log.good(), IoError, "train: cannot open loss log");

  data::BatchStream stream(manifest, root, "train", cfg_.batch_size, cfg_.seed,
                           /*training=*/true, cfg_.image_size);
  // replay the data stream up to the current step when resuming
  for (int64_t s = 0; s < step_; ++s) stream.next();

  while (step_ < cfg_.total_steps) {
    data::Batch batch = stream.next();
    loss::LossReport report = train_step(batch);
    nlohmann::ordered_json line = report.to_json();
    line["lr_g"] = opt_g_->lr();
    line["lr_d"] = opt_d_->lr();
    line["lr_s"] = opt_s_ ? opt_s_->lr() : cfg_.lr_samplers;
    log << line.dump() << "\n";
    log.flush();
    if (cfg_.checkpoint_every > 0 && step_ % cfg_.checkpoint_every == 0 &&
        step_ < cfg_.total_steps) {
      std::ostringstream name;
      name << "step_" << std::setw(6) << std::setfill('0') << step_ << ".ckpt";
      save((fs::path(out_dir) / "checkpoints" / name.str()).string());
    }
  }
  const std::string final_path = (fs::path(out_dir) / "checkpoints" / "final.ckpt").string();
  save(final_path);
  return final_path;
}

Tensor Trainer::remove_filter(const Tensor& images) const {
  NoGradGuard ng;
  return gen_.remove_filter(images);
}

Checkpoint Trainer::make_checkpoint() const {
  Checkpoint ckpt;
  ckpt.config = cfg_;
  ckpt.step = step_;
  ckpt.rng_states = rngs_.serialize_all();
  ckpt.adam_steps["g"] = opt_g_->step_count();
  ckpt.adam_steps["d"] = opt_d_->step_count();
  ckpt.adam_steps["s"] = opt_s_ ? opt_s_->step_count() : 0;

  auto add_group = [&ckpt](const std::string& group, const nn::ParamList& params,
                           const Adam* opt) {
    for (size_t i = 0; i < params.size(); ++i) {
      ckpt.tensors.emplace_back("param/" + params[i].name,
                                params[i].tensor.clone_detached());
      if (opt) {
        const auto& name = params[i].name;
        ckpt.tensors.emplace_back(
            "adam/" + group + "/m/" + name,
            Tensor::from_data(params[i].tensor.shape(), opt->first_moments()[i]));
        ckpt.tensors.emplace_back(
            "adam/" + group + "/v/" + name,
            Tensor::from_data(params[i].tensor.shape(), opt->second_moments()[i]));
      }
    }
  };
  add_group("g", gen_.params(), opt_g_.get());
  add_group("d", disc_.params(), opt_d_.get());
  if (heads_.initialized()) add_group("s", heads_.params(), opt_s_.get());
  return ckpt;
}

void Trainer::save(const std::string& path) const {
  save_checkpoint(make_checkpoint(), path);
}

Trainer Trainer::from_checkpoint(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  Trainer t(ckpt.config);
  t.step_ = ckpt.step;
  t.rngs_.deserialize_all(ckpt.rng_states);

  auto load_group = [&ckpt](const std::string& group, const nn::ParamList& params,
                            Adam* opt) {
    std::vector<std::vector<double>> m, v;
    for (const auto& p : params) {
      const Tensor* data = ckpt.find("param/" + p.name);
      UF_CHECK(data, IoError, "checkpoint missing tensor: " + p.name);
      UF_CHECK(data->shape() == p.tensor.shape(), IoError,
               "checkpoint/config mismatch for tensor " + p.name);
      p.tensor.unsafe_impl()->storage->assign(data->data(), data->numel());
      if (opt) {
        const Tensor* tm = ckpt.find("adam/" + group + "/m/" + p.name);
        const Tensor* tv = ckpt.find("adam/" + group + "/v/" + p.name);
        UF_CHECK(tm && tv, IoError, "checkpoint missing moments for " + p.name);
        m.emplace_back(tm->data(), tm->data() + tm->numel());
        v.emplace_back(tv->data(), tv->data() + tv->numel());
      }
    }
    if (opt) opt->restore(ckpt.adam_steps.at(group), std::move(m), std::move(v));
  };
  load_group("g", t.gen_.params(), t.opt_g_.get());
  load_group("d", t.disc_.params(), t.opt_d_.get());

  // sampler heads were saved only if they had been initialized
  const bool has_heads = ckpt.find("param/sampler.content0.fc1.weight") != nullptr;
  if (has_heads) {
    // rebuild head shapes from a dry encode at the configured size
    NoGradGuard ng;
    Tensor probe = Tensor::zeros({1, 3, t.cfg_.image_size, t.cfg_.image_size});
    nn::FeaturePyramid pyr = t.gen_.encode_image(probe);
    RngStream scratch(0);
    t.heads_.ensure_init(pyr, scratch);
    t.ensure_sampler_optimizer();
    load_group("s", t.heads_.params(), t.opt_s_.get());
  }
  return t;
}

EvalReport Trainer::evaluate(const data::CorpusManifest& manifest,
                             const std::string& root, const std::string& split,
                             const std::string& out_dir,
                             const metrics::MetricPlugins& plugins) {
  data::SplitLoader loader(manifest, root, split);
  UF_CHECK(loader.pair_count() > 0, ValidationError,
           "evaluate: split '" + split + "' is empty");
  fs::create_directories(fs::path(out_dir) / "residuals");

  EvalReport report;
  std::map<int, bool> wrote_residual;
  for (const data::PairRef& ref : loader.pairs()) {
    data::ImagePair pair = loader.load_pair(ref);
    pair = data::preprocess_with_flip(pair, cfg_.image_size, /*flip=*/false);
    Tensor out = remove_filter(images_to_tensor({pair.filtered}));
    Image recovered = tensor_to_image(out);
    EvalRow row;
    row.source_id = pair.source_id;
    row.filter_id = pair.filter_id;
    row.filter_name = manifest.bank.at(pair.filter_id).name;
    row.psnr = metrics::psnr(recovered, pair.original);
    row.ssim = metrics::ssim(recovered, pair.original);
    row.delta_e = metrics::delta_e_2000(recovered, pair.original);
    for (const auto& [name, fn] : plugins) row.extra[name] = fn(recovered, pair.original);
    if (!wrote_residual[pair.filter_id]) {
      wrote_residual[pair.filter_id] = true;
      write_png((fs::path(out_dir) / "residuals" / (row.filter_name + ".png")).string(),
                metrics::residual_image(recovered, pair.original));
    }
    report.rows.push_back(std::move(row));
  }

  // aggregates: overall and per filter
  auto mean_of = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  std::map<std::string, std::vector<double>> overall;
  std::map<std::string, std::map<std::string, std::vector<double>>> by_filter;
  for (const auto& row : report.rows) {
    overall["psnr"].push_back(row.psnr);
    overall["ssim"].push_back(row.ssim);
    overall["delta_e"].push_back(row.delta_e);
    by_filter[row.filter_name]["psnr"].push_back(row.psnr);
    by_filter[row.filter_name]["ssim"].push_back(row.ssim);
    by_filter[row.filter_name]["delta_e"].push_back(row.delta_e);
    for (const auto& [name, value] : row.extra) {
      overall[name].push_back(value);
      by_filter[row.filter_name][name].push_back(value);
    }
  }
  for (const auto& [name, values] : overall) report.aggregate[name] = mean_of(values);
  for (const auto& [fname, metric_map] : by_filter) {
    for (const auto& [mname, values] : metric_map) {
      report.per_filter[fname][mname] = mean_of(values);
    }
  }

  // report.csv
  {
    std::ofstream csv(fs::path(out_dir) / "report.csv");
    UF_CHECK(csv.good(), IoError, "evaluate: cannot write report.csv");
    csv << "source_id,filter_id,filter_name,psnr,ssim,delta_e";
    for (const auto& [name, fn] : plugins) csv << "," << name;
    csv << "\n";
    csv << std::setprecision(10);
    for (const auto& row : report.rows) {
      csv << row.source_id << "," << row.filter_id << "," << row.filter_name << ","
          << row.psnr << "," << row.ssim << "," << row.delta_e;
      for (const auto& [name, fn] : plugins) csv << "," << row.extra.at(name);
      csv << "\n";
    }
  }
  // summary.json
  {
    nlohmann::ordered_json j;
    j["split"] = split;
    j["pairs"] = report.rows.size();
    j["aggregate"] = report.aggregate;
    j["per_filter"] = report.per_filter;
    std::ofstream js(fs::path(out_dir) / "summary.json");
    UF_CHECK(js.good(), IoError, "evaluate: cannot write summary.json");
    js << j.dump(2) << "\n";
  }
  return report;
}

}  // namespace unfilter::train
