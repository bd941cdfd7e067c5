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

#include <memory>
#include <optional>

#include "unfilter/data/loader.hpp"
#include "unfilter/metrics/metrics.hpp"
#include "unfilter/train/checkpoint.hpp"
#include "unfilter/train/optimizer.hpp"

namespace unfilter::train {

struct EvalRow {
  int source_id = 0;
  int filter_id = 0;
  std::string filter_name;
  double psnr = 0;
  double ssim = 0;
  double delta_e = 0;
  std::map<std::string, double> extra;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::map<std::string, double> aggregate;              // metric -> mean
  std::map<std::string, std::map<std::string, double>> per_filter;
};

/// Owns the generator, discriminator, sampler heads, the three Adam groups
/// and the named RNG streams. One discriminator update then one generator +
/// sampler update per step.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);
  static Trainer from_checkpoint(const std::string& path);

  loss::LossReport train_step(const data::Batch& batch);
  /// The two halves of a step, exposed for targeted tests and custom loops.
  void discriminator_update(const data::Batch& batch, loss::LossReport& report);
  void generator_update(const data::Batch& batch, loss::LossReport& report);

  /// Full loop: streams batches, logs every step (JSONL), checkpoints every
  /// `checkpoint_every` steps plus a final checkpoint. Returns the final
  /// checkpoint path.
  std::string train(const data::CorpusManifest& manifest, const std::string& root,
                    const std::string& out_dir);

  /// Runs the generator on every pair of the split; writes report.csv,
  /// summary.json and one residual image per filter under out_dir.
  EvalReport evaluate(const data::CorpusManifest& manifest, const std::string& root,
                      const std::string& split, const std::string& out_dir,
                      const metrics::MetricPlugins& plugins = {});

  /// Inference on one batch, no gradients recorded.
  Tensor remove_filter(const Tensor& images) const;

  Checkpoint make_checkpoint() const;
  void save(const std::string& path) const;

  int64_t step() const { return step_; }
  const TrainConfig& config() const { return cfg_; }
  const nn::Generator& generator() const { return gen_; }
  const nn::Discriminator& discriminator() const { return disc_; }
  const patches::SamplerHeads& sampler_heads() const { return heads_; }

 private:
  void ensure_sampler_optimizer();

  TrainConfig cfg_;
  RngPool rngs_;
  nn::Generator gen_;
  nn::Discriminator disc_;
  patches::SamplerHeads heads_;
  std::unique_ptr<Adam> opt_g_, opt_d_, opt_s_;
  std::unique_ptr<nn::Generator> frozen_;  // consistency-loss encoder cache
  int64_t step_ = 0;
};

}  // namespace unfilter::train
