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

#include <filesystem>
#include <fstream>

#include "test_util.hpp"
#include "unfilter/data/textures.hpp"
#include "unfilter/train/trainer.hpp"

using namespace unfilter;
using namespace unfilter::train;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "unfilter_trainer_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TrainConfig micro_train_config() {
  TrainConfig cfg;
  cfg.model.num_levels = 2;
  cfg.model.encoder_channels = {4, 8};
  cfg.model.style_channels = {4, 4};
  cfg.model.decoder_blocks = 3;
  cfg.model.embed_dim = 6;
  cfg.model.disc_base_channels = 4;
  cfg.model.disc_scales = 2;
  cfg.image_size = 32;
  cfg.batch_size = 2;
  cfg.num_patches = 8;
  cfg.total_steps = 3;
  cfg.checkpoint_every = 2;
  cfg.seed = 11;
  return cfg;
}

struct CorpusFixture {
  fs::path root;
  data::CorpusManifest manifest;
  explicit CorpusFixture(const std::string& name) : root(fresh_dir(name)) {
    auto sources = data::make_source_textures(4, 32, 21);
    std::vector<filters::FilterSpec> bank = {filters::builtin_filter_bank(21)[1],
                                             filters::builtin_filter_bank(21)[4]};
    manifest = data::generate_corpus(sources, bank, root.string(), 0.75, 21);
  }
  data::Batch batch(const TrainConfig& cfg) const {
    data::BatchStream stream(manifest, root.string(), "train", cfg.batch_size,
                             cfg.seed, true, cfg.image_size);
    return stream.next();
  }
};

std::vector<nlohmann::json> read_log(const fs::path& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::vector<nlohmann::json> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty()) lines.push_back(nlohmann::json::parse(line));
  }
  return lines;
}

std::vector<double> snapshot(const nn::ParamList& params) {
  std::vector<double> out;
  for (const auto& p : params) {
    out.insert(out.end(), p.tensor.data(), p.tensor.data() + p.tensor.numel());
  }
  return out;
}

}  // namespace

TEST_CASE("identical seed and batch give identical loss reports") {
  CorpusFixture corpus("determinism");
  TrainConfig cfg = micro_train_config();
  loss::LossReport r1 = Trainer(cfg).train_step(corpus.batch(cfg));
  loss::LossReport r2 = Trainer(cfg).train_step(corpus.batch(cfg));
  CHECK(r1.total_g == r2.total_g);
  CHECK(r1.adv_d == r2.adv_d);
  CHECK(r1.content_nce == r2.content_nce);
  CHECK(r1.style_nce == r2.style_nce);
  CHECK(r1.gp == r2.gp);
}

TEST_CASE("ablation flags zero their components and recompose exactly") {
  CorpusFixture corpus("flags");
  TrainConfig cfg = micro_train_config();

  auto recompose = [](const loss::LossReport& r, const TrainConfig& c) {
    double total = c.weights.lambda_p * r.patchnce + c.weights.lambda_a * r.adv_g;
    if (c.enable_consistency) total += c.weights.lambda_c * r.consistency;
    if (c.enable_identity_reg) total += c.weights.lambda_p * r.identity;
    return total;
  };

  for (int variant = 0; variant < 4; ++variant) {
    TrainConfig c = cfg;
    c.enable_style_nce = variant != 1;
    c.enable_identity_reg = variant != 2;
    c.enable_consistency = variant != 3;
    loss::LossReport r = Trainer(c).train_step(corpus.batch(c));
    if (!c.enable_style_nce) {
      CHECK(r.style_nce == 0.0);
      CHECK(r.patchnce == doctest::Approx(c.nce.gamma_c * r.content_nce).epsilon(1e-12));
    }
    if (!c.enable_identity_reg) CHECK(r.identity == 0.0);
    if (!c.enable_consistency) CHECK(r.consistency == 0.0);
    CHECK(r.total_g == doctest::Approx(recompose(r, c)).epsilon(1e-6));
  }
}

TEST_CASE("alternating updates touch only their own parameters") {
  CorpusFixture corpus("alternate");
  TrainConfig cfg = micro_train_config();
  Trainer trainer(cfg);
  data::Batch batch = corpus.batch(cfg);

  // run one full step first so the sampler heads exist
  trainer.train_step(batch);

  loss::LossReport scratch;
  auto g_before = snapshot(trainer.generator().params());
  auto s_before = snapshot(trainer.sampler_heads().params());
  trainer.discriminator_update(batch, scratch);
  CHECK(snapshot(trainer.generator().params()) == g_before);
  CHECK(snapshot(trainer.sampler_heads().params()) == s_before);

  auto d_before = snapshot(trainer.discriminator().params());
  trainer.generator_update(batch, scratch);
  CHECK(snapshot(trainer.discriminator().params()) == d_before);
  CHECK(snapshot(trainer.generator().params()) != g_before);
}

TEST_CASE("sampler heads are lazily initialized on the first forward pass") {
  CorpusFixture corpus("lazy");
  TrainConfig cfg = micro_train_config();
  Trainer trainer(cfg);
  CHECK_FALSE(trainer.sampler_heads().initialized());
  trainer.train_step(corpus.batch(cfg));
  CHECK(trainer.sampler_heads().initialized());
  // heads bound to the configured channel widths
  CHECK(trainer.sampler_heads().content.size() == 2);
  CHECK(trainer.sampler_heads().content[0].fc1.weight.dim(1) == 4);
  CHECK(trainer.sampler_heads().content[1].fc1.weight.dim(1) == 8);
}

TEST_CASE("full train loop: logs, checkpoints, constant learning rates") {
  CorpusFixture corpus("loop");
  TrainConfig cfg = micro_train_config();
  auto out1 = fresh_dir("loop_out1");
  Trainer(cfg).train(corpus.manifest, corpus.root.string(), out1.string());

  CHECK(fs::exists(out1 / "config.json"));
  CHECK(fs::exists(out1 / "checkpoints" / "step_000002.ckpt"));
  CHECK(fs::exists(out1 / "checkpoints" / "final.ckpt"));
  auto log = read_log(out1 / "loss_log.jsonl");
  REQUIRE(log.size() == 3);
  for (const auto& line : log) {
    CHECK(line["lr_g"].get<double>() == cfg.lr_generator);
    CHECK(line["lr_d"].get<double>() == cfg.lr_discriminator);
    CHECK(line["lr_s"].get<double>() == cfg.lr_samplers);
  }

  // identical seeds -> identical loss logs
  auto out2 = fresh_dir("loop_out2");
  Trainer(cfg).train(corpus.manifest, corpus.root.string(), out2.string());
  std::ifstream f1(out1 / "loss_log.jsonl"), f2(out2 / "loss_log.jsonl");
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
}

TEST_CASE("resume from checkpoint reproduces the next step") {
  CorpusFixture corpus("resume");
  TrainConfig cfg = micro_train_config();
  auto out_full = fresh_dir("resume_full");
  Trainer(cfg).train(corpus.manifest, corpus.root.string(), out_full.string());
  auto full_log = read_log(out_full / "loss_log.jsonl");
  REQUIRE(full_log.size() == 3);

  auto out_resumed = fresh_dir("resume_cont");
  Trainer resumed =
      Trainer::from_checkpoint((out_full / "checkpoints" / "step_000002.ckpt").string());
  CHECK(resumed.step() == 2);
  resumed.train(corpus.manifest, corpus.root.string(), out_resumed.string());
  auto tail_log = read_log(out_resumed / "loss_log.jsonl");
  REQUIRE(tail_log.size() == 1);

  for (const char* key : {"total_g", "content_nce", "adv_d", "gp", "patchnce"}) {
    const double a = full_log[2][key].get<double>();
    const double b = tail_log[0][key].get<double>();
    CHECK(b == doctest::Approx(a).epsilon(1e-4));
  }
}

TEST_CASE("checkpoint round trip preserves inference behavior bitwise") {
  CorpusFixture corpus("ckpt_rt");
  TrainConfig cfg = micro_train_config();
  Trainer trainer(cfg);
  trainer.train_step(corpus.batch(cfg));
  auto dir = fresh_dir("ckpt_rt_out");
  const auto path = (dir / "t.ckpt").string();
  trainer.save(path);
  Trainer loaded = Trainer::from_checkpoint(path);

  RngStream rng(77);
  Tensor img = testutil::random_tensor({1, 3, 32, 32}, rng, 0.2);
  Tensor a = trainer.remove_filter(img);
  Tensor b = loaded.remove_filter(img);
  CHECK(std::memcmp(a.data(), b.data(), a.numel() * sizeof(double)) == 0);
}

TEST_CASE("evaluate: row counts, aggregates, residual files") {
  CorpusFixture corpus("eval");
  TrainConfig cfg = micro_train_config();
  Trainer trainer(cfg);
  auto out = fresh_dir("eval_out");
  EvalReport report =
      trainer.evaluate(corpus.manifest, corpus.root.string(), "test", out.string());

  int test_sources = 0;
  for (const auto& s : corpus.manifest.sources) test_sources += s.split == "test";
  CHECK(report.rows.size() == static_cast<size_t>(test_sources * 2));  // 2 filters

  double mean_psnr = 0;
  for (const auto& row : report.rows) mean_psnr += row.psnr;
  mean_psnr /= static_cast<double>(report.rows.size());
  CHECK(report.aggregate["psnr"] == doctest::Approx(mean_psnr).epsilon(1e-9));

  CHECK(fs::exists(out / "report.csv"));
  CHECK(fs::exists(out / "summary.json"));
  for (const auto& spec : corpus.manifest.bank) {
    CHECK(fs::exists(out / "residuals" / (spec.name + ".png")));
  }
  // metric plugin hook: extra metric appears in rows
  metrics::MetricPlugins plugins;
  plugins["l1"] = [](const Image& a, const Image& b) {
    double s = 0;
    for (size_t i = 0; i < a.data.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
    return s / static_cast<double>(a.data.size());
  };
  EvalReport with_plugin = trainer.evaluate(corpus.manifest, corpus.root.string(),
                                            "test", out.string(), plugins);
  CHECK(with_plugin.rows[0].extra.count("l1") == 1);
  CHECK(with_plugin.aggregate.count("l1") == 1);
}

TEST_CASE("named rng streams are independent") {
  RngPool base(0);
  std::vector<double> a0, b0;
  for (int i = 0; i < 8; ++i) a0.push_back(base.stream("a").uniform());
  for (int i = 0; i < 8; ++i) b0.push_back(base.stream("b").uniform());

  RngPool reseeded(0, {{"a", 999}});
  std::vector<double> a1, b1;
  for (int i = 0; i < 8; ++i) a1.push_back(reseeded.stream("a").uniform());
  for (int i = 0; i < 8; ++i) b1.push_back(reseeded.stream("b").uniform());
  CHECK(a1 != a0);  // overridden stream changed
  CHECK(b1 == b0);  // untouched stream identical

  // interleaving draws from one stream does not disturb another
  RngPool inter(0);
  std::vector<double> b2;
  for (int i = 0; i < 8; ++i) {
    inter.stream("a").uniform();
    inter.stream("a").normal();
    b2.push_back(inter.stream("b").uniform());
  }
  CHECK(b2 == b0);
}

TEST_CASE("rng stream state serializes exactly") {
  RngStream s(123);
  for (int i = 0; i < 7; ++i) s.normal();
  const std::string state = s.serialize();
  RngStream restored(0);
  restored.deserialize(state);
  for (int i = 0; i < 16; ++i) CHECK(restored.uniform() == s.uniform());
}
