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

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "unfilter/data/textures.hpp"
#include "unfilter/image/png_io.hpp"
#include "unfilter/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace unfilter;

namespace {

train::TrainConfig resolve_config(const std::string& config_path) {
  if (config_path.empty()) return train::TrainConfig{};
  return train::load_train_config(config_path);
}

std::vector<Image> load_source_dir(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".png") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  UF_CHECK(!paths.empty(), ValidationError, "no .png files in " + dir);
  std::vector<Image> out;
  for (const auto& p : paths) out.push_back(read_png(p));
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"unfilter: learn to remove parametric photo filters"};
  app.require_subcommand(1);

  std::string config_path, out_dir, sources_dir, corpus_root;
  uint64_t seed = 0;
  int64_t steps = -1;
  int image_size = -1;

  // gen-data
  auto* gen_cmd = app.add_subcommand("gen-data", "synthesize a paired corpus");
  int num_procedural = 32;
  int source_size = 64;
  double train_fraction = 0.8;
  gen_cmd->add_option("--sources", sources_dir,
                      "directory of source PNGs (default: procedural textures)");
  gen_cmd->add_option("--procedural", num_procedural,
                      "number of procedural source textures when --sources is absent");
  gen_cmd->add_option("--source-size", source_size, "procedural texture size");
  gen_cmd->add_option("--out", out_dir, "corpus root directory")->required();
  gen_cmd->add_option("--train-fraction", train_fraction, "train split fraction");
  gen_cmd->add_option("--seed", seed, "seed for split assignment and textures");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the filter-removal model");
  std::string resume_path, data_root;
  bool no_style_nce = false, no_id_reg = false, no_consistency = false;
  std::string device = "cpu";
  train_cmd->add_option("--data", data_root, "corpus root (from gen-data)")->required();
  train_cmd->add_option("--out", out_dir, "run output directory")->required();
  train_cmd->add_option("--config", config_path, "JSON config file");
  train_cmd->add_option("--seed", seed, "master seed (overrides config)");
  train_cmd->add_option("--steps", steps, "total steps (overrides config)");
  train_cmd->add_option("--image-size", image_size, "training resolution (overrides config)");
  train_cmd->add_flag("--no-style-nce", no_style_nce, "disable the style NCE term");
  train_cmd->add_flag("--no-id-reg", no_id_reg, "disable identity regularization");
  train_cmd->add_flag("--no-consistency", no_consistency, "disable the consistency loss");
  train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");
  train_cmd->add_option("--device", device, "compute device (only cpu supported)");

  // remove
  auto* remove_cmd = app.add_subcommand("remove", "run the model on one image");
  std::string ckpt_path, in_image, out_image = "recovered.png";
  remove_cmd->add_option("checkpoint", ckpt_path, "trained checkpoint")->required();
  remove_cmd->add_option("image", in_image, "input PNG")->required();
  remove_cmd->add_option("-o,--out", out_image, "output PNG path");
  remove_cmd->add_option("--seed", seed, "unused; accepted for interface uniformity");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  std::string eval_split = "test";
  eval_cmd->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  eval_cmd->add_option("--data", data_root, "corpus root")->required();
  eval_cmd->add_option("--out", out_dir, "report output directory")->required();
  eval_cmd->add_option("--split", eval_split, "train or test");
  eval_cmd->add_option("--seed", seed, "unused; accepted for interface uniformity");

  // residual
  auto* res_cmd = app.add_subcommand("residual", "scaled absolute error image");
  std::string image_a, image_b, res_out = "residual.png";
  res_cmd->add_option("a", image_a, "first PNG")->required();
  res_cmd->add_option("b", image_b, "second PNG")->required();
  res_cmd->add_option("-o,--out", res_out, "output PNG path");
  res_cmd->add_option("--seed", seed, "unused; accepted for interface uniformity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; any parse failure prints usage and exits 2
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*gen_cmd) {
    std::vector<Image> sources = sources_dir.empty()
                                     ? data::make_source_textures(num_procedural,
                                                                  source_size, seed)
                                     : load_source_dir(sources_dir);
    auto bank = filters::builtin_filter_bank(seed);
    data::CorpusManifest manifest =
        data::generate_corpus(sources, bank, out_dir, train_fraction, seed);
    size_t files = manifest.sources.size() * (1 + manifest.bank.size());
    std::cout << "wrote " << files << " images under " << out_dir << "\n";
    return 0;
  }

  if (*train_cmd) {
    UF_CHECK(device == "cpu", ValidationError, "only --device cpu is supported");
    train::Trainer trainer = [&]() {
      if (!resume_path.empty()) return train::Trainer::from_checkpoint(resume_path);
      train::TrainConfig cfg = resolve_config(config_path);
      if (train_cmd->count("--seed")) cfg.seed = seed;
      if (steps >= 0) cfg.total_steps = steps;
      if (image_size > 0) cfg.image_size = image_size;
      if (no_style_nce) cfg.enable_style_nce = false;
      if (no_id_reg) cfg.enable_identity_reg = false;
      if (no_consistency) cfg.enable_consistency = false;
      cfg.validate();
      return train::Trainer(cfg);
    }();
    data::CorpusManifest manifest = data::load_manifest(data_root);
    const std::string final_ckpt = trainer.train(manifest, data_root, out_dir);
    std::cout << "final checkpoint: " << final_ckpt << "\n";
    return 0;
  }

  if (*remove_cmd) {
    train::Trainer trainer = train::Trainer::from_checkpoint(ckpt_path);
    Image input = read_png(in_image);
    const int factor = trainer.config().model.downsample_factor();
    // run at the nearest working resolution, then restore the original size
    auto round_up = [factor](int v) { return std::max(factor, (v + factor - 1) / factor * factor); };
    Image working = resize_bilinear(input, round_up(input.height), round_up(input.width));
    Tensor out = trainer.remove_filter(images_to_tensor({working}));
    Image recovered = resize_bilinear(tensor_to_image(out), input.height, input.width);
    clamp01(recovered);
    write_png(out_image, recovered);
    std::cout << "wrote " << out_image << "\n";
    return 0;
  }

  if (*eval_cmd) {
    train::Trainer trainer = train::Trainer::from_checkpoint(ckpt_path);
    data::CorpusManifest manifest = data::load_manifest(data_root);
    train::EvalReport report =
        trainer.evaluate(manifest, data_root, eval_split, out_dir);
    std::cout << "pairs: " << report.rows.size() << "  psnr: " << report.aggregate["psnr"]
              << "  ssim: " << report.aggregate["ssim"]
              << "  delta_e: " << report.aggregate["delta_e"] << "\n";
    std::cout << "report written to " << out_dir << "\n";
    return 0;
  }

  if (*res_cmd) {
    Image a = read_png(image_a);
    Image b = read_png(image_b);
    write_png(res_out, metrics::residual_image(a, b));
    std::cout << "wrote " << res_out << "\n";
    return 0;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
