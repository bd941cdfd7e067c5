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

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "unfilter/data/corpus.hpp"
#include "unfilter/image/png_io.hpp"
#include "unfilter/train/config.hpp"

using namespace unfilter;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "unfilter_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(UNFILTER_BIN) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

fs::path write_micro_config(const fs::path& dir) {
  train::TrainConfig cfg;
  cfg.model.num_levels = 2;
  cfg.model.encoder_channels = {4, 8};
  cfg.model.style_channels = {4, 4};
  cfg.model.decoder_blocks = 3;
  cfg.model.embed_dim = 6;
  cfg.model.disc_base_channels = 4;
  cfg.image_size = 32;
  cfg.batch_size = 2;
  cfg.num_patches = 8;
  cfg.total_steps = 2;
  cfg.checkpoint_every = 0;
  cfg.seed = 5;
  const auto path = dir / "micro.json";
  train::save_train_config(cfg, path.string());
  return path;
}

}  // namespace

TEST_CASE("--help exits 0 on every subcommand") {
  CHECK(run_cli("--help") == 0);
  for (const char* sub : {"gen-data", "train", "remove", "eval", "residual"}) {
    CHECK(run_cli(std::string(sub) + " --help") == 0);
  }
}

TEST_CASE("unknown flags exit 2") {
  CHECK(run_cli("--definitely-not-a-flag") == 2);
  CHECK(run_cli("gen-data --nope x") == 2);
  CHECK(run_cli("") == 2);  // missing subcommand
}

TEST_CASE("runtime failures exit 1") {
  CHECK(run_cli("residual /nonexistent/a.png /nonexistent/b.png") == 1);
  CHECK(run_cli("eval --checkpoint /nope.ckpt --data /nope --out /tmp/x") == 1);
}

TEST_CASE("residual of an image with itself is an all-zero png") {
  auto dir = fresh_dir("residual");
  Image img(16, 16, 0.0);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) img.at(y, x, 0) = (x + y) % 5 / 4.0;
  }
  const auto a = dir / "a.png";
  write_png(a.string(), img);
  const auto out = dir / "r.png";
  CHECK(run_cli("residual " + a.string() + " " + a.string() + " -o " + out.string()) == 0);
  Image r = read_png(out.string());
  for (double v : r.data) CHECK(v == 0.0);
}

TEST_CASE("gen-data twice with one seed gives byte-identical manifests") {
  auto d1 = fresh_dir("gen1");
  auto d2 = fresh_dir("gen2");
  CHECK(run_cli("gen-data --procedural 3 --source-size 32 --out " + d1.string() +
                " --seed 9") == 0);
  CHECK(run_cli("gen-data --procedural 3 --source-size 32 --out " + d2.string() +
                " --seed 9") == 0);
  CHECK(slurp(d1 / "manifest") == slurp(d2 / "manifest"));
  CHECK(!slurp(d1 / "manifest").empty());
}

TEST_CASE("train -> remove -> eval round trip") {
  auto dir = fresh_dir("pipeline");
  const auto corpus = dir / "corpus";
  const auto run_dir = dir / "run";
  REQUIRE(run_cli("gen-data --procedural 4 --source-size 32 --out " + corpus.string() +
                  " --seed 5") == 0);
  const auto cfg_path = write_micro_config(dir);
  REQUIRE(run_cli("train --data " + corpus.string() + " --out " + run_dir.string() +
                  " --config " + cfg_path.string()) == 0);
  const auto ckpt = run_dir / "checkpoints" / "final.ckpt";
  REQUIRE(fs::exists(ckpt));
  CHECK(fs::exists(run_dir / "config.json"));
  CHECK(fs::exists(run_dir / "loss_log.jsonl"));

  // remove: output has the input's dimensions (even awkward ones)
  Image odd(37, 23, 0.0);
  for (size_t i = 0; i < odd.data.size(); ++i) odd.data[i] = (i % 7) / 7.0;
  const auto in_png = dir / "in.png";
  write_png(in_png.string(), odd);
  const auto out_png = dir / "out.png";
  CHECK(run_cli("remove " + ckpt.string() + " " + in_png.string() + " -o " +
                out_png.string()) == 0);
  Image recovered = read_png(out_png.string());
  CHECK(recovered.height == 37);
  CHECK(recovered.width == 23);

  // eval writes a report with one row per test pair
  const auto eval_dir = dir / "eval";
  CHECK(run_cli("eval --checkpoint " + ckpt.string() + " --data " + corpus.string() +
                " --out " + eval_dir.string() + " --split test") == 0);
  std::ifstream csv(eval_dir / "report.csv");
  REQUIRE(csv.good());
  int lines = 0;
  std::string line;
  while (std::getline(csv, line)) lines += !line.empty();
  int test_sources = 0;
  data::CorpusManifest manifest = data::load_manifest(corpus.string());
  for (const auto& s : manifest.sources) test_sources += s.split == "test";
  CHECK(lines == 1 + test_sources * 16);  // header + rows

  // ablation flags are accepted on the command line
  const auto run2 = dir / "run2";
  CHECK(run_cli("train --data " + corpus.string() + " --out " + run2.string() +
                " --config " + cfg_path.string() +
                " --steps 1 --no-style-nce --no-id-reg --no-consistency") == 0);
  std::ifstream log(run2 / "loss_log.jsonl");
  std::string log_line;
  std::getline(log, log_line);
  auto parsed = nlohmann::json::parse(log_line);
  CHECK(parsed["style_nce"].get<double>() == 0.0);
  CHECK(parsed["identity"].get<double>() == 0.0);
  CHECK(parsed["consistency"].get<double>() == 0.0);
}

TEST_CASE("non-cpu device is rejected") {
  CHECK(run_cli("train --data /tmp --out /tmp/x --device cuda") == 1);
}
