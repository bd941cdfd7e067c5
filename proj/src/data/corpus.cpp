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

#include "unfilter/data/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "unfilter/core/rng.hpp"
#include "unfilter/image/png_io.hpp"

namespace fs = std::filesystem;

namespace unfilter::data {

namespace {

std::string hex64(uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

Image quantize(const Image& img) {
  Image out = img;
  for (double& v : out.data) {
    v = std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  }
  return out;
}

}  // namespace

std::string checksum_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  UF_CHECK(f.good(), IoError, "checksum: cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(f)),
                          std::istreambuf_iterator<char>());
  return hex64(fnv1a64(bytes.data(), bytes.size()));
}

CorpusManifest generate_corpus(const std::vector<Image>& source_images,
                               const std::vector<filters::FilterSpec>& bank,
                               const std::string& out_root, double train_fraction,
                               uint64_t seed) {
  UF_CHECK(!source_images.empty(), ValidationError, "generate_corpus: no sources");
  UF_CHECK(!bank.empty(), ValidationError, "generate_corpus: empty filter bank");
  UF_CHECK(train_fraction > 0.0 && train_fraction < 1.0, ValidationError,
           "generate_corpus: train_fraction must be in (0,1)");
  for (const auto& spec : bank) filters::validate_spec(spec);

  const int n = static_cast<int>(source_images.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  RngStream split_rng(RngPool::derive_seed(seed, "split"));
  split_rng.shuffle(order);
  int n_train = static_cast<int>(std::floor(train_fraction * n));
  n_train = std::clamp(n_train, 1, n - 1);
  std::vector<std::string> split_of(n);
  for (int i = 0; i < n; ++i) split_of[order[i]] = i < n_train ? "train" : "test";

  std::error_code ec;
  fs::create_directories(out_root, ec);
  UF_CHECK(!ec, IoError, "generate_corpus: cannot create " + out_root);

  CorpusManifest manifest;
  manifest.seed = seed;
  manifest.train_fraction = train_fraction;
  manifest.source_size = source_images[0].height;
  manifest.bank = bank;

  for (int i = 0; i < n; ++i) {
    SourceEntry entry;
    entry.id = i;
    entry.split = split_of[i];
    const fs::path dir = fs::path(out_root) / entry.split / std::to_string(i);
    fs::create_directories(dir, ec);
    UF_CHECK(!ec, IoError, "generate_corpus: cannot create " + dir.string());

    const Image original = quantize(source_images[i]);
    const fs::path orig_path = dir / "original.png";
    write_png(orig_path.string(), original);
    entry.original = {fs::path(entry.split) / std::to_string(i) / "original.png",
                      checksum_file(orig_path.string())};
    for (const auto& spec : bank) {
      const Image filtered = filters::apply_filter(original, spec);
      const fs::path fpath = dir / (spec.name + ".png");
      write_png(fpath.string(), filtered);
      entry.filtered.push_back(
          {fs::path(entry.split) / std::to_string(i) / (spec.name + ".png"),
           checksum_file(fpath.string())});
    }
    manifest.sources.push_back(std::move(entry));
  }

  save_manifest(manifest, out_root);
  return manifest;
}

void save_manifest(const CorpusManifest& manifest, const std::string& root) {
  nlohmann::ordered_json j;
  j["version"] = manifest.version;
  j["seed"] = manifest.seed;
  j["train_fraction"] = manifest.train_fraction;
  j["source_size"] = manifest.source_size;
  auto bank = nlohmann::ordered_json::array();
  for (const auto& spec : manifest.bank) {
    nlohmann::ordered_json sj;
    filters::to_json(sj, spec);
    bank.push_back(sj);
  }
  j["bank"] = bank;
  auto sources = nlohmann::ordered_json::array();
  for (const auto& s : manifest.sources) {
    nlohmann::ordered_json sj;
    sj["id"] = s.id;
    sj["split"] = s.split;
    sj["original"] = {{"path", s.original.path}, {"checksum", s.original.checksum}};
    auto filtered = nlohmann::ordered_json::array();
    for (const auto& fe : s.filtered) {
      filtered.push_back({{"path", fe.path}, {"checksum", fe.checksum}});
    }
    sj["filtered"] = filtered;
    sources.push_back(sj);
  }
  j["sources"] = sources;

  std::ofstream f(fs::path(root) / "manifest");
  UF_CHECK(f.good(), IoError, "save_manifest: cannot write under " + root);
  f << j.dump(2) << "\n";
  UF_CHECK(f.good(), IoError, "save_manifest: write failed");
}

CorpusManifest load_manifest(const std::string& root) {
  std::ifstream f(fs::path(root) / "manifest");
  UF_CHECK(f.good(), IoError, "load_manifest: no manifest under " + root);
  nlohmann::json j;
  f >> j;
  CorpusManifest m;
  m.version = j.at("version").get<int>();
  m.seed = j.at("seed").get<uint64_t>();
  m.train_fraction = j.at("train_fraction").get<double>();
  m.source_size = j.at("source_size").get<int>();
  for (const auto& sj : j.at("bank")) m.bank.push_back(filters::filter_spec_from_json(sj));
  for (const auto& sj : j.at("sources")) {
    SourceEntry s;
    s.id = sj.at("id").get<int>();
    s.split = sj.at("split").get<std::string>();
    s.original = {sj.at("original").at("path").get<std::string>(),
                  sj.at("original").at("checksum").get<std::string>()};
    for (const auto& fe : sj.at("filtered")) {
      s.filtered.push_back({fe.at("path").get<std::string>(),
                            fe.at("checksum").get<std::string>()});
    }
    UF_CHECK(s.filtered.size() == m.bank.size(), CorpusError,
             "load_manifest: source " + std::to_string(s.id) +
                 " filter count does not match bank");
    m.sources.push_back(std::move(s));
  }
  return m;
}

Image load_checked(const std::string& root, const FileEntry& entry) {
  const std::string path = (fs::path(root) / entry.path).string();
  UF_CHECK(fs::exists(path), CorpusError, "corpus file missing: " + entry.path);
  const std::string sum = checksum_file(path);
  UF_CHECK(sum == entry.checksum, CorpusError,
           "corpus file corrupt (checksum mismatch): " + entry.path);
  return read_png(path);
}

}  // namespace unfilter::data
