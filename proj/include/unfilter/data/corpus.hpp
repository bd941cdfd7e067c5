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

#include <string>
#include <vector>

#include "unfilter/filters/filter_bank.hpp"
#include "unfilter/image/image.hpp"

namespace unfilter::data {

struct FileEntry {
  std::string path;      // relative to corpus root
  std::string checksum;  // fnv1a64, hex
};

struct SourceEntry {
  int id = 0;
  std::string split;  // "train" | "test"
  FileEntry original;
  std::vector<FileEntry> filtered;  // one per bank filter, bank order
};

/// Immutable description of a generated corpus. The filter bank is embedded
/// in full, so the corpus is reproducible from the manifest alone.
struct CorpusManifest {
  int version = 1;
  uint64_t seed = 0;
  double train_fraction = 0.8;
  int source_size = 0;
  std::vector<filters::FilterSpec> bank;
  std::vector<SourceEntry> sources;
};

/// Writes, per source image, the original plus one file per bank filter under
/// `<root>/<split>/<id>/`, plus the manifest at `<root>/manifest`.
/// Deterministic: identical inputs and seed give byte-identical trees.
CorpusManifest generate_corpus(const std::vector<Image>& source_images,
                               const std::vector<filters::FilterSpec>& bank,
                               const std::string& out_root, double train_fraction,
                               uint64_t seed);

void save_manifest(const CorpusManifest& manifest, const std::string& root);
CorpusManifest load_manifest(const std::string& root);

/// Reads one corpus file, verifying its checksum first.
Image load_checked(const std::string& root, const FileEntry& entry);

std::string checksum_file(const std::string& path);

}  // namespace unfilter::data
