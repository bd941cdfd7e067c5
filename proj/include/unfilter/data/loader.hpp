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

#include "unfilter/core/rng.hpp"
#include "unfilter/data/corpus.hpp"

namespace unfilter::data {

struct ImagePair {
  Image original;
  Image filtered;
  int filter_id = 0;
  int source_id = 0;
};

struct PairRef {
  int source_index = 0;  // index into manifest.sources
  int filter_id = 0;
};

struct Batch {
  Tensor original;  // [B,3,S,S]
  Tensor filtered;  // [B,3,S,S]
  std::vector<int> filter_ids;
  std::vector<int> source_ids;
  int size() const { return static_cast<int>(filter_ids.size()); }
};

/// Resizes both images of the pair to size x size; when training, applies one
/// shared horizontal-flip decision (drawn from flip_seed) to both.
ImagePair preprocess(const ImagePair& pair, bool training, int size,
                     uint64_t flip_seed);
ImagePair preprocess_with_flip(const ImagePair& pair, int size, bool flip);

/// Serves one split of a corpus: full deterministic epochs, checksum-verified
/// reads. Single consumer.
class SplitLoader {
 public:
  SplitLoader(const CorpusManifest& manifest, std::string root, std::string split);

  size_t pair_count() const { return refs_.size(); }
  const std::vector<PairRef>& pairs() const { return refs_; }
  ImagePair load_pair(const PairRef& ref) const;

  /// All pairs of the split exactly once, order shuffled by `rng`.
  std::vector<PairRef> epoch_order(RngStream& rng) const;

 private:
  const CorpusManifest* manifest_;
  std::string root_;
  std::string split_;
  std::vector<PairRef> refs_;
};

/// Batch stream over a split: reshuffles every epoch with the given seed,
/// partial final batch included. One pass over the split yields
/// ceil(pairs / batch_size) batches.
class BatchStream {
 public:
  BatchStream(const CorpusManifest& manifest, std::string root, std::string split,
              int batch_size, uint64_t seed, bool training, int image_size);

  Batch next();            // cycles epochs forever
  bool next_epoch_boundary() const { return cursor_ == 0; }
  size_t batches_per_epoch() const;
  const SplitLoader& loader() const { return loader_; }

  /// Flip decisions come from this stream when training.
  RngStream& flip_stream() { return flip_rng_; }

 private:
  SplitLoader loader_;
  int batch_size_;
  bool training_;
  int image_size_;
  RngStream order_rng_;
  RngStream flip_rng_;
  std::vector<PairRef> order_;
  size_t cursor_ = 0;
};

}  // namespace unfilter::data
