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

#include "unfilter/data/loader.hpp"

namespace unfilter::data {

ImagePair preprocess_with_flip(const ImagePair& pair, int size, bool flip) {
  UF_CHECK(size >= 32, ValidationError, "preprocess: size must be >= 32");
  ImagePair out;
  out.filter_id = pair.filter_id;
  out.source_id = pair.source_id;
  out.original = resize_bilinear(pair.original, size, size);
  out.filtered = resize_bilinear(pair.filtered, size, size);
  if (flip) {
    out.original = flip_horizontal(out.original);
    out.filtered = flip_horizontal(out.filtered);
  }
  clamp01(out.original);
  clamp01(out.filtered);
  return out;
}

ImagePair preprocess(const ImagePair& pair, bool training, int size,
                     uint64_t flip_seed) {
  bool flip = false;
  if (training) {
    RngStream rng(flip_seed);
    flip = rng.bernoulli(0.5);
  }
  return preprocess_with_flip(pair, size, flip);
}

SplitLoader::SplitLoader(const CorpusManifest& manifest, std::string root,
                         std::string split)
    : manifest_(&manifest), root_(std::move(root)), split_(std::move(split)) {
  UF_CHECK(split_ == "train" || split_ == "test", ValidationError,
           "SplitLoader: split must be train or test");
  for (size_t i = 0; i < manifest.sources.size(); ++i) {
    if (manifest.sources[i].split != split_) continue;
    for (size_t f = 0; f < manifest.sources[i].filtered.size(); ++f) {
      refs_.push_back({static_cast<int>(i), static_cast<int>(f)});
    }
  }
}

ImagePair SplitLoader::load_pair(const PairRef& ref) const {
  const SourceEntry& src = manifest_->sources.at(ref.source_index);
  ImagePair pair;
  pair.source_id = src.id;
  pair.filter_id = ref.filter_id;
  pair.original = load_checked(root_, src.original);
  pair.filtered = load_checked(root_, src.filtered.at(ref.filter_id));
  return pair;
}

std::vector<PairRef> SplitLoader::epoch_order(RngStream& rng) const {
  std::vector<PairRef> order = refs_;
  rng.shuffle(order);
  return order;
}

BatchStream::BatchStream(const CorpusManifest& manifest, std::string root,
                         std::string split, int batch_size, uint64_t seed,
                         bool training, int image_size)
    : loader_(manifest, std::move(root), split),
      batch_size_(batch_size),
      training_(training),
      image_size_(image_size),
      order_rng_(RngPool::derive_seed(seed, "data")),
      flip_rng_(RngPool::derive_seed(seed, "flip")) {
  UF_CHECK(batch_size_ > 0, ValidationError, "BatchStream: batch_size must be > 0");
  UF_CHECK(loader_.pair_count() > 0, ValidationError,
           "BatchStream: split '" + split + "' is empty");
  order_ = loader_.epoch_order(order_rng_);
}

size_t BatchStream::batches_per_epoch() const {
  return (loader_.pair_count() + batch_size_ - 1) / batch_size_;
}

Batch BatchStream::next() {
  std::vector<Image> originals, filtereds;
  Batch batch;
  const int take = static_cast<int>(
      std::min<size_t>(batch_size_, order_.size() - cursor_));
  for (int i = 0; i < take; ++i) {
    ImagePair pair = loader_.load_pair(order_[cursor_ + i]);
    const bool flip = training_ && flip_rng_.bernoulli(0.5);
    pair = preprocess_with_flip(pair, image_size_, flip);
    originals.push_back(std::move(pair.original));
    filtereds.push_back(std::move(pair.filtered));
    batch.filter_ids.push_back(pair.filter_id);
    batch.source_ids.push_back(pair.source_id);
  }
  cursor_ += take;
  if (cursor_ >= order_.size()) {
    cursor_ = 0;
    order_ = loader_.epoch_order(order_rng_);
  }
  batch.original = images_to_tensor(originals);
  batch.filtered = images_to_tensor(filtereds);
  return batch;
}

}  // namespace unfilter::data
