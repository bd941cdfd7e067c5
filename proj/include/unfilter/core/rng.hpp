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

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace unfilter {

/// mt19937_64 with hand-rolled distributions so draws are identical on every
/// platform (std:: distributions are implementation-defined).
class RngStream {
 public:
  explicit RngStream(uint64_t seed = 0) : engine_(seed) {}

  double uniform();                    // [0,1)
  double uniform(double lo, double hi);
  double normal();                     // Box-Muller, one value per call
  int64_t randint(int64_t n);          // [0,n)
  bool bernoulli(double p);

  /// k distinct values from [0,n), partial Fisher-Yates, sorted ascending.
  std::vector<int> sample_without_replacement(int n, int k);
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
      std::swap(v[i], v[randint(i + 1)]);
    }
  }

  std::string serialize() const;
  void deserialize(const std::string& state);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Named independent streams derived from one master seed. Per-stream seed
/// overrides allow reseeding one stream without disturbing the others.
class RngPool {
 public:
  explicit RngPool(uint64_t master_seed,
                   std::map<std::string, uint64_t> overrides = {});

  RngStream& stream(const std::string& name);
  uint64_t master_seed() const { return master_seed_; }

  std::map<std::string, std::string> serialize_all() const;
  void deserialize_all(const std::map<std::string, std::string>& states);

  static uint64_t derive_seed(uint64_t master, const std::string& name);

 private:
  uint64_t master_seed_;
  std::map<std::string, uint64_t> overrides_;
  std::map<std::string, RngStream> streams_;
};

uint64_t fnv1a64(const void* data, size_t len);
uint64_t splitmix64(uint64_t x);

}  // namespace unfilter
