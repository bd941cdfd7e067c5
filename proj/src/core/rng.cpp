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

#include "unfilter/core/rng.hpp"

#include <cmath>
#include <sstream>

#include "unfilter/core/common.hpp"

namespace unfilter {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t fnv1a64(const void* data, size_t len) {
  const auto* p = static_cast<const uint8_t*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

double RngStream::uniform() {
  // 53 random bits -> [0,1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

int64_t RngStream::randint(int64_t n) {
  UF_CHECK(n > 0, ValidationError, "randint: n must be positive");
  // rejection sampling, no modulo bias
  uint64_t un = static_cast<uint64_t>(n);
  uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return static_cast<int64_t>(v % un);
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

std::vector<int> RngStream::sample_without_replacement(int n, int k) {
  UF_CHECK(k >= 0 && k <= n, ValidationError, "sample: k out of range");
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(randint(n - i));
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> out(pool.begin(), pool.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

std::string RngStream::serialize() const {
  std::ostringstream os;
  os << engine_ << " " << (has_spare_ ? 1 : 0) << " ";
  os.precision(17);
  os << spare_;
  return os.str();
}

void RngStream::deserialize(const std::string& state) {
  std::istringstream is(state);
  int spare_flag = 0;
  is >> engine_ >> spare_flag >> spare_;
  UF_CHECK(!is.fail(), ValidationError, "bad rng state string");
  has_spare_ = spare_flag != 0;
}

RngPool::RngPool(uint64_t master_seed, std::map<std::string, uint64_t> overrides)
    : master_seed_(master_seed), overrides_(std::move(overrides)) {}

uint64_t RngPool::derive_seed(uint64_t master, const std::string& name) {
  return splitmix64(master ^ fnv1a64(name.data(), name.size()));
}

RngStream& RngPool::stream(const std::string& name) {
  auto it = streams_.find(name);
  if (it != streams_.end()) return it->second;
  uint64_t seed;
  auto ov = overrides_.find(name);
  if (ov != overrides_.end()) {
    seed = derive_seed(ov->second, name);
  } else {
    seed = derive_seed(master_seed_, name);
  }
  return streams_.emplace(name, RngStream(seed)).first->second;
}

std::map<std::string, std::string> RngPool::serialize_all() const {
  std::map<std::string, std::string> out;
  for (const auto& [name, s] : streams_) out[name] = s.serialize();
  return out;
}

void RngPool::deserialize_all(const std::map<std::string, std::string>& states) {
  for (const auto& [name, state] : states) {
    stream(name).deserialize(state);
  }
}

}  // namespace unfilter
