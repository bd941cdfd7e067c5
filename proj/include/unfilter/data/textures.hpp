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

#include <vector>

#include "unfilter/image/image.hpp"

namespace unfilter::data {

/// Deterministic smooth color textures (gradients, plaids, blobs) used as
/// stand-in source photographs. High per-channel variance by construction.
std::vector<Image> make_source_textures(int count, int size, uint64_t seed);

}  // namespace unfilter::data
