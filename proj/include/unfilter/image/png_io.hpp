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

#include "unfilter/image/image.hpp"

namespace unfilter {

/// Reads an 8-bit non-interlaced PNG (grayscale, RGB or RGBA; alpha is
/// dropped). Values scaled to [0,1].
Image read_png(const std::string& path);

/// Writes an 8-bit RGB PNG. Values are clamped and rounded. Output bytes are
/// a pure function of the pixel data, so identical images give identical
/// files.
void write_png(const std::string& path, const Image& img);

}  // namespace unfilter
