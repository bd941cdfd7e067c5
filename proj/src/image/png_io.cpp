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

#include "unfilter/image/png_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace unfilter {

namespace {

constexpr uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

uint32_t get_u32(const uint8_t* p) {
  return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
         (static_cast<uint32_t>(p[2]) << 8) | p[3];
}

void write_chunk(std::vector<uint8_t>& out, const char type[4],
                 const std::vector<uint8_t>& payload) {
  put_u32(out, static_cast<uint32_t>(payload.size()));
  const size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  uint32_t crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, crc);
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

void write_png(const std::string& path, const Image& img) {
  UF_CHECK(img.height > 0 && img.width > 0, ValidationError, "write_png: empty image");
  const int h = img.height, w = img.width;
  // filter type 0 (None) per scanline
  std::vector<uint8_t> raw(static_cast<size_t>(h) * (1 + static_cast<size_t>(w) * 3));
  size_t o = 0;
  for (int y = 0; y < h; ++y) {
    raw[o++] = 0;
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(img.at(y, x, c), 0.0, 1.0);
        raw[o++] = static_cast<uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  uLongf comp_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> comp(comp_size);
  const int rc = compress2(comp.data(), &comp_size, raw.data(),
                           static_cast<uLong>(raw.size()), 6);
  UF_CHECK(rc == Z_OK, IoError, "write_png: deflate failed");
  comp.resize(comp_size);

  std::vector<uint8_t> out(kSignature, kSignature + 8);
  std::vector<uint8_t> ihdr;
  put_u32(ihdr, static_cast<uint32_t>(w));
  put_u32(ihdr, static_cast<uint32_t>(h));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type RGB
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // interlace
  write_chunk(out, "IHDR", ihdr);
  write_chunk(out, "IDAT", comp);
  write_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary);
  UF_CHECK(f.good(), IoError, "write_png: cannot open " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  UF_CHECK(f.good(), IoError, "write_png: write failed for " + path);
}

Image read_png(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  UF_CHECK(f.good(), IoError, "read_png: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  UF_CHECK(bytes.size() > 8 && std::memcmp(bytes.data(), kSignature, 8) == 0,
           IoError, "read_png: not a PNG: " + path);

  int w = 0, h = 0, bit_depth = 0, color_type = 0;
  std::vector<uint8_t> idat;
  size_t pos = 8;
  bool saw_iend = false;
  while (pos + 12 <= bytes.size()) {
    const uint32_t len = get_u32(&bytes[pos]);
    UF_CHECK(pos + 12 + len <= bytes.size(), IoError, "read_png: truncated chunk");
    const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
    const uint8_t* payload = &bytes[pos + 8];
    if (std::memcmp(type, "IHDR", 4) == 0) {
      UF_CHECK(len == 13, IoError, "read_png: bad IHDR");
      w = static_cast<int>(get_u32(payload));
      h = static_cast<int>(get_u32(payload + 4));
      bit_depth = payload[8];
      color_type = payload[9];
      UF_CHECK(payload[12] == 0, IoError, "read_png: interlaced PNGs unsupported");
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_iend = true;
      break;
    }
    pos += 12 + len;
  }
  UF_CHECK(saw_iend && w > 0 && h > 0, IoError, "read_png: malformed file " + path);
  UF_CHECK(bit_depth == 8, IoError, "read_png: only 8-bit PNGs supported");
  int channels = 0;
  switch (color_type) {
    case 0: channels = 1; break;
    case 2: channels = 3; break;
    case 6: channels = 4; break;
    default:
      throw IoError("read_png: unsupported color type " + std::to_string(color_type));
  }

  const size_t stride = static_cast<size_t>(w) * channels;
  std::vector<uint8_t> raw(static_cast<size_t>(h) * (stride + 1));
  uLongf raw_size = static_cast<uLongf>(raw.size());
  const int rc = uncompress(raw.data(), &raw_size, idat.data(),
                            static_cast<uLong>(idat.size()));
  UF_CHECK(rc == Z_OK && raw_size == raw.size(), IoError,
           "read_png: inflate failed for " + path);

  // undo scanline filters in place
  std::vector<uint8_t> prev(stride, 0);
  Image out(h, w);
  for (int y = 0; y < h; ++y) {
    const uint8_t filter = raw[static_cast<size_t>(y) * (stride + 1)];
    uint8_t* line = &raw[static_cast<size_t>(y) * (stride + 1) + 1];
    for (size_t i = 0; i < stride; ++i) {
      const int a = i >= static_cast<size_t>(channels) ? line[i - channels] : 0;
      const int b = prev[i];
      const int c = i >= static_cast<size_t>(channels) ? prev[i - channels] : 0;
      int v = line[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw IoError("read_png: bad filter byte");
      }
      line[i] = static_cast<uint8_t>(v & 0xff);
    }
    std::memcpy(prev.data(), line, stride);
    for (int x = 0; x < w; ++x) {
      double r, g, bl;
      if (channels == 1) {
        r = g = bl = line[x] / 255.0;
      } else {
        r = line[static_cast<size_t>(x) * channels] / 255.0;
        g = line[static_cast<size_t>(x) * channels + 1] / 255.0;
        bl = line[static_cast<size_t>(x) * channels + 2] / 255.0;
      }
      out.at(y, x, 0) = r;
      out.at(y, x, 1) = g;
      out.at(y, x, 2) = bl;
    }
  }
  return out;
}

}  // namespace unfilter
