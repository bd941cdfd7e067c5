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

#include "unfilter/core/kernels.hpp"

#include <malloc.h>

#include <algorithm>
#include <cstring>
#include <vector>

#include "unfilter/core/common.hpp"

namespace unfilter::kernels {

namespace {

// Large tensor buffers are allocated and freed every op; keep them on the
// heap instead of round-tripping pages through mmap/munmap.
struct MallocTuning {
  MallocTuning() {
#ifdef M_MMAP_THRESHOLD
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  }
};
const MallocTuning g_malloc_tuning;

}  // namespace

int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

namespace {

// Row-major transpose into scratch so the main kernel only handles the
// non-transposed layout.
void transpose_into(const double* src, int rows, int cols, double* dst) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) dst[static_cast<int64_t>(c) * rows + r] = src[static_cast<int64_t>(r) * cols + c];
  }
}

constexpr int kRowBlock = 4;
constexpr int kColBlock = 1024;

// C[M,N] = A[M,K]*B[K,N]. Tiles of kRowBlock x kColBlock; each tile is owned
// by one thread, k-loop runs serially inside it.
void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c) {
  const int mb = (m + kRowBlock - 1) / kRowBlock;
  const int nb = (n + kColBlock - 1) / kColBlock;
  const int64_t tiles = static_cast<int64_t>(mb) * nb;
#pragma omp parallel for schedule(static)
  for (int64_t tile = 0; tile < tiles; ++tile) {
    const int i0 = static_cast<int>(tile / nb) * kRowBlock;
    const int j0 = static_cast<int>(tile % nb) * kColBlock;
    const int ilim = std::min(i0 + kRowBlock, m);
    const int jn = std::min(kColBlock, n - j0);
    for (int i = i0; i < ilim; ++i) {
      std::memset(c + static_cast<int64_t>(i) * n + j0, 0, sizeof(double) * jn);
    }
    for (int kk = 0; kk < k; ++kk) {
      const double* brow = b + static_cast<int64_t>(kk) * n + j0;
      for (int i = i0; i < ilim; ++i) {
        const double av = a[static_cast<int64_t>(i) * k + kk];
        double* crow = c + static_cast<int64_t>(i) * n + j0;
#pragma omp simd
        for (int j = 0; j < jn; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

void im2col(const double* x, int c, int h, int w, int kh, int kw, int stride,
            int pad, int oh, int ow, double* col) {
  const int ckk = c * kh * kw;
  const int64_t ohw = static_cast<int64_t>(oh) * ow;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < ckk; ++r) {
    const int kwi = r % kw;
    const int khi = (r / kw) % kh;
    const int ci = r / (kw * kh);
    double* dst = col + r * ohw;
    const double* src = x + static_cast<int64_t>(ci) * h * w;
    for (int oy = 0; oy < oh; ++oy) {
      const int iy = oy * stride - pad + khi;
      if (iy < 0 || iy >= h) {
        std::memset(dst + static_cast<int64_t>(oy) * ow, 0, sizeof(double) * ow);
        continue;
      }
      for (int ox = 0; ox < ow; ++ox) {
        const int ix = ox * stride - pad + kwi;
        dst[static_cast<int64_t>(oy) * ow + ox] =
            (ix >= 0 && ix < w) ? src[static_cast<int64_t>(iy) * w + ix] : 0.0;
      }
    }
  }
}

// Scatter-add of col[CKK,OHW] back into x[C,H,W]. Parallel over channels:
// all writes for a channel happen on one thread in fixed order.
void col2im_add(const double* col, int c, int h, int w, int kh, int kw,
                int stride, int pad, int oh, int ow, double* x) {
  const int64_t ohw = static_cast<int64_t>(oh) * ow;
#pragma omp parallel for schedule(static)
  for (int ci = 0; ci < c; ++ci) {
    double* dst = x + static_cast<int64_t>(ci) * h * w;
    for (int khi = 0; khi < kh; ++khi) {
      for (int kwi = 0; kwi < kw; ++kwi) {
        const int r = (ci * kh + khi) * kw + kwi;
        const double* src = col + r * ohw;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + khi;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kwi;
            if (ix < 0 || ix >= w) continue;
            dst[static_cast<int64_t>(iy) * w + ix] += src[static_cast<int64_t>(oy) * ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace

void bmm(int blocks, int m, int n, int k, const double* a, const double* b,
         double* c) {
  const int64_t an = static_cast<int64_t>(m) * k;
  const int64_t bn = static_cast<int64_t>(k) * n;
  const int64_t cn = static_cast<int64_t>(m) * n;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < blocks; ++r) {
    const double* ar = a + r * an;
    const double* br = b + r * bn;
    double* cr = c + r * cn;
    std::memset(cr, 0, sizeof(double) * cn);
    for (int kk = 0; kk < k; ++kk) {
      const double* brow = br + static_cast<int64_t>(kk) * n;
      for (int i = 0; i < m; ++i) {
        const double av = ar[static_cast<int64_t>(i) * k + kk];
        double* crow = cr + static_cast<int64_t>(i) * n;
#pragma omp simd
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

namespace {

// direct 3x3 stride-1 pad-1 convolution. One output row is accumulated in a
// local buffer; each (channel, tap-row) contributes a single fused pass.
void conv3x3s1_forward(const double* x, const double* w, double* y, int b,
                       int c, int h, int w_in, int oc) {
  const int64_t plane = static_cast<int64_t>(h) * w_in;
#pragma omp parallel for schedule(static)
  for (int bo = 0; bo < b * oc; ++bo) {
    const int bi = bo / oc;
    const int o = bo % oc;
    double* yp = y + (static_cast<int64_t>(bi) * oc + o) * plane;
    std::vector<double> acc(w_in);
    for (int oy = 0; oy < h; ++oy) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int ci = 0; ci < c; ++ci) {
        const double* xp = x + (static_cast<int64_t>(bi) * c + ci) * plane;
        const double* wp = w + (static_cast<int64_t>(o) * c + ci) * 9;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy - 1 + ky;
          if (iy < 0 || iy >= h) continue;
          const double* xrow = xp + static_cast<int64_t>(iy) * w_in;
          const double w0 = wp[ky * 3], w1 = wp[ky * 3 + 1], w2 = wp[ky * 3 + 2];
          acc[0] += w1 * xrow[0] + w2 * xrow[1];
#pragma omp simd
          for (int ox = 1; ox < w_in - 1; ++ox) {
            acc[ox] += w0 * xrow[ox - 1] + w1 * xrow[ox] + w2 * xrow[ox + 1];
          }
          acc[w_in - 1] += w0 * xrow[w_in - 2] + w1 * xrow[w_in - 1];
        }
      }
      std::memcpy(yp + static_cast<int64_t>(oy) * w_in, acc.data(),
                  sizeof(double) * w_in);
    }
  }
}

// gradient w.r.t. input: same stencil with mirrored taps
void conv3x3s1_grad_input(const double* gy, const double* w, double* gx, int b,
                          int c, int h, int w_in, int oc) {
  const int64_t plane = static_cast<int64_t>(h) * w_in;
#pragma omp parallel for schedule(static)
  for (int bc = 0; bc < b * c; ++bc) {
    const int bi = bc / c;
    const int ci = bc % c;
    double* gxp = gx + (static_cast<int64_t>(bi) * c + ci) * plane;
    std::vector<double> acc(w_in);
    for (int iy = 0; iy < h; ++iy) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int o = 0; o < oc; ++o) {
        const double* gyp = gy + (static_cast<int64_t>(bi) * oc + o) * plane;
        const double* wp = w + (static_cast<int64_t>(o) * c + ci) * 9;
        for (int ky = 0; ky < 3; ++ky) {
          const int oy = iy + 1 - ky;
          if (oy < 0 || oy >= h) continue;
          const double* grow = gyp + static_cast<int64_t>(oy) * w_in;
          // gx[ix] += w[ky][0]*gy[ix+1] + w[ky][1]*gy[ix] + w[ky][2]*gy[ix-1]
          const double w0 = wp[ky * 3], w1 = wp[ky * 3 + 1], w2 = wp[ky * 3 + 2];
          acc[0] += w1 * grow[0] + w0 * grow[1];
#pragma omp simd
          for (int ix = 1; ix < w_in - 1; ++ix) {
            acc[ix] += w2 * grow[ix - 1] + w1 * grow[ix] + w0 * grow[ix + 1];
          }
          acc[w_in - 1] += w2 * grow[w_in - 2] + w1 * grow[w_in - 1];
        }
      }
      std::memcpy(gxp + static_cast<int64_t>(iy) * w_in, acc.data(),
                  sizeof(double) * w_in);
    }
  }
}

void conv3x3s1_grad_weight(const double* x, const double* gy, double* gw, int b,
                           int c, int h, int w_in, int oc) {
  const int64_t plane = static_cast<int64_t>(h) * w_in;
#pragma omp parallel for schedule(static)
  for (int oci = 0; oci < oc * c; ++oci) {
    const int o = oci / c;
    const int ci = oci % c;
    double* gwp = gw + static_cast<int64_t>(oci) * 9;
    double acc[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
    for (int bi = 0; bi < b; ++bi) {
      const double* xp = x + (static_cast<int64_t>(bi) * c + ci) * plane;
      const double* gyp = gy + (static_cast<int64_t>(bi) * oc + o) * plane;
      for (int oy = 0; oy < h; ++oy) {
        const double* gyrow = gyp + static_cast<int64_t>(oy) * w_in;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = oy - 1 + ky;
          if (iy < 0 || iy >= h) continue;
          const double* xrow = xp + static_cast<int64_t>(iy) * w_in;
          double s0 = 0, s1 = 0, s2 = 0;
#pragma omp simd reduction(+ : s0, s1, s2)
          for (int ox = 1; ox < w_in - 1; ++ox) {
            const double g = gyrow[ox];
            s0 += g * xrow[ox - 1];
            s1 += g * xrow[ox];
            s2 += g * xrow[ox + 1];
          }
          s1 += gyrow[0] * xrow[0] + gyrow[w_in - 1] * xrow[w_in - 1];
          s2 += gyrow[0] * xrow[1];
          s0 += gyrow[w_in - 1] * xrow[w_in - 2];
          acc[ky * 3] += s0;
          acc[ky * 3 + 1] += s1;
          acc[ky * 3 + 2] += s2;
        }
      }
    }
    for (int i = 0; i < 9; ++i) gwp[i] = acc[i];
  }
}

// receptive-field rows: rows[OHW, CKK]; the transpose of im2col. For small
// output grids this keeps every gemm contraction contiguous.
void im2row(const double* x, int c, int h, int w, int kh, int kw, int stride,
            int pad, int oh, int ow, double* rows) {
  const int ckk = c * kh * kw;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      double* dst = rows + (static_cast<int64_t>(oy) * ow + ox) * ckk;
      int r = 0;
      for (int ci = 0; ci < c; ++ci) {
        const double* src = x + static_cast<int64_t>(ci) * h * w;
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = oy * stride - pad + ky;
          for (int kx = 0; kx < kw; ++kx, ++r) {
            const int ix = ox * stride - pad + kx;
            dst[r] = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                         ? src[static_cast<int64_t>(iy) * w + ix]
                         : 0.0;
          }
        }
      }
    }
  }
}

constexpr int kSmallSpatial = 96;  // output cells below this use im2row

bool is_3x3s1p1(int kh, int kw, int stride, int pad) {
  return kh == 3 && kw == 3 && stride == 1 && pad == 1;
}

}  // namespace

namespace {

// C[M,N] = A[M,K] * B[N,K]^T: rows of A against rows of B, contiguous dots.
void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<int64_t>(i) * k;
    double* crow = c + static_cast<int64_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + static_cast<int64_t>(j) * k;
      double s = 0.0;
#pragma omp simd reduction(+ : s)
      for (int kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
      crow[j] = s;
    }
  }
}

// C[M,N] = A[K,M]^T * B[K,N]: axpy over contiguous B and C rows.
void gemm_tn(int m, int n, int k, const double* a, const double* b, double* c) {
  const int mb = (m + kRowBlock - 1) / kRowBlock;
#pragma omp parallel for schedule(static)
  for (int ib = 0; ib < mb; ++ib) {
    const int i0 = ib * kRowBlock;
    const int ilim = std::min(i0 + kRowBlock, m);
    for (int i = i0; i < ilim; ++i) {
      std::memset(c + static_cast<int64_t>(i) * n, 0, sizeof(double) * n);
    }
    for (int kk = 0; kk < k; ++kk) {
      const double* brow = b + static_cast<int64_t>(kk) * n;
      for (int i = i0; i < ilim; ++i) {
        const double av = a[static_cast<int64_t>(kk) * m + i];
        double* crow = c + static_cast<int64_t>(i) * n;
#pragma omp simd
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

}  // namespace

void gemm(bool trans_a, bool trans_b, int m, int n, int k, const double* a,
          const double* b, double* c) {
  if (!trans_a && !trans_b) {
    gemm_nn(m, n, k, a, b, c);
  } else if (!trans_a && trans_b) {
    if (k >= 96) {
      gemm_nt(m, n, k, a, b, c);  // long contiguous dots
    } else {
      std::vector<double> sb(static_cast<int64_t>(k) * n);
      transpose_into(b, n, k, sb.data());
      gemm_nn(m, n, k, a, sb.data(), c);
    }
  } else if (trans_a && !trans_b) {
    gemm_tn(m, n, k, a, b, c);
  } else {
    std::vector<double> sa(static_cast<int64_t>(m) * k);
    transpose_into(a, k, m, sa.data());  // stored as [K,M] -> [M,K]
    std::vector<double> sb(static_cast<int64_t>(k) * n);
    transpose_into(b, n, k, sb.data());  // stored as [N,K] -> [K,N]
    gemm_nn(m, n, k, sa.data(), sb.data(), c);
  }
}

void conv2d_forward(const double* x, const double* w, double* y, int b, int c,
                    int h, int w_in, int oc, int kh, int kw, int stride,
                    int pad) {
  const int oh = conv_out_dim(h, kh, stride, pad);
  const int ow = conv_out_dim(w_in, kw, stride, pad);
  const int ckk = c * kh * kw;
  const int64_t ohw = static_cast<int64_t>(oh) * ow;
  if (is_3x3s1p1(kh, kw, stride, pad) && w_in >= 2 &&
      static_cast<int64_t>(h) * w_in >= 1024) {
    conv3x3s1_forward(x, w, y, b, c, h, w_in, oc);
    return;
  }
  if (ohw < kSmallSpatial) {
    std::vector<double> rows(ohw * ckk);
    for (int bi = 0; bi < b; ++bi) {
      im2row(x + static_cast<int64_t>(bi) * c * h * w_in, c, h, w_in, kh, kw,
             stride, pad, oh, ow, rows.data());
      // y[oc, p] = w[oc, :] . rows[p, :]
      gemm_nt(oc, static_cast<int>(ohw), ckk, w, rows.data(),
              y + static_cast<int64_t>(bi) * oc * ohw);
    }
    return;
  }
  std::vector<double> col(static_cast<int64_t>(ckk) * ohw);
  for (int bi = 0; bi < b; ++bi) {
    im2col(x + static_cast<int64_t>(bi) * c * h * w_in, c, h, w_in, kh, kw,
           stride, pad, oh, ow, col.data());
    gemm_nn(oc, static_cast<int>(ohw), ckk, w, col.data(),
            y + static_cast<int64_t>(bi) * oc * ohw);
  }
}

void conv2d_grad_input(const double* gy, const double* w, double* gx, int b,
                       int c, int h, int w_in, int oc, int kh, int kw,
                       int stride, int pad) {
  const int oh = conv_out_dim(h, kh, stride, pad);
  const int ow = conv_out_dim(w_in, kw, stride, pad);
  const int ckk = c * kh * kw;
  const int64_t ohw = static_cast<int64_t>(oh) * ow;
  if (is_3x3s1p1(kh, kw, stride, pad) && w_in >= 2 &&
      static_cast<int64_t>(h) * w_in >= 1024 && c >= 4) {
    conv3x3s1_grad_input(gy, w, gx, b, c, h, w_in, oc);
    return;
  }
  std::memset(gx, 0, sizeof(double) * static_cast<int64_t>(b) * c * h * w_in);
  if (ohw < kSmallSpatial) {
    std::vector<double> gyt(ohw * oc);
    std::vector<double> rowsg(ohw * ckk);
    for (int bi = 0; bi < b; ++bi) {
      transpose_into(gy + static_cast<int64_t>(bi) * oc * ohw, oc,
                     static_cast<int>(ohw), gyt.data());
      // rowsg[p, :] = sum_oc gy[oc, p] * w[oc, :]
      gemm_nn(static_cast<int>(ohw), ckk, oc, gyt.data(), w, rowsg.data());
      // scatter rows back; each channel owned by one thread
      double* gxb = gx + static_cast<int64_t>(bi) * c * h * w_in;
#pragma omp parallel for schedule(static)
      for (int ci = 0; ci < c; ++ci) {
        double* dst = gxb + static_cast<int64_t>(ci) * h * w_in;
        for (int64_t p = 0; p < ohw; ++p) {
          const int oy = static_cast<int>(p) / ow;
          const int ox = static_cast<int>(p) % ow;
          const double* src = rowsg.data() + p * ckk + static_cast<int64_t>(ci) * kh * kw;
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= w_in) continue;
              dst[static_cast<int64_t>(iy) * w_in + ix] += src[ky * kw + kx];
            }
          }
        }
      }
    }
    return;
  }
  std::vector<double> wt(static_cast<int64_t>(ckk) * oc);
  transpose_into(w, oc, ckk, wt.data());
  std::vector<double> colg(static_cast<int64_t>(ckk) * ohw);
  for (int bi = 0; bi < b; ++bi) {
    gemm_nn(ckk, static_cast<int>(ohw), oc, wt.data(),
            gy + static_cast<int64_t>(bi) * oc * ohw, colg.data());
    col2im_add(colg.data(), c, h, w_in, kh, kw, stride, pad, oh, ow,
               gx + static_cast<int64_t>(bi) * c * h * w_in);
  }
}

void conv2d_grad_weight(const double* x, const double* gy, double* gw, int b,
                        int c, int h, int w_in, int oc, int kh, int kw,
                        int stride, int pad) {
  if (is_3x3s1p1(kh, kw, stride, pad) && w_in >= 2 &&
      static_cast<int64_t>(h) * w_in >= 1024) {
    conv3x3s1_grad_weight(x, gy, gw, b, c, h, w_in, oc);
    return;
  }
  const int oh = conv_out_dim(h, kh, stride, pad);
  const int ow = conv_out_dim(w_in, kw, stride, pad);
  const int ckk = c * kh * kw;
  const int64_t ohw = static_cast<int64_t>(oh) * ow;
  const int64_t wn = static_cast<int64_t>(oc) * ckk;
  std::vector<double> tmp(wn);
  std::memset(gw, 0, sizeof(double) * wn);
  if (ohw < kSmallSpatial) {
    std::vector<double> rows(ohw * ckk);
    for (int bi = 0; bi < b; ++bi) {
      im2row(x + static_cast<int64_t>(bi) * c * h * w_in, c, h, w_in, kh, kw,
             stride, pad, oh, ow, rows.data());
      // gw[oc, :] += sum_p gy[oc, p] * rows[p, :]
      gemm_nn(oc, ckk, static_cast<int>(ohw),
              gy + static_cast<int64_t>(bi) * oc * ohw, rows.data(), tmp.data());
      for (int64_t i = 0; i < wn; ++i) gw[i] += tmp[i];
    }
    return;
  }
  std::vector<double> col(static_cast<int64_t>(ckk) * ohw);
  for (int bi = 0; bi < b; ++bi) {
    im2col(x + static_cast<int64_t>(bi) * c * h * w_in, c, h, w_in, kh, kw,
           stride, pad, oh, ow, col.data());
    // gw[oc,ckk] = gy[oc,:] . col[ckk,:] -- both rows contiguous over OHW
    gemm_nt(oc, ckk, static_cast<int>(ohw),
            gy + static_cast<int64_t>(bi) * oc * ohw, col.data(), tmp.data());
    for (int64_t i = 0; i < wn; ++i) gw[i] += tmp[i];
  }
}

double reduce_sum(const double* x, int64_t n) {
  constexpr int64_t kChunk = 8192;
  if (n <= kChunk * 2) {
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const int64_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(chunks);
#pragma omp parallel for schedule(static)
  for (int64_t ci = 0; ci < chunks; ++ci) {
    const int64_t lo = ci * kChunk;
    const int64_t hi = std::min(lo + kChunk, n);
    double s = 0.0;
    for (int64_t i = lo; i < hi; ++i) s += x[i];
    partial[ci] = s;
  }
  double s = 0.0;
  for (int64_t ci = 0; ci < chunks; ++ci) s += partial[ci];
  return s;
}

namespace serial {

void gemm(bool trans_a, bool trans_b, int m, int n, int k, const double* a,
          const double* b, double* c) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int kk = 0; kk < k; ++kk) {
        const double av = trans_a ? a[static_cast<int64_t>(kk) * m + i]
                                  : a[static_cast<int64_t>(i) * k + kk];
        const double bv = trans_b ? b[static_cast<int64_t>(j) * k + kk]
                                  : b[static_cast<int64_t>(kk) * n + j];
        s += av * bv;
      }
      c[static_cast<int64_t>(i) * n + j] = s;
    }
  }
}

void conv2d_forward(const double* x, const double* w, double* y, int b, int c,
                    int h, int w_in, int oc, int kh, int kw, int stride,
                    int pad) {
  const int oh = conv_out_dim(h, kh, stride, pad);
  const int ow = conv_out_dim(w_in, kw, stride, pad);
  for (int bi = 0; bi < b; ++bi) {
    for (int o = 0; o < oc; ++o) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          double s = 0.0;
          for (int ci = 0; ci < c; ++ci) {
            for (int ky = 0; ky < kh; ++ky) {
              for (int kx = 0; kx < kw; ++kx) {
                const int iy = oy * stride - pad + ky;
                const int ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= w_in) continue;
                s += x[((static_cast<int64_t>(bi) * c + ci) * h + iy) * w_in + ix] *
                     w[((static_cast<int64_t>(o) * c + ci) * kh + ky) * kw + kx];
              }
            }
          }
          y[((static_cast<int64_t>(bi) * oc + o) * oh + oy) * ow + ox] = s;
        }
      }
    }
  }
}

void conv2d_grad_input(const double* gy, const double* w, double* gx, int b,
                       int c, int h, int w_in, int oc, int kh, int kw,
                       int stride, int pad) {
  const int oh = conv_out_dim(h, kh, stride, pad);
  const int ow = conv_out_dim(w_in, kw, stride, pad);
  std::memset(gx, 0, sizeof(double) * static_cast<int64_t>(b) * c * h * w_in);
  for (int bi = 0; bi < b; ++bi) {
    for (int o = 0; o < oc; ++o) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const double g = gy[((static_cast<int64_t>(bi) * oc + o) * oh + oy) * ow + ox];
          for (int ci = 0; ci < c; ++ci) {
            for (int ky = 0; ky < kh; ++ky) {
              for (int kx = 0; kx < kw; ++kx) {
                const int iy = oy * stride - pad + ky;
                const int ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= w_in) continue;
                gx[((static_cast<int64_t>(bi) * c + ci) * h + iy) * w_in + ix] +=
                    g * w[((static_cast<int64_t>(o) * c + ci) * kh + ky) * kw + kx];
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_grad_weight(const double* x, const double* gy, double* gw, int b,
                        int c, int h, int w_in, int oc, int kh, int kw,
                        int stride, int pad) {
  const int oh = conv_out_dim(h, kh, stride, pad);
  const int ow = conv_out_dim(w_in, kw, stride, pad);
  std::memset(gw, 0, sizeof(double) * static_cast<int64_t>(oc) * c * kh * kw);
  for (int bi = 0; bi < b; ++bi) {
    for (int o = 0; o < oc; ++o) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const double g = gy[((static_cast<int64_t>(bi) * oc + o) * oh + oy) * ow + ox];
          for (int ci = 0; ci < c; ++ci) {
            for (int ky = 0; ky < kh; ++ky) {
              for (int kx = 0; kx < kw; ++kx) {
                const int iy = oy * stride - pad + ky;
                const int ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= w_in) continue;
                gw[((static_cast<int64_t>(o) * c + ci) * kh + ky) * kw + kx] +=
                    g * x[((static_cast<int64_t>(bi) * c + ci) * h + iy) * w_in + ix];
              }
            }
          }
        }
      }
    }
  }
}

double reduce_sum(const double* x, int64_t n) {
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += x[i];
  return s;
}

}  // namespace serial
}  // namespace unfilter::kernels
