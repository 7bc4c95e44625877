#include "kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace pclt::kernels {
namespace {

constexpr std::size_t kInnerChunk = 256;

// R rows of c, W columns starting at j0, held in local accumulators.
// Inner dimension is processed in ascending chunks [p0, p1); partial sums are
// carried through c, so chunking does not change the accumulation sequence.
// Element (i, p) of a lives at a[i * rs + p * cs].
template <int R, int W>
inline void block(const float* a, std::size_t rs, std::size_t cs, const float* b, float* c, std::size_t n,
                  std::size_t i0, std::size_t j0, std::size_t p0, std::size_t p1) {
  float acc[R][W];
  for (int r = 0; r < R; ++r) {
    const float* crow = c + (i0 + r) * n + j0;
    for (int j = 0; j < W; ++j) acc[r][j] = p0 == 0 ? 0.0f : crow[j];
  }
  for (std::size_t p = p0; p < p1; ++p) {
    const float* brow = b + p * n + j0;
    for (int r = 0; r < R; ++r) {
      const float av = a[(i0 + r) * rs + p * cs];
      for (int j = 0; j < W; ++j) acc[r][j] = std::fma(av, brow[j], acc[r][j]);
    }
  }
  for (int r = 0; r < R; ++r) {
    float* crow = c + (i0 + r) * n + j0;
    for (int j = 0; j < W; ++j) crow[j] = acc[r][j];
  }
}

template <int R>
inline void row_panel(const float* a, std::size_t rs, std::size_t cs, const float* b, float* c, std::size_t n,
                      std::size_t i0, std::size_t p0, std::size_t p1) {
  std::size_t j = 0;
  for (; j + 64 <= n; j += 64) block<R, 64>(a, rs, cs, b, c, n, i0, j, p0, p1);
  for (; j + 16 <= n; j += 16) block<R, 16>(a, rs, cs, b, c, n, i0, j, p0, p1);
  for (; j < n; ++j) block<R, 1>(a, rs, cs, b, c, n, i0, j, p0, p1);
}

void gemm_strided(const float* a, std::size_t rs, std::size_t cs, const float* b, float* c, std::size_t m,
                  std::size_t k, std::size_t n) {
  if (k == 0) {
    std::fill(c, c + m * n, 0.0f);
    return;
  }
  for (std::size_t p0 = 0; p0 < k; p0 += kInnerChunk) {
    const std::size_t p1 = std::min(k, p0 + kInnerChunk);
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) row_panel<4>(a, rs, cs, b, c, n, i, p0, p1);
    switch (m - i) {
      case 3: row_panel<3>(a, rs, cs, b, c, n, i, p0, p1); break;
      case 2: row_panel<2>(a, rs, cs, b, c, n, i, p0, p1); break;
      case 1: row_panel<1>(a, rs, cs, b, c, n, i, p0, p1); break;
      default: break;
    }
  }
}

}  // namespace

void gemm(const float* a, const float* b, float* c, std::size_t m, std::size_t k, std::size_t n) {
  gemm_strided(a, k, 1, b, c, m, k, n);
}

void transpose(const float* a, float* out, std::size_t rows, std::size_t cols) {
  constexpr std::size_t kTile = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += kTile) {
    for (std::size_t c0 = 0; c0 < cols; c0 += kTile) {
      const std::size_t r1 = std::min(rows, r0 + kTile);
      const std::size_t c1 = std::min(cols, c0 + kTile);
      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t cc = c0; cc < c1; ++cc) out[cc * rows + r] = a[r * cols + cc];
      }
    }
  }
}

void gemm_bt(const float* a, const float* b, float* c, std::size_t m, std::size_t n, std::size_t k) {
  std::vector<float> bt(n * k);
  transpose(b, bt.data(), k, n);
  gemm(a, bt.data(), c, m, n, k);
}

void gemm_at(const float* a, const float* b, float* c, std::size_t m, std::size_t k, std::size_t n) {
  gemm_strided(a, 1, k, b, c, k, m, n);
}

}  // namespace pclt::kernels
