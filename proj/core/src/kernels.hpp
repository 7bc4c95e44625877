#pragma once

#include <cstddef>

// Row-major f32 GEMM kernels. Every output element is accumulated over the
// inner dimension in ascending order starting from zero, with fused
// multiply-add, independent of its row position. This makes results
// invariant to row permutations of the left operand.
namespace pclt::kernels {

/// c[m×n] = a[m×k] · b[k×n]
void gemm(const float* a, const float* b, float* c, std::size_t m, std::size_t k, std::size_t n);

/// c[m×k] = a[m×n] · b[k×n]ᵀ
void gemm_bt(const float* a, const float* b, float* c, std::size_t m, std::size_t n, std::size_t k);

/// c[k×n] = a[m×k]ᵀ · b[m×n]
void gemm_at(const float* a, const float* b, float* c, std::size_t m, std::size_t k, std::size_t n);

void transpose(const float* a, float* out, std::size_t rows, std::size_t cols);

}  // namespace pclt::kernels
