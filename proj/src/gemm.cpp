#include "vps/gemm.hpp"

#include <algorithm>
#include <cstring>

namespace vps {

namespace {

// Register-tile sizes for the nn microkernel. 4x16 keeps all accumulators
// in vector registers with float on AVX2.
constexpr int kMr = 4;
constexpr int kNr = 16;

inline void microkernel_4x16(int K, const Real* A, int lda, const Real* B,
                             int ldb, Real* C, int ldc, bool accumulate) {
  Real acc[kMr][kNr];
  if (accumulate) {
    for (int i = 0; i < kMr; ++i) {
      for (int j = 0; j < kNr; ++j) acc[i][j] = C[i * ldc + j];
    }
  } else {
    std::memset(acc, 0, sizeof(acc));
  }
  for (int k = 0; k < K; ++k) {
    const Real* bk = B + static_cast<size_t>(k) * ldb;
    for (int i = 0; i < kMr; ++i) {
      const Real a = A[i * static_cast<size_t>(lda) + k];
#pragma omp simd
      for (int j = 0; j < kNr; ++j) acc[i][j] += a * bk[j];
    }
  }
  for (int i = 0; i < kMr; ++i) {
    for (int j = 0; j < kNr; ++j) C[i * ldc + j] = acc[i][j];
  }
}

// Fallback for ragged edges.
inline void edge_nn(int M, int N, int K, const Real* A, int lda, const Real* B,
                    int ldb, Real* C, int ldc, bool accumulate) {
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      Real s = accumulate ? C[i * ldc + j] : Real(0);
      for (int k = 0; k < K; ++k) {
        s += A[i * static_cast<size_t>(lda) + k] * B[k * static_cast<size_t>(ldb) + j];
      }
      C[i * ldc + j] = s;
    }
  }
}

}  // namespace

void gemm_nn(int M, int N, int K, const Real* A, int lda, const Real* B,
             int ldb, Real* C, int ldc, bool accumulate) {
  const int m_main = M - M % kMr;
  const int n_main = N - N % kNr;
  for (int i0 = 0; i0 < m_main; i0 += kMr) {
    for (int j0 = 0; j0 < n_main; j0 += kNr) {
      microkernel_4x16(K, A + static_cast<size_t>(i0) * lda, lda, B + j0, ldb,
                       C + static_cast<size_t>(i0) * ldc + j0, ldc, accumulate);
    }
    if (n_main < N) {
      edge_nn(kMr, N - n_main, K, A + static_cast<size_t>(i0) * lda, lda,
              B + n_main, ldb, C + static_cast<size_t>(i0) * ldc + n_main, ldc,
              accumulate);
    }
  }
  if (m_main < M) {
    edge_nn(M - m_main, N, K, A + static_cast<size_t>(m_main) * lda, lda, B,
            ldb, C + static_cast<size_t>(m_main) * ldc, ldc, accumulate);
  }
}

void gemm_nt(int M, int N, int L, const Real* A, int lda, const Real* B,
             int ldb, Real* C, int ldc, bool accumulate) {
  for (int i = 0; i < M; ++i) {
    const Real* ai = A + static_cast<size_t>(i) * lda;
    for (int j = 0; j < N; ++j) {
      const Real* bj = B + static_cast<size_t>(j) * ldb;
      Real s = 0;
#pragma omp simd reduction(+ : s)
      for (int l = 0; l < L; ++l) s += ai[l] * bj[l];
      Real* c = C + static_cast<size_t>(i) * ldc + j;
      *c = accumulate ? *c + s : s;
    }
  }
}

void gemm_tn(int M, int N, int K, const Real* A, int lda, const Real* B,
             int ldb, Real* C, int ldc, bool accumulate) {
  if (!accumulate) {
    for (int i = 0; i < M; ++i) {
      std::memset(C + static_cast<size_t>(i) * ldc, 0, sizeof(Real) * N);
    }
  }
  // j-tiled so the B panel stays cache-resident across the k sweep.
  constexpr int kJTile = 512;
  for (int j0 = 0; j0 < N; j0 += kJTile) {
    const int jn = std::min(kJTile, N - j0);
    for (int i = 0; i < M; ++i) {
      Real* ci = C + static_cast<size_t>(i) * ldc + j0;
      for (int k = 0; k < K; ++k) {
        const Real a = A[static_cast<size_t>(k) * lda + i];
        const Real* bk = B + static_cast<size_t>(k) * ldb + j0;
#pragma omp simd
        for (int j = 0; j < jn; ++j) ci[j] += a * bk[j];
      }
    }
  }
}

}  // namespace vps
