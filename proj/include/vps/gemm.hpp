#pragma once

#include "vps/real.hpp"

namespace vps {

// Small single-threaded GEMM kernels, row-major. Callers parallelize over
// independent output blocks (pixel tiles, batch entries).

// C(MxN) = A(MxK) * B(KxN), or += when accumulate is set.
void gemm_nn(int M, int N, int K, const Real* A, int lda, const Real* B,
             int ldb, Real* C, int ldc, bool accumulate);

// C(MxN) [+]= A(MxL) * B^T with B stored (NxL) row-major.
void gemm_nt(int M, int N, int L, const Real* A, int lda, const Real* B,
             int ldb, Real* C, int ldc, bool accumulate);

// C(MxN) [+]= A^T * B with A stored (KxM) and B (KxN) row-major.
void gemm_tn(int M, int N, int K, const Real* A, int lda, const Real* B,
             int ldb, Real* C, int ldc, bool accumulate);

}  // namespace vps
