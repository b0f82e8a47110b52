#pragma once

namespace gerseg::blas {

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C.
// Backed by OpenBLAS when available (pinned to one BLAS thread so results
// and timings do not depend on the machine), otherwise by a small internal
// kernel. Either backend is deterministic run to run.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc);
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a, int lda,
          const double* b, int ldb, double beta, double* c, int ldc);

// Name of the active backend, for logs and --version style output.
const char* backend_name();

}  // namespace gerseg::blas
