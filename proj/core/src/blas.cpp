#include "gerseg/blas.hpp"

#include <mutex>

#if defined(GERSEG_WITH_OPENBLAS)
#include <cblas.h>
extern "C" void openblas_set_num_threads(int);
#endif

namespace gerseg::blas {

#if defined(GERSEG_WITH_OPENBLAS)

namespace {
std::once_flag g_init;
void init_blas() {
  // One BLAS thread: the GEMM partitioning then never changes, and worker
  // threading stays under this library's own control (GER_THREADS).
  std::call_once(g_init, [] { openblas_set_num_threads(1); });
}
}  // namespace

void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
  init_blas();
  cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans,
              m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a, int lda,
          const double* b, int ldb, double beta, double* c, int ldc) {
  init_blas();
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans,
              m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

const char* backend_name() { return "openblas"; }

#else  // built-in fallback

namespace {

// Plain blocked GEMM. Not fast, but correct and deterministic; only used
// when OpenBLAS is unavailable at configure time.
template <typename T>
void gemm_impl(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
               const T* b, int ldb, T beta, T* c, int ldc) {
  auto a_at = [&](int i, int j) { return trans_a ? a[static_cast<long>(j) * lda + i] : a[static_cast<long>(i) * lda + j]; };
  auto b_at = [&](int i, int j) { return trans_b ? b[static_cast<long>(j) * ldb + i] : b[static_cast<long>(i) * ldb + j]; };
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      T acc = 0;
      for (int p = 0; p < k; ++p) acc += a_at(i, p) * b_at(p, j);
      T& out = c[static_cast<long>(i) * ldc + j];
      out = alpha * acc + (beta == T(0) ? T(0) : beta * out);
    }
  }
}

}  // namespace

void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
  gemm_impl(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a, int lda,
          const double* b, int ldb, double beta, double* c, int ldc) {
  gemm_impl(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

const char* backend_name() { return "builtin"; }

#endif

}  // namespace gerseg::blas
