#pragma once

#include <cblas.h>

namespace kpfc {

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C
template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda,
          const T* b, int ldb, T beta, T* c, int ldc) {
  if constexpr (sizeof(T) == sizeof(float)) {
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, static_cast<float>(alpha),
                reinterpret_cast<const float*>(a), lda, reinterpret_cast<const float*>(b), ldb,
                static_cast<float>(beta), reinterpret_cast<float*>(c), ldc);
  } else {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, m, n, k, static_cast<double>(alpha),
                reinterpret_cast<const double*>(a), lda, reinterpret_cast<const double*>(b), ldb,
                static_cast<double>(beta), reinterpret_cast<double*>(c), ldc);
  }
}

}  // namespace kpfc
