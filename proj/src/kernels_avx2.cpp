// Compiled with -mavx2. Callers must check cpu_has_avx2() before using this
// table; nothing here is executed on the scalar path.
#include "tthf/kernels.hpp"

#if defined(TTHF_NO_AVX2) || !defined(__AVX2__)

namespace tthf::kernels::detail {
const Table& avx2_table() { return scalar_table(); }
}  // namespace tthf::kernels::detail

#else

#include <immintrin.h>

namespace tthf::kernels::detail {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        __m256d vx = _mm256_loadu_pd(x + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, vx));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scal_avx2(double a, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(
            acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sq_norm_avx2(const double* x, std::size_t n) { return dot_avx2(x, x, n); }

double sq_dist_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d =
            _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

void weighted_sum_avx2(const double* const* rows, const double* w,
                       std::size_t k, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t r = 0; r < k; ++r)
            acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(w[r]),
                                                   _mm256_loadu_pd(rows[r] + i)));
        _mm256_storeu_pd(out + i, acc);
    }
    for (; i < n; ++i) {
        double s = 0.0;
        for (std::size_t r = 0; r < k; ++r) s += w[r] * rows[r][i];
        out[i] = s;
    }
}

}  // namespace

const Table& avx2_table() {
    static const Table t{axpy_avx2,    scal_avx2,    dot_avx2,
                         sq_norm_avx2, sq_dist_avx2, weighted_sum_avx2};
    return t;
}

}  // namespace tthf::kernels::detail

#endif
