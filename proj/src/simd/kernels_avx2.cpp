// AVX2 + FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma and must only be entered after a runtime CPUID check.

#include "modalsim/simd/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace modalsim::simd {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

void matvec_avx2(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y) {
    for (std::size_t i = 0; i < rows; ++i)
        y[i] = 0.0;

    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
        const double* c0 = a + (j + 0) * rows;
        const double* c1 = a + (j + 1) * rows;
        const double* c2 = a + (j + 2) * rows;
        const double* c3 = a + (j + 3) * rows;
        const __m256d x0 = _mm256_set1_pd(x[j + 0]);
        const __m256d x1 = _mm256_set1_pd(x[j + 1]);
        const __m256d x2 = _mm256_set1_pd(x[j + 2]);
        const __m256d x3 = _mm256_set1_pd(x[j + 3]);
        std::size_t i = 0;
        for (; i + 4 <= rows; i += 4) {
            __m256d acc = _mm256_loadu_pd(y + i);
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(c0 + i), x0, acc);
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(c1 + i), x1, acc);
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(c2 + i), x2, acc);
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(c3 + i), x3, acc);
            _mm256_storeu_pd(y + i, acc);
        }
        for (; i < rows; ++i)
            y[i] += c0[i] * x[j + 0] + c1[i] * x[j + 1] + c2[i] * x[j + 2] + c3[i] * x[j + 3];
    }
    for (; j < cols; ++j) {
        const double* col = a + j * rows;
        const __m256d xj = _mm256_set1_pd(x[j]);
        std::size_t i = 0;
        for (; i + 4 <= rows; i += 4) {
            __m256d acc = _mm256_loadu_pd(y + i);
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(col + i), xj, acc);
            _mm256_storeu_pd(y + i, acc);
        }
        for (; i < rows; ++i)
            y[i] += col[i] * x[j];
    }
}

void matvec_t_avx2(const double* a, std::size_t rows, std::size_t cols,
                   const double* x, double* y) {
    for (std::size_t j = 0; j < cols; ++j) {
        const double* col = a + j * rows;
        __m256d acc0 = _mm256_setzero_pd();
        __m256d acc1 = _mm256_setzero_pd();
        std::size_t i = 0;
        for (; i + 8 <= rows; i += 8) {
            acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(col + i), _mm256_loadu_pd(x + i), acc0);
            acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(col + i + 4), _mm256_loadu_pd(x + i + 4), acc1);
        }
        double acc = hsum(_mm256_add_pd(acc0, acc1));
        for (; i < rows; ++i)
            acc += col[i] * x[i];
        y[j] = acc;
    }
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i)
        acc += x[i] * y[i];
    return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d acc = _mm256_loadu_pd(y + i);
        acc = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), acc);
        _mm256_storeu_pd(y + i, acc);
    }
    for (; i < n; ++i)
        y[i] += alpha * x[i];
}

void window_stats_avx2(const float* a, std::size_t stride_a,
                       const float* b, std::size_t stride_b,
                       std::size_t w, std::size_t h, double out[5]) {
    __m256d vsa = _mm256_setzero_pd();
    __m256d vsb = _mm256_setzero_pd();
    __m256d vsaa = _mm256_setzero_pd();
    __m256d vsbb = _mm256_setzero_pd();
    __m256d vsab = _mm256_setzero_pd();
    double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;

    for (std::size_t r = 0; r < h; ++r) {
        const float* pa = a + r * stride_a;
        const float* pb = b + r * stride_b;
        std::size_t c = 0;
        for (; c + 4 <= w; c += 4) {
            const __m256d va = _mm256_cvtps_pd(_mm_loadu_ps(pa + c));
            const __m256d vb = _mm256_cvtps_pd(_mm_loadu_ps(pb + c));
            vsa = _mm256_add_pd(vsa, va);
            vsb = _mm256_add_pd(vsb, vb);
            vsaa = _mm256_fmadd_pd(va, va, vsaa);
            vsbb = _mm256_fmadd_pd(vb, vb, vsbb);
            vsab = _mm256_fmadd_pd(va, vb, vsab);
        }
        for (; c < w; ++c) {
            const double va = pa[c];
            const double vb = pb[c];
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
        }
    }
    out[0] = sa + hsum(vsa);
    out[1] = sb + hsum(vsb);
    out[2] = saa + hsum(vsaa);
    out[3] = sbb + hsum(vsbb);
    out[4] = sab + hsum(vsab);
}

} // namespace

const KernelTable& avx2_kernels_impl() {
    static const KernelTable table{
        "avx2",
        matvec_avx2,
        matvec_t_avx2,
        dot_avx2,
        axpy_avx2,
        window_stats_avx2,
    };
    return table;
}

} // namespace modalsim::simd

#endif // __AVX2__ && __FMA__
