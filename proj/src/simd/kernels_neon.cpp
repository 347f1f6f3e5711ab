// NEON kernel variants for aarch64. double support needs the 64-bit ISA,
// so 32-bit ARM falls back to the scalar table.

#include "modalsim/simd/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace modalsim::simd {
namespace {

void matvec_neon(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y) {
    for (std::size_t i = 0; i < rows; ++i)
        y[i] = 0.0;
    std::size_t j = 0;
    for (; j + 2 <= cols; j += 2) {
        const double* c0 = a + (j + 0) * rows;
        const double* c1 = a + (j + 1) * rows;
        const float64x2_t x0 = vdupq_n_f64(x[j + 0]);
        const float64x2_t x1 = vdupq_n_f64(x[j + 1]);
        std::size_t i = 0;
        for (; i + 2 <= rows; i += 2) {
            float64x2_t acc = vld1q_f64(y + i);
            acc = vfmaq_f64(acc, vld1q_f64(c0 + i), x0);
            acc = vfmaq_f64(acc, vld1q_f64(c1 + i), x1);
            vst1q_f64(y + i, acc);
        }
        for (; i < rows; ++i)
            y[i] += c0[i] * x[j + 0] + c1[i] * x[j + 1];
    }
    for (; j < cols; ++j) {
        const double* col = a + j * rows;
        const float64x2_t xj = vdupq_n_f64(x[j]);
        std::size_t i = 0;
        for (; i + 2 <= rows; i += 2) {
            float64x2_t acc = vld1q_f64(y + i);
            acc = vfmaq_f64(acc, vld1q_f64(col + i), xj);
            vst1q_f64(y + i, acc);
        }
        for (; i < rows; ++i)
            y[i] += col[i] * x[j];
    }
}

void matvec_t_neon(const double* a, std::size_t rows, std::size_t cols,
                   const double* x, double* y) {
    for (std::size_t j = 0; j < cols; ++j) {
        const double* col = a + j * rows;
        float64x2_t acc0 = vdupq_n_f64(0.0);
        float64x2_t acc1 = vdupq_n_f64(0.0);
        std::size_t i = 0;
        for (; i + 4 <= rows; i += 4) {
            acc0 = vfmaq_f64(acc0, vld1q_f64(col + i), vld1q_f64(x + i));
            acc1 = vfmaq_f64(acc1, vld1q_f64(col + i + 2), vld1q_f64(x + i + 2));
        }
        double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
        for (; i < rows; ++i)
            acc += col[i] * x[i];
        y[j] = acc;
    }
}

double dot_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
    for (; i < n; ++i)
        acc += x[i] * y[i];
    return acc;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t acc = vld1q_f64(y + i);
        acc = vfmaq_f64(acc, va, vld1q_f64(x + i));
        vst1q_f64(y + i, acc);
    }
    for (; i < n; ++i)
        y[i] += alpha * x[i];
}

void window_stats_neon(const float* a, std::size_t stride_a,
                       const float* b, std::size_t stride_b,
                       std::size_t w, std::size_t h, double out[5]) {
    float64x2_t vsa = vdupq_n_f64(0.0);
    float64x2_t vsb = vdupq_n_f64(0.0);
    float64x2_t vsaa = vdupq_n_f64(0.0);
    float64x2_t vsbb = vdupq_n_f64(0.0);
    float64x2_t vsab = vdupq_n_f64(0.0);
    double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;

    for (std::size_t r = 0; r < h; ++r) {
        const float* pa = a + r * stride_a;
        const float* pb = b + r * stride_b;
        std::size_t c = 0;
        for (; c + 2 <= w; c += 2) {
            const float64x2_t va = vcvt_f64_f32(vld1_f32(pa + c));
            const float64x2_t vb = vcvt_f64_f32(vld1_f32(pb + c));
            vsa = vaddq_f64(vsa, va);
            vsb = vaddq_f64(vsb, vb);
            vsaa = vfmaq_f64(vsaa, va, va);
            vsbb = vfmaq_f64(vsbb, vb, vb);
            vsab = vfmaq_f64(vsab, va, vb);
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
    out[0] = sa + vaddvq_f64(vsa);
    out[1] = sb + vaddvq_f64(vsb);
    out[2] = saa + vaddvq_f64(vsaa);
    out[3] = sbb + vaddvq_f64(vsbb);
    out[4] = sab + vaddvq_f64(vsab);
}

} // namespace

const KernelTable& neon_kernels_impl() {
    static const KernelTable table{
        "neon",
        matvec_neon,
        matvec_t_neon,
        dot_neon,
        axpy_neon,
        window_stats_neon,
    };
    return table;
}

} // namespace modalsim::simd

#endif // __aarch64__
