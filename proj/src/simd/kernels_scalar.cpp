#include "modalsim/simd/kernels.hpp"

namespace modalsim::simd {
namespace {

void matvec_scalar(const double* a, std::size_t rows, std::size_t cols,
                   const double* x, double* y) {
    for (std::size_t i = 0; i < rows; ++i)
        y[i] = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
        const double* col = a + j * rows;
        const double xj = x[j];
        for (std::size_t i = 0; i < rows; ++i)
            y[i] += col[i] * xj;
    }
}

void matvec_t_scalar(const double* a, std::size_t rows, std::size_t cols,
                     const double* x, double* y) {
    for (std::size_t j = 0; j < cols; ++j) {
        const double* col = a + j * rows;
        double acc = 0.0;
        for (std::size_t i = 0; i < rows; ++i)
            acc += col[i] * x[i];
        y[j] = acc;
    }
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += x[i] * y[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        y[i] += alpha * x[i];
}

void window_stats_scalar(const float* a, std::size_t stride_a,
                         const float* b, std::size_t stride_b,
                         std::size_t w, std::size_t h, double out[5]) {
    double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t r = 0; r < h; ++r) {
        const float* pa = a + r * stride_a;
        const float* pb = b + r * stride_b;
        for (std::size_t c = 0; c < w; ++c) {
            const double va = pa[c];
            const double vb = pb[c];
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
        }
    }
    out[0] = sa;
    out[1] = sb;
    out[2] = saa;
    out[3] = sbb;
    out[4] = sab;
}

} // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{
        "scalar",
        matvec_scalar,
        matvec_t_scalar,
        dot_scalar,
        axpy_scalar,
        window_stats_scalar,
    };
    return table;
}

} // namespace modalsim::simd
