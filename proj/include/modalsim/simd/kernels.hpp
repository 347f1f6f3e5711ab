#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace modalsim::simd {

// Data-parallel inner loops of the toolkit: dense column-major products for
// modal reconstruction/projection, vector primitives for the Lanczos solver,
// and windowed correlation sums for patch tracking.
//
// Every entry has a scalar reference implementation. Wider variants (AVX2 on
// x86-64, NEON on aarch64) are selected at runtime and are required by the
// test suite to agree with the reference to rounding error. Summation order
// differs between variants, so agreement is tolerance-based, not bitwise.
struct KernelTable {
    const char* name;

    // y = A * x with A column-major (rows x cols).
    void (*matvec)(const double* a, std::size_t rows, std::size_t cols,
                   const double* x, double* y);

    // y = A^T * x with A column-major (rows x cols), |y| = cols.
    void (*matvec_t)(const double* a, std::size_t rows, std::size_t cols,
                     const double* x, double* y);

    double (*dot)(const double* x, const double* y, std::size_t n);

    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

    // Accumulates { sum(a), sum(b), sum(a*a), sum(b*b), sum(a*b) } over a
    // w x h window of two strided single-precision images. Sums are carried
    // in double.
    void (*window_stats)(const float* a, std::size_t stride_a,
                         const float* b, std::size_t stride_b,
                         std::size_t w, std::size_t h, double out[5]);
};

const KernelTable& scalar_kernels();

// Active table. Defaults to the widest instruction set the CPU supports;
// override with select_kernels() or the MODALSIM_KERNELS environment
// variable ("auto", "scalar", "avx2", "neon").
const KernelTable& active_kernels();

// Returns false if the named variant is unknown or unsupported on this CPU.
bool select_kernels(std::string_view name);

std::vector<std::string> available_kernel_names();

bool cpu_has_avx2();

} // namespace modalsim::simd
