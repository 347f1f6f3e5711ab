#include "modalsim/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace modalsim::simd {

#if defined(MODALSIM_HAVE_AVX2)
const KernelTable& avx2_kernels_impl();
#endif
#if defined(MODALSIM_HAVE_NEON)
const KernelTable& neon_kernels_impl();
#endif

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

const KernelTable* table_by_name(std::string_view name) {
    if (name == "scalar")
        return &scalar_kernels();
#if defined(MODALSIM_HAVE_AVX2)
    if (name == "avx2" && cpu_has_avx2())
        return &avx2_kernels_impl();
#endif
#if defined(MODALSIM_HAVE_NEON)
    if (name == "neon")
        return &neon_kernels_impl();
#endif
    return nullptr;
}

const KernelTable* widest_supported() {
#if defined(MODALSIM_HAVE_AVX2)
    if (cpu_has_avx2())
        return &avx2_kernels_impl();
#endif
#if defined(MODALSIM_HAVE_NEON)
    return &neon_kernels_impl();
#endif
    return &scalar_kernels();
}

const KernelTable* initial_table() {
    if (const char* env = std::getenv("MODALSIM_KERNELS")) {
        std::string_view name(env);
        if (!name.empty() && name != "auto") {
            if (const KernelTable* t = table_by_name(name))
                return t;
        }
    }
    return widest_supported();
}

std::atomic<const KernelTable*>& active_slot() {
    static std::atomic<const KernelTable*> slot{initial_table()};
    return slot;
}

} // namespace

const KernelTable& active_kernels() {
    return *active_slot().load(std::memory_order_relaxed);
}

bool select_kernels(std::string_view name) {
    const KernelTable* t = (name == "auto") ? widest_supported() : table_by_name(name);
    if (!t)
        return false;
    active_slot().store(t, std::memory_order_relaxed);
    return true;
}

std::vector<std::string> available_kernel_names() {
    std::vector<std::string> names{"scalar"};
#if defined(MODALSIM_HAVE_AVX2)
    if (cpu_has_avx2())
        names.emplace_back("avx2");
#endif
#if defined(MODALSIM_HAVE_NEON)
    names.emplace_back("neon");
#endif
    return names;
}

} // namespace modalsim::simd
