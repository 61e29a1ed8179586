#include "sps2/kernels.hpp"

namespace sps2::kernels {

namespace {

bool detect_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa& current() {
    static Isa isa = detect_avx2() ? Isa::avx2 : Isa::scalar;
    return isa;
}

}  // namespace

bool avx2_available() {
    static bool avail = detect_avx2();
    return avail;
}

Isa active_isa() { return current(); }

void force_isa(Isa isa) {
    if (isa == Isa::avx2 && !avx2_available()) return;
    current() = isa;
}

void conv_trapezoid(const cd* f, const cd* g, cd* out, std::size_t n, double h) {
    if (current() == Isa::avx2)
        detail::conv_trapezoid_avx2(f, g, out, n, h);
    else
        detail::conv_trapezoid_scalar(f, g, out, n, h);
}

void cmul_acc(const cd* a, const cd* b, cd* y, std::size_t n) {
    if (current() == Isa::avx2)
        detail::cmul_acc_avx2(a, b, y, n);
    else
        detail::cmul_acc_scalar(a, b, y, n);
}

cd cdot(const cd* a, const cd* b, std::size_t n) {
    if (current() == Isa::avx2) return detail::cdot_avx2(a, b, n);
    return detail::cdot_scalar(a, b, n);
}

}  // namespace sps2::kernels
