#include "sps2/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define SPS2_HAVE_AVX2_BUILD 1
#include <immintrin.h>
#endif

#include <vector>

namespace sps2::kernels::detail {

#ifdef SPS2_HAVE_AVX2_BUILD

namespace {

// Complex multiply of two packed pairs [re0 im0 re1 im1].
inline __m256d cmul4(__m256d a, __m256d b) {
    __m256d b_re = _mm256_movedup_pd(b);          // [br br br br]
    __m256d b_im = _mm256_permute_pd(b, 0xF);     // [bi bi bi bi]
    __m256d a_sw = _mm256_permute_pd(a, 0x5);     // [ai ar ai ar]
    return _mm256_addsub_pd(_mm256_mul_pd(a, b_re), _mm256_mul_pd(a_sw, b_im));
}

inline cd reduce2(__m256d acc) {
    alignas(32) double buf[4];
    _mm256_store_pd(buf, acc);
    return cd{buf[0] + buf[2], buf[1] + buf[3]};
}

inline __m256d fmadd_c(__m256d a, __m256d b, __m256d acc) {
    __m256d b_re = _mm256_movedup_pd(b);
    __m256d b_im = _mm256_permute_pd(b, 0xF);
    __m256d a_sw = _mm256_permute_pd(a, 0x5);
    __m256d t = _mm256_mul_pd(a_sw, b_im);
    // addsub(a*b_re, t) == complex product; fold the accumulate into the
    // real-part fma.
    return _mm256_add_pd(acc, _mm256_addsub_pd(_mm256_fmadd_pd(a, b_re, _mm256_setzero_pd()), t));
}

}  // namespace

cd cdot_avx2(const cd* a, const cd* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    const double* pa = reinterpret_cast<const double*>(a);
    const double* pb = reinterpret_cast<const double*>(b);
    for (; i + 2 <= n; i += 2) {
        __m256d va = _mm256_loadu_pd(pa + 2 * i);
        __m256d vb = _mm256_loadu_pd(pb + 2 * i);
        acc = fmadd_c(va, vb, acc);
    }
    cd s = reduce2(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void conv_trapezoid_avx2(const cd* f, const cd* g, cd* out, std::size_t n, double h) {
    if (n == 0) return;
    out[0] = cd{0.0, 0.0};
    std::vector<cd> frev(n);
    for (std::size_t i = 0; i < n; ++i) frev[i] = f[n - 1 - i];
    for (std::size_t l = 1; l < n; ++l) {
        const cd* fr = frev.data() + (n - 1 - l);
        cd s = cdot_avx2(fr, g, l + 1);
        s -= 0.5 * (f[l] * g[0] + f[0] * g[l]);
        out[l] = h * s;
    }
}

void cmul_acc_avx2(const cd* a, const cd* b, cd* y, std::size_t n) {
    std::size_t i = 0;
    const double* pa = reinterpret_cast<const double*>(a);
    const double* pb = reinterpret_cast<const double*>(b);
    double* py = reinterpret_cast<double*>(y);
    for (; i + 2 <= n; i += 2) {
        __m256d va = _mm256_loadu_pd(pa + 2 * i);
        __m256d vb = _mm256_loadu_pd(pb + 2 * i);
        __m256d vy = _mm256_loadu_pd(py + 2 * i);
        _mm256_storeu_pd(py + 2 * i, _mm256_add_pd(vy, cmul4(va, vb)));
    }
    for (; i < n; ++i) y[i] += a[i] * b[i];
}

#else  // non-x86 build: fall back to scalar so the symbols still exist.

cd cdot_avx2(const cd* a, const cd* b, std::size_t n) { return cdot_scalar(a, b, n); }
void conv_trapezoid_avx2(const cd* f, const cd* g, cd* out, std::size_t n, double h) {
    conv_trapezoid_scalar(f, g, out, n, h);
}
void cmul_acc_avx2(const cd* a, const cd* b, cd* y, std::size_t n) {
    cmul_acc_scalar(a, b, y, n);
}

#endif

}  // namespace sps2::kernels::detail
