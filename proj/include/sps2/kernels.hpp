#pragma once

#include <complex>
#include <cstddef>

// Low-level dense complex kernels used by the convolution-heavy parts of the
// resummation pipeline.  Each kernel has a scalar reference implementation
// and an AVX2 variant; the active one is chosen at load time from CPUID and
// can be overridden (for equivalence testing) via force_isa().

namespace sps2::kernels {

using cd = std::complex<double>;

enum class Isa { scalar, avx2 };

// Currently active instruction set.
Isa active_isa();

// True when the AVX2 variants are usable on this CPU.
bool avx2_available();

// Override the dispatch choice.  Requesting avx2 on a CPU without it is a
// no-op.  Used by tests; not thread safe.
void force_isa(Isa isa);

// out[l] = h * sum''_{p=0..l} f[l-p] * g[p]   for l = 0..n-1,
// where sum'' is the trapezoid sum (first and last term halved; the l = 0
// entry is 0).  This is the discrete convolution of two ray samples.
void conv_trapezoid(const cd* f, const cd* g, cd* out, std::size_t n, double h);

// y[i] += a[i] * b[i]  (pointwise complex multiply-accumulate).
void cmul_acc(const cd* a, const cd* b, cd* y, std::size_t n);

// Complex dot product sum_{i<n} a[i]*b[i] (no conjugation).
cd cdot(const cd* a, const cd* b, std::size_t n);

namespace detail {
void conv_trapezoid_scalar(const cd* f, const cd* g, cd* out, std::size_t n, double h);
void cmul_acc_scalar(const cd* a, const cd* b, cd* y, std::size_t n);
cd cdot_scalar(const cd* a, const cd* b, std::size_t n);
void conv_trapezoid_avx2(const cd* f, const cd* g, cd* out, std::size_t n, double h);
void cmul_acc_avx2(const cd* a, const cd* b, cd* y, std::size_t n);
cd cdot_avx2(const cd* a, const cd* b, std::size_t n);
}  // namespace detail

}  // namespace sps2::kernels
