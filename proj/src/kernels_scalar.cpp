#include "sps2/kernels.hpp"

#include <vector>

namespace sps2::kernels::detail {

cd cdot_scalar(const cd* a, const cd* b, std::size_t n) {
    cd acc{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void conv_trapezoid_scalar(const cd* f, const cd* g, cd* out, std::size_t n, double h) {
    if (n == 0) return;
    out[0] = cd{0.0, 0.0};
    // frev[i] = f[n-1-i] so that the inner correlation becomes a contiguous dot.
    std::vector<cd> frev(n);
    for (std::size_t i = 0; i < n; ++i) frev[i] = f[n - 1 - i];
    for (std::size_t l = 1; l < n; ++l) {
        const cd* fr = frev.data() + (n - 1 - l);
        cd s = cdot_scalar(fr, g, l + 1);
        s -= 0.5 * (f[l] * g[0] + f[0] * g[l]);
        out[l] = h * s;
    }
}

void cmul_acc_scalar(const cd* a, const cd* b, cd* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a[i] * b[i];
}

}  // namespace sps2::kernels::detail
