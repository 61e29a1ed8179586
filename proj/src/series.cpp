#include "sps2/series.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sps2 {

namespace {
constexpr double kPi = std::numbers::pi;
}

ArcSpec ArcSpec::widened() const {
    ArcSpec a;
    a.theta_minus = theta_minus - kPi / 2;
    a.theta_plus = theta_plus + kPi / 2;
    return a;
}

XSeries::XSeries(int trunc_order, double radius) : radius_(radius) {
    if (trunc_order < 0) throw StructuralError("XSeries: negative truncation order");
    if (!(radius > 0.0)) throw StructuralError("XSeries: radius must be positive");
    c_.assign(static_cast<std::size_t>(trunc_order) + 1, cd{0.0, 0.0});
}

XSeries XSeries::constant(cd value, int trunc_order, double radius) {
    XSeries f(trunc_order, radius);
    f.c_[0] = value;
    return f;
}

void XSeries::set_radius(double r) {
    if (!(r > 0.0)) throw StructuralError("XSeries: radius must be positive");
    radius_ = r;
}

cd XSeries::eval(cd x) const {
    cd acc{0.0, 0.0};
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
    return acc;
}

double XSeries::coeff_norm() const {
    double m = 0.0;
    for (const cd& v : c_) m = std::max(m, std::abs(v));
    return m;
}

double XSeries::sup_norm() const {
    if (coeff_norm() == 0.0) return 0.0;
    const int npts = 64;
    double r = 0.9 * radius_;
    double m = 0.0;
    for (int j = 0; j < npts; ++j) {
        double phi = 2 * kPi * j / npts;
        m = std::max(m, std::abs(eval(std::polar(r, phi))));
    }
    return m;
}

void XSeries::check_compatible(const XSeries& a, const XSeries& b) {
    if (a.trunc_order() != b.trunc_order())
        throw StructuralError("XSeries: mismatched truncation orders");
}

XSeries operator+(const XSeries& a, const XSeries& b) {
    XSeries::check_compatible(a, b);
    XSeries r(a.trunc_order(), std::min(a.radius_, b.radius_));
    for (std::size_t i = 0; i < r.c_.size(); ++i) r.c_[i] = a.c_[i] + b.c_[i];
    return r;
}

XSeries operator-(const XSeries& a, const XSeries& b) {
    XSeries::check_compatible(a, b);
    XSeries r(a.trunc_order(), std::min(a.radius_, b.radius_));
    for (std::size_t i = 0; i < r.c_.size(); ++i) r.c_[i] = a.c_[i] - b.c_[i];
    return r;
}

XSeries XSeries::operator-() const {
    XSeries r = *this;
    for (cd& v : r.c_) v = -v;
    return r;
}

XSeries operator*(cd s, const XSeries& a) {
    XSeries r = a;
    for (cd& v : r.c_) v = s * v;
    return r;
}

XSeries operator*(const XSeries& a, const XSeries& b) {
    XSeries::check_compatible(a, b);
    XSeries r(a.trunc_order(), std::min(a.radius_, b.radius_));
    const int N = a.trunc_order();
    for (int n = 0; n <= N; ++n) {
        cd s{0.0, 0.0};
        for (int i = 0; i <= n; ++i) s += a.c_[static_cast<std::size_t>(i)] * b.c_[static_cast<std::size_t>(n - i)];
        r.c_[static_cast<std::size_t>(n)] = s;
    }
    return r;
}

XSeries XSeries::euler_derivative() const {
    XSeries r = *this;
    for (int n = 0; n <= trunc_order(); ++n) r.c_[static_cast<std::size_t>(n)] *= static_cast<double>(n);
    return r;
}

XSeries XSeries::shift_up() const {
    XSeries r(trunc_order(), radius_);
    for (int n = trunc_order(); n >= 1; --n) r.c_[static_cast<std::size_t>(n)] = c_[static_cast<std::size_t>(n - 1)];
    r.c_[0] = cd{0.0, 0.0};
    return r;
}

XSeries XSeries::shift_down() const {
    double scale = std::max(coeff_norm(), 1.0);
    if (std::abs(c_[0]) > 1e-10 * scale)
        throw StructuralError("XSeries: division by x of a series with nonzero constant term");
    XSeries r(trunc_order(), radius_);
    for (int n = 0; n < trunc_order(); ++n) r.c_[static_cast<std::size_t>(n)] = c_[static_cast<std::size_t>(n + 1)];
    r.c_[static_cast<std::size_t>(trunc_order())] = cd{0.0, 0.0};
    return r;
}

XSeries XSeries::antiderivative() const {
    XSeries r(trunc_order(), radius_);
    for (int n = trunc_order(); n >= 1; --n)
        r.c_[static_cast<std::size_t>(n)] = c_[static_cast<std::size_t>(n - 1)] / static_cast<double>(n);
    r.c_[0] = cd{0.0, 0.0};
    return r;
}

XSeries XSeries::inverse() const {
    if (std::abs(c_[0]) == 0.0) throw StructuralError("XSeries: inverse of series vanishing at 0");
    XSeries r = XSeries::constant(1.0 / c_[0], trunc_order(), radius_);
    XSeries two = XSeries::constant(2.0, trunc_order(), radius_);
    int iters = 2;
    while ((1 << iters) <= trunc_order() + 1) ++iters;
    for (int i = 0; i <= iters; ++i) r = r * (two - *this * r);
    return r;
}

XSeries XSeries::exp() const {
    // E' = S' E order by order; constant term handled separately.
    const int N = trunc_order();
    XSeries e(N, radius_);
    e.c_[0] = std::exp(c_[0]);
    for (int n = 1; n <= N; ++n) {
        cd s{0.0, 0.0};
        for (int k = 1; k <= n; ++k)
            s += static_cast<double>(k) * c_[static_cast<std::size_t>(k)] * e.c_[static_cast<std::size_t>(n - k)];
        e.c_[static_cast<std::size_t>(n)] = s / static_cast<double>(n);
    }
    return e;
}

EpsExpansion::EpsExpansion(int eps_order, int x_order, double radius, ArcSpec arc) : arc_(arc) {
    if (eps_order < 0) throw StructuralError("EpsExpansion: negative eps order");
    o_.assign(static_cast<std::size_t>(eps_order) + 1, XSeries(x_order, radius));
}

EpsExpansion EpsExpansion::constant(cd value, int eps_order, int x_order, double radius, ArcSpec arc) {
    EpsExpansion f(eps_order, x_order, radius, arc);
    f.o_[0][0] = value;
    return f;
}

EpsExpansion EpsExpansion::from_x_series(const XSeries& f, int eps_order, ArcSpec arc) {
    EpsExpansion r(eps_order, f.trunc_order(), f.radius(), arc);
    r.o_[0] = f;
    return r;
}

cd EpsExpansion::eval(cd x, cd eps) const {
    cd acc{0.0, 0.0};
    for (auto it = o_.rbegin(); it != o_.rend(); ++it) acc = acc * eps + it->eval(x);
    return acc;
}

std::vector<cd> EpsExpansion::eval_x(cd x0) const {
    std::vector<cd> r(o_.size());
    for (std::size_t k = 0; k < o_.size(); ++k) r[k] = o_[k].eval(x0);
    return r;
}

double EpsExpansion::coeff_norm() const {
    double m = 0.0;
    for (const XSeries& f : o_) m = std::max(m, f.coeff_norm());
    return m;
}

void EpsExpansion::check_compatible(const EpsExpansion& a, const EpsExpansion& b) {
    if (a.eps_order() != b.eps_order() || a.x_order() != b.x_order())
        throw StructuralError("EpsExpansion: mismatched truncation orders");
    if (!(a.arc_ == b.arc_)) throw StructuralError("EpsExpansion: mismatched arcs");
}

EpsExpansion operator+(const EpsExpansion& a, const EpsExpansion& b) {
    EpsExpansion::check_compatible(a, b);
    EpsExpansion r = a;
    for (std::size_t k = 0; k < r.o_.size(); ++k) r.o_[k] = a.o_[k] + b.o_[k];
    return r;
}

EpsExpansion operator-(const EpsExpansion& a, const EpsExpansion& b) {
    EpsExpansion::check_compatible(a, b);
    EpsExpansion r = a;
    for (std::size_t k = 0; k < r.o_.size(); ++k) r.o_[k] = a.o_[k] - b.o_[k];
    return r;
}

EpsExpansion EpsExpansion::operator-() const {
    EpsExpansion r = *this;
    for (XSeries& f : r.o_) f = -f;
    return r;
}

EpsExpansion operator*(cd s, const EpsExpansion& a) {
    EpsExpansion r = a;
    for (XSeries& f : r.o_) f = s * f;
    return r;
}

EpsExpansion operator*(const EpsExpansion& a, const EpsExpansion& b) {
    EpsExpansion::check_compatible(a, b);
    EpsExpansion r(a.eps_order(), a.x_order(), std::min(a.radius(), b.radius()), a.arc_);
    const int K = a.eps_order();
    for (int k = 0; k <= K; ++k) {
        XSeries s(a.x_order(), std::min(a.radius(), b.radius()));
        for (int i = 0; i <= k; ++i) s += a.o_[static_cast<std::size_t>(i)] * b.o_[static_cast<std::size_t>(k - i)];
        r.o_[static_cast<std::size_t>(k)] = s;
    }
    return r;
}

EpsExpansion EpsExpansion::euler_derivative() const {
    EpsExpansion r = *this;
    for (XSeries& f : r.o_) f = f.euler_derivative();
    return r;
}

EpsExpansion EpsExpansion::eps_shift_up() const {
    EpsExpansion r(eps_order(), x_order(), radius(), arc_);
    for (int k = eps_order(); k >= 1; --k) r.o_[static_cast<std::size_t>(k)] = o_[static_cast<std::size_t>(k - 1)];
    return r;
}

EpsExpansion EpsExpansion::eps_shift_down() const {
    double scale = std::max(coeff_norm(), 1.0);
    if (o_[0].coeff_norm() > 1e-10 * scale)
        throw StructuralError("EpsExpansion: division by eps of an expansion with nonzero order 0");
    EpsExpansion r(eps_order(), x_order(), radius(), arc_);
    for (int k = 0; k < eps_order(); ++k) r.o_[static_cast<std::size_t>(k)] = o_[static_cast<std::size_t>(k + 1)];
    return r;
}

EpsExpansion EpsExpansion::inverse() const {
    if (std::abs(o_[0][0]) == 0.0)
        throw StructuralError("EpsExpansion: inverse of expansion vanishing at the origin");
    EpsExpansion r = EpsExpansion::constant(1.0 / o_[0][0], eps_order(), x_order(), radius(), arc_);
    EpsExpansion two = EpsExpansion::constant(2.0, eps_order(), x_order(), radius(), arc_);
    int iters = 2;
    int dim = (eps_order() + 1) * (x_order() + 1);
    while ((1 << iters) <= dim) ++iters;
    for (int i = 0; i <= iters; ++i) r = r * (two - *this * r);
    return r;
}

GevreyFit fit_gevrey(const std::vector<double>& sups) {
    // Least squares of log(sup_k / k!) = log C + k log M over nonzero entries,
    // then C raised to the least value making the bound hold at every k.
    std::vector<std::pair<double, double>> pts;
    double lfact = 0.0;
    for (std::size_t k = 0; k < sups.size(); ++k) {
        if (k > 0) lfact += std::log(static_cast<double>(k));
        if (sups[k] > 0.0) pts.emplace_back(static_cast<double>(k), std::log(sups[k]) - lfact);
    }
    if (pts.empty()) return GevreyFit{0.0, 1.0};
    double logM = 0.0, logC = pts[0].second;
    if (pts.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (auto& [x, y] : pts) {
            sx += x; sy += y; sxx += x * x; sxy += x * y;
        }
        double n = static_cast<double>(pts.size());
        double denom = n * sxx - sx * sx;
        logM = (n * sxy - sx * sy) / denom;
        logC = (sy - logM * sx) / n;
    }
    // enforce the bound: C = max_k sup_k / (M^k k!)
    double logC_needed = -1e300;
    for (auto& [x, y] : pts) logC_needed = std::max(logC_needed, y - logM * x);
    logC = std::max(logC, logC_needed);
    return GevreyFit{std::exp(logC), std::exp(logM)};
}

GevreyFit fit_gevrey(const EpsExpansion& f) {
    std::vector<double> sups(static_cast<std::size_t>(f.eps_order()) + 1);
    for (int k = 0; k <= f.eps_order(); ++k) sups[static_cast<std::size_t>(k)] = f.order(k).sup_norm();
    return fit_gevrey(sups);
}

GevreyFit fit_geometric(const std::vector<double>& values) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < values.size(); ++k)
        if (values[k] > 0.0) pts.emplace_back(static_cast<double>(k), std::log(values[k]));
    if (pts.empty()) return GevreyFit{0.0, 1.0};
    double logM = 0.0, logC = pts[0].second;
    if (pts.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (auto& [x, y] : pts) {
            sx += x; sy += y; sxx += x * x; sxy += x * y;
        }
        double n = static_cast<double>(pts.size());
        logM = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        logC = (sy - logM * sx) / n;
    }
    double logC_needed = -1e300;
    for (auto& [x, y] : pts) logC_needed = std::max(logC_needed, y - logM * x);
    logC = std::max(logC, logC_needed);
    return GevreyFit{std::exp(logC), std::exp(logM)};
}

}  // namespace sps2
