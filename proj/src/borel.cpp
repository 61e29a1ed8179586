#include "sps2/borel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sps2/kernels.hpp"

namespace sps2 {

namespace {

constexpr double kPi = std::numbers::pi;

double lfact(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

double sup_abs(const std::vector<cd>& v) {
    double m = 0.0;
    for (const cd& c : v) m = std::max(m, std::abs(c));
    return m;
}

// Cumulative trapezoid integral F[l] = h * sum''_{p<=l} v[p].
std::vector<cd> prefix_trapezoid(const std::vector<cd>& v, double h) {
    std::vector<cd> F(v.size(), cd{0.0, 0.0});
    cd run{0.0, 0.0};
    for (std::size_t l = 1; l < v.size(); ++l) {
        run += 0.5 * (v[l - 1] + v[l]);
        F[l] = h * run;
    }
    return F;
}

// Taylor-part convolution with the factorial rule
// (f*g)_n = sum_{i+j=n-1} f_i g_j i! j! / n!.
std::vector<cd> conv_taylor(const std::vector<cd>& f, const std::vector<cd>& g) {
    std::size_t n = std::max(f.size(), g.size());
    std::vector<cd> out(n, cd{0.0, 0.0});
    for (std::size_t k = 1; k < n; ++k) {
        cd s{0.0, 0.0};
        for (std::size_t i = 0; i < f.size() && i <= k - 1; ++i) {
            std::size_t j = k - 1 - i;
            if (j >= g.size()) continue;
            double w = std::exp(lfact(static_cast<int>(i)) + lfact(static_cast<int>(j)) -
                                lfact(static_cast<int>(k)));
            s += f[i] * g[j] * w;
        }
        out[k] = s;
    }
    return out;
}

std::vector<cd> integrate_taylor(const std::vector<cd>& f) {
    std::vector<cd> out(f.size(), cd{0.0, 0.0});
    for (std::size_t j = 0; j + 1 < f.size(); ++j) out[j + 1] = f[j] / static_cast<double>(j + 1);
    return out;
}

void check_match(const BorelFunction& a, const BorelFunction& b) {
    if (a.step != b.step) throw StructuralError("BorelFunction: step mismatch");
    if (a.theta != b.theta) throw StructuralError("BorelFunction: direction mismatch");
    if (a.grid.size() != b.grid.size()) throw StructuralError("BorelFunction: grid length mismatch");
}

// Moments int_0^T t^k e^{-R t} dt for k = 0, 1, 2, stable for small |R T|.
struct Moments {
    cd I0, I1, I2;
};
Moments exp_moments(cd R, double T) {
    cd y = R * T;
    Moments m;
    if (std::abs(y) < 1e-3) {
        m.I0 = T * (1.0 - y / 2.0 + y * y / 6.0 - y * y * y / 24.0);
        m.I1 = T * T * (0.5 - y / 3.0 + y * y / 8.0 - y * y * y / 30.0);
        m.I2 = T * T * T * (1.0 / 3.0 - y / 4.0 + y * y / 10.0 - y * y * y / 36.0);
    } else {
        cd E = std::exp(-y);
        m.I0 = (1.0 - E) / R;
        m.I1 = (1.0 - (1.0 + y) * E) / (R * R);
        m.I2 = (2.0 - (2.0 + 2.0 * y + y * y) * E) / (R * R * R);
    }
    return m;
}

// Complex Gaussian elimination with partial pivoting, in-place solve of
// A x = b for small dense systems.
std::vector<cd> solve_dense(std::vector<std::vector<cd>> A, std::vector<cd> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        if (std::abs(A[piv][col]) < 1e-300) throw NumericalError("solve_dense: singular system");
        std::swap(A[piv], A[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            cd f = A[r][col] / A[col][col];
            for (std::size_t c = col; c < n; ++c) A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<cd> x(n);
    for (std::size_t ri = n; ri-- > 0;) {
        cd s = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) s -= A[ri][c] * x[c];
        x[ri] = s / A[ri][ri];
    }
    return x;
}

// Durand-Kerner roots of a polynomial with coefficients c[0] + c[1] z + ...
std::vector<cd> poly_roots(const std::vector<cd>& c) {
    int deg = static_cast<int>(c.size()) - 1;
    while (deg > 0 && std::abs(c[static_cast<std::size_t>(deg)]) < 1e-300) --deg;
    if (deg <= 0) return {};
    std::vector<cd> a(c.begin(), c.begin() + deg + 1);
    cd lead = a[static_cast<std::size_t>(deg)];
    for (cd& v : a) v /= lead;
    std::vector<cd> r(static_cast<std::size_t>(deg));
    cd seed{0.4, 0.9};
    cd cur{1.0, 0.0};
    for (auto& root : r) {
        cur *= seed;
        root = cur;
    }
    auto eval = [&](cd z) {
        cd acc{0.0, 0.0};
        for (int i = deg; i >= 0; --i) acc = acc * z + a[static_cast<std::size_t>(i)];
        return acc;
    };
    for (int it = 0; it < 400; ++it) {
        double move = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            cd denom{1.0, 0.0};
            for (std::size_t j = 0; j < r.size(); ++j)
                if (j != i) denom *= (r[i] - r[j]);
            cd delta = eval(r[i]) / denom;
            r[i] -= delta;
            move = std::max(move, std::abs(delta));
        }
        if (move < 1e-14) break;
    }
    return r;
}

}  // namespace

ExpFit fit_exponential(const std::vector<cd>& samples, double step) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t j = samples.size() / 2; j < samples.size(); ++j) {
        double a = std::abs(samples[j]);
        if (a > 1e-300) pts.emplace_back(step * static_cast<double>(j), std::log(a));
    }
    ExpFit fit;
    if (pts.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (auto& [x, y] : pts) {
            sx += x; sy += y; sxx += x * x; sxy += x * y;
        }
        double n = static_cast<double>(pts.size());
        double denom = n * sxx - sx * sx;
        if (denom > 0) {
            fit.C2 = (n * sxy - sx * sy) / denom;
            fit.C1 = std::exp((sy - fit.C2 * sx) / n);
        }
    }
    if (fit.C2 < 0.0) fit.C2 = 0.0;  // keep the tail bound conservative
    double c1 = fit.C1;
    for (std::size_t j = 0; j < samples.size(); ++j) {
        double a = std::abs(samples[j]);
        if (a > 0.0) c1 = std::max(c1, a * std::exp(-fit.C2 * step * static_cast<double>(j)));
    }
    fit.C1 = c1;
    return fit;
}

BorelFunction borel_from_taylor(std::vector<cd> taylor, double theta, double step, double xi_max) {
    if (!(step > 0.0) || !(xi_max > 0.0)) throw StructuralError("BorelFunction: bad grid");
    BorelFunction f;
    f.theta = theta;
    f.step = step;
    f.taylor = std::move(taylor);
    std::size_t n = static_cast<std::size_t>(std::lround(xi_max / step)) + 1;
    f.grid.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        double xi = step * static_cast<double>(j);
        cd acc{0.0, 0.0};
        for (auto it = f.taylor.rbegin(); it != f.taylor.rend(); ++it) acc = acc * xi + *it;
        f.grid[j] = acc;
    }
    f.fit = fit_exponential(f.grid, step);
    return f;
}

BorelFunction formal_borel(const std::vector<cd>& a, double theta, double step, double xi_max) {
    double scale = 1.0;
    for (const cd& v : a) scale = std::max(scale, std::abs(v));
    if (!a.empty() && std::abs(a[0]) > 1e-12 * scale)
        throw HypothesisError("formal_borel: nonzero constant term");
    std::vector<cd> taylor;
    if (a.size() > 1) {
        taylor.resize(a.size() - 1);
        for (std::size_t j = 0; j + 1 < a.size(); ++j)
            taylor[j] = a[j + 1] * std::polar(1.0, theta * static_cast<double>(j)) /
                        std::exp(lfact(static_cast<int>(j)));
    } else {
        taylor = {cd{0.0, 0.0}};
    }
    return borel_from_taylor(std::move(taylor), theta, step, xi_max);
}

BorelFunction convolve(const BorelFunction& f, const BorelFunction& g) {
    check_match(f, g);
    BorelFunction out;
    out.theta = f.theta;
    out.step = f.step;
    out.grid.resize(f.grid.size());
    kernels::conv_trapezoid(f.grid.data(), g.grid.data(), out.grid.data(), f.grid.size(), f.step);
    out.taylor = conv_taylor(f.taylor, g.taylor);
    out.fit = fit_exponential(out.grid, out.step);
    return out;
}

BorelOdeResult solve_borel_ode(const BorelFunction& a0, const BorelFunction& a1,
                               const BorelFunction& a2, cd u1, cd u2, bool keep_terms) {
    check_match(a0, a1);
    check_match(a0, a2);
    const std::size_t n = a0.grid.size();
    const double h = a0.step;
    const std::size_t nt = std::max<std::size_t>(a0.taylor.size(), 16);

    auto conv_row = [&](const std::vector<cd>& f, const std::vector<cd>& g) {
        std::vector<cd> out(n);
        kernels::conv_trapezoid(f.data(), g.data(), out.data(), n, h);
        return out;
    };

    std::vector<std::vector<cd>> terms;        // grids of sigma_k
    std::vector<std::vector<cd>> terms_taylor;  // taylor parts
    std::vector<double> sups;
    std::vector<std::vector<cd>> Q;        // Q[m] = sum_{i+j=m} sigma_i * sigma_j (grid)
    std::vector<std::vector<cd>> Q_taylor;

    auto pad_taylor = [&](std::vector<cd> v) {
        v.resize(nt, cd{0.0, 0.0});
        return v;
    };

    std::vector<cd> sigma(n, cd{0.0, 0.0});
    std::vector<cd> sigma_taylor(nt, cd{0.0, 0.0});

    terms.push_back(std::vector<cd>(n, cd{0.0, 0.0}));  // sigma_0 = 0
    terms_taylor.push_back(std::vector<cd>(nt, cd{0.0, 0.0}));
    sups.push_back(0.0);
    Q.push_back(std::vector<cd>(n, cd{0.0, 0.0}));
    Q_taylor.push_back(std::vector<cd>(nt, cd{0.0, 0.0}));
    Q.push_back(std::vector<cd>(n, cd{0.0, 0.0}));  // Q[1] = 0
    Q_taylor.push_back(std::vector<cd>(nt, cd{0.0, 0.0}));

    const std::vector<cd> a0t = pad_taylor(a0.taylor), a1t = pad_taylor(a1.taylor),
                          a2t = pad_taylor(a2.taylor);

    int kmax = 128;
    bool converged = false;
    int small_run = 0;  // sources enter with lags up to 3, so one tiny term is not convergence
    for (int k = 1; k <= kmax; ++k) {
        std::vector<cd> rhs(n, cd{0.0, 0.0});
        std::vector<cd> rhs_t(nt, cd{0.0, 0.0});
        if (k == 1) {
            rhs = a0.grid;
            rhs_t = a0t;
        } else {
            const auto& prev = terms[static_cast<std::size_t>(k - 1)];
            for (std::size_t j = 0; j < n; ++j) rhs[j] = u1 * prev[j];
            for (std::size_t j = 0; j < nt; ++j)
                rhs_t[j] = u1 * terms_taylor[static_cast<std::size_t>(k - 1)][j];
            if (k >= 3) {
                auto c = conv_row(a1.grid, terms[static_cast<std::size_t>(k - 2)]);
                for (std::size_t j = 0; j < n; ++j) rhs[j] += c[j];
                auto ct = conv_taylor(a1t, terms_taylor[static_cast<std::size_t>(k - 2)]);
                for (std::size_t j = 0; j < nt; ++j) rhs_t[j] += ct[j];
            }
            // extend pair sums up to index k - 2
            while (Q.size() <= static_cast<std::size_t>(k - 2)) {
                std::size_t m = Q.size();
                std::vector<cd> q(n, cd{0.0, 0.0});
                std::vector<cd> qt(nt, cd{0.0, 0.0});
                for (std::size_t i = 1; i <= m - i; ++i) {
                    std::size_t j = m - i;
                    if (j >= terms.size()) continue;
                    if (sups[i] * sups[j] < 1e-18) continue;
                    auto c = conv_row(terms[i], terms[j]);
                    auto ct = conv_taylor(terms_taylor[i], terms_taylor[j]);
                    double w = (i == j) ? 1.0 : 2.0;
                    for (std::size_t l = 0; l < n; ++l) q[l] += w * c[l];
                    for (std::size_t l = 0; l < nt; ++l) qt[l] += w * ct[l];
                }
                Q.push_back(std::move(q));
                Q_taylor.push_back(std::move(qt));
            }
            if (k >= 4) {
                const auto& q = Q[static_cast<std::size_t>(k - 2)];
                for (std::size_t j = 0; j < n; ++j) rhs[j] += u2 * q[j];
                const auto& qt = Q_taylor[static_cast<std::size_t>(k - 2)];
                for (std::size_t j = 0; j < nt; ++j) rhs_t[j] += u2 * qt[j];
            }
            if (k >= 5) {
                auto c = conv_row(a2.grid, Q[static_cast<std::size_t>(k - 3)]);
                for (std::size_t j = 0; j < n; ++j) rhs[j] += c[j];
                auto ct = conv_taylor(a2t, Q_taylor[static_cast<std::size_t>(k - 3)]);
                for (std::size_t j = 0; j < nt; ++j) rhs_t[j] += ct[j];
            }
        }
        std::vector<cd> term = prefix_trapezoid(rhs, h);
        std::vector<cd> term_t = integrate_taylor(rhs_t);
        double s = sup_abs(term);
        terms.push_back(term);
        terms_taylor.push_back(term_t);
        sups.push_back(s);
        for (std::size_t j = 0; j < n; ++j) sigma[j] += term[j];
        for (std::size_t j = 0; j < nt; ++j) sigma_taylor[j] += term_t[j];
        double scale = std::max(1.0, sup_abs(sigma));
        if (s > 1e40) throw DivergenceError("solve_borel_ode: term series diverges at n = " + std::to_string(k));
        small_run = (s < 1e-12 * scale) ? small_run + 1 : 0;
        if (small_run >= 3) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw DivergenceError("solve_borel_ode: no convergence in 128 terms (last sup = " +
                              std::to_string(sups.back()) + ")");

    BorelOdeResult out;
    out.sigma.theta = a0.theta;
    out.sigma.step = h;
    out.sigma.grid = sigma;
    out.sigma.taylor = sigma_taylor;
    out.sigma.fit = fit_exponential(sigma, h);
    out.terms = static_cast<int>(terms.size()) - 1;
    if (keep_terms) out.term_grids = terms;

    // Residual of the integral equation.
    std::vector<cd> rhs(n);
    auto ss = conv_row(sigma, sigma);
    auto a1s = conv_row(a1.grid, sigma);
    auto a2ss = conv_row(a2.grid, ss);
    for (std::size_t j = 0; j < n; ++j)
        rhs[j] = a0.grid[j] + u1 * sigma[j] + a1s[j] + u2 * ss[j] + a2ss[j];
    auto F = prefix_trapezoid(rhs, h);
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j) r = std::max(r, std::abs(F[j] - sigma[j]));
    out.residual = r;
    return out;
}

LaplaceResult laplace_samples(const cd* f, std::size_t n, double step, double theta, cd eps,
                              const ExpFit& fit) {
    if (n < 3) throw StructuralError("laplace: too few samples");
    cd R = std::polar(1.0, theta) / eps;
    double Rre = R.real();
    if (!(Rre > fit.C2 + 0.5))
        throw DomainError("laplace: eps outside the convergence sector (Re(e^{i theta}/eps) = " +
                          std::to_string(Rre) + " needs > " + std::to_string(fit.C2 + 0.5) + ")");
    cd total{0.0, 0.0};
    std::size_t j = 0;
    // Piecewise-parabolic product quadrature: weight e^{-R xi} exact per panel.
    while (j + 2 < n) {
        double xi = step * static_cast<double>(j);
        cd damp = std::exp(-R * xi);
        if (std::abs(damp) < 1e-300) break;
        Moments m = exp_moments(R, 2.0 * step);
        cd g0 = f[j], d1 = f[j + 1] - f[j], d2 = f[j + 2] - 2.0 * f[j + 1] + f[j];
        cd panel = g0 * m.I0 + (d1 / step) * m.I1 + d2 / (2.0 * step * step) * (m.I2 - step * m.I1);
        total += damp * panel;
        j += 2;
    }
    if (j + 1 < n) {  // one trailing interval, linear rule
        double xi = step * static_cast<double>(j);
        cd damp = std::exp(-R * xi);
        if (std::abs(damp) > 1e-300) {
            Moments m = exp_moments(R, step);
            total += damp * (f[j] * m.I0 + (f[j + 1] - f[j]) / step * m.I1);
        }
    }
    LaplaceResult out;
    out.value = std::polar(1.0, theta) * total;
    double Xi = step * static_cast<double>(n - 1);
    out.tail_bound = fit.C1 * std::exp((fit.C2 - Rre) * Xi) / (Rre - fit.C2);
    return out;
}

LaplaceResult laplace(const BorelFunction& f, cd eps) {
    ExpFit fit = f.fit ? *f.fit : fit_exponential(f.grid, f.step);
    return laplace_samples(f.grid.data(), f.grid.size(), f.step, f.theta, eps, fit);
}

StripInputs prepare_strip_inputs(const RiccatiProblem& p, const EpsExpansion& s_formal,
                                 double theta) {
    StripInputs in;
    in.theta = theta;
    in.b0 = p.b.order(0);
    const int K = s_formal.eps_order();
    const ArcSpec arc = p.arc;
    EpsExpansion S1 = EpsExpansion::from_x_series(s_formal.order(1), K, arc);
    EpsExpansion S1d = EpsExpansion::from_x_series(s_formal.order(1).euler_derivative(), K, arc);
    in.A0 = p.a + (p.b * S1).eps_shift_up() + (p.c * S1 * S1).eps_shift_up().eps_shift_up() -
            S1d.eps_shift_up().eps_shift_up();
    in.U1 = p.b - EpsExpansion::from_x_series(p.b.order(0), K, arc) +
            (2.0 * (p.c * S1)).eps_shift_up();
    in.U2 = p.c;
    return in;
}

cd strip_period(const StripInputs& in) {
    return cd{0.0, 2.0 * kPi} * std::polar(1.0, -in.theta) * in.b0[0];
}

StripProblem straighten(const StripInputs& in, cd x0, double h, double xi_max, cd z_offset) {
    StripProblem p;
    p.theta = in.theta;
    p.h = h;
    p.delta = h;
    p.rho = in.b0[0];
    cd phase = std::polar(1.0, in.theta);
    p.w = (phase * p.rho).real();
    if (!(p.w < 0.0))
        throw ResonanceError("straighten: Re(e^{i theta} rho) = " + std::to_string(p.w) +
                             " must be negative");
    p.w0 = kPi * std::abs(p.w) * 1.25 + 1e-3;
    p.x0 = x0;

    // Normalising coordinate xtilde = x exp(S), S_n = b0_n/(rho n).
    const int N = in.b0.trunc_order();
    XSeries S(N, in.b0.radius());
    for (int k = 1; k <= N; ++k) S[k] = in.b0[k] / (p.rho * static_cast<double>(k));
    XSeries E = S.exp();            // xtilde / x
    XSeries Ed = E.euler_derivative();  // x E'(x) x... (coefficients n E_n)

    auto xtilde = [&](cd x) { return x * E.eval(x); };
    auto xtilde_prime = [&](cd x) {
        // d/dx (x E) = E + x E'
        cd e = E.eval(x);
        cd xep = Ed.eval(x);  // x E'(x)
        return e + xep;
    };

    cd w_inv = phase / p.rho;  // z = log(xtilde)/w_inv ... actually z = e^{-i th} rho log(xt)
    p.z0 = std::polar(1.0, -in.theta) * p.rho * std::log(xtilde(x0)) + z_offset;

    int nxi = static_cast<int>(std::lround(xi_max / h));
    p.nt = nxi + 8;

    p.x_nodes.resize(static_cast<std::size_t>(p.nt) + 1);
    cd guess = x0;
    for (int m = 0; m <= p.nt; ++m) {
        cd z = p.z0 + static_cast<double>(m) * h - z_offset;
        cd target = std::exp(w_inv * z);  // xtilde at this node
        cd x = guess;
        bool ok = false;
        for (int it = 0; it < 60; ++it) {
            cd fval = xtilde(x) - target;
            if (std::abs(fval) < 1e-14 * (std::abs(target) + 1e-30)) {
                ok = true;
                break;
            }
            x -= fval / xtilde_prime(x);
        }
        if (!ok) throw ConvergenceError("straighten: coordinate inversion failed at node " +
                                        std::to_string(m));
        if (std::abs(in.b0.eval(x)) < 1e-6 * std::abs(p.rho))
            throw ConvergenceError("straighten: b0 vanishes on the disc near |x| = " +
                                   std::to_string(std::abs(x)));
        p.x_nodes[static_cast<std::size_t>(m)] = x;
        guess = x;
    }
    p.b0_at_x0 = in.b0.eval(x0);

    const int K = in.A0.eps_order();
    cd ph2 = phase * phase, ph3 = ph2 * phase;
    p.v1.resize(p.x_nodes.size());
    p.v2.resize(p.x_nodes.size());
    p.beta0.resize(p.x_nodes.size());
    p.beta1.resize(p.x_nodes.size());
    p.beta2.resize(p.x_nodes.size());
    for (int m = 0; m <= p.nt; ++m) {
        cd x = p.x_nodes[static_cast<std::size_t>(m)];
        cd b0x = in.b0.eval(x);
        p.v1[static_cast<std::size_t>(m)] = phase * in.U1.order(1).eval(x) / b0x;
        p.v2[static_cast<std::size_t>(m)] = ph2 * in.U2.order(1).eval(x) / b0x;
        // alpha_i(x, zeta) = sum_j coeff_{j+2}(x) zeta^j / j!
        std::vector<cd> c0, c1, c2;
        for (int k = 2; k <= K; ++k) {
            double w = std::exp(-lfact(k - 2));
            c0.push_back(in.A0.order(k).eval(x) * w);
            c1.push_back(in.U1.order(k).eval(x) * w);
            c2.push_back(in.U2.order(k).eval(x) * w);
        }
        int len = p.nt + 1 - m;
        auto& r0 = p.beta0[static_cast<std::size_t>(m)];
        auto& r1 = p.beta1[static_cast<std::size_t>(m)];
        auto& r2 = p.beta2[static_cast<std::size_t>(m)];
        r0.resize(static_cast<std::size_t>(len));
        r1.resize(static_cast<std::size_t>(len));
        r2.resize(static_cast<std::size_t>(len));
        for (int l = 0; l < len; ++l) {
            cd zeta = phase * (h * static_cast<double>(l));
            cd a0v{0, 0}, a1v{0, 0}, a2v{0, 0};
            for (std::size_t q = c0.size(); q-- > 0;) {
                a0v = a0v * zeta + c0[q];
                a1v = a1v * zeta + c1[q];
                a2v = a2v * zeta + c2[q];
            }
            r0[static_cast<std::size_t>(l)] = phase * a0v / b0x;
            r1[static_cast<std::size_t>(l)] = ph2 * a1v / b0x;
            r2[static_cast<std::size_t>(l)] = ph3 * a2v / b0x;
        }
    }

    // Fundamental-estimate fit over the beta samples (sup over z per xi).
    std::vector<cd> env(static_cast<std::size_t>(p.nt) + 1, cd{0.0, 0.0});
    for (int m = 0; m <= p.nt; ++m)
        for (std::size_t l = 0; l < p.beta0[static_cast<std::size_t>(m)].size(); ++l) {
            double v = std::max({std::abs(p.beta0[static_cast<std::size_t>(m)][l]),
                                 std::abs(p.beta1[static_cast<std::size_t>(m)][l]),
                                 std::abs(p.beta2[static_cast<std::size_t>(m)][l])});
            if (v > std::abs(env[l])) env[l] = v;
        }
    ExpFit ef = fit_exponential(env, h);
    double vmax = 0.0;
    for (const cd& v : p.v1) vmax = std::max(vmax, std::abs(v));
    for (const cd& v : p.v2) vmax = std::max(vmax, std::abs(v));
    p.fitM = std::max(ef.C1, vmax);
    p.fitL = ef.C2;
    return p;
}

std::vector<std::vector<cd>> strip_integral_op(const std::vector<std::vector<cd>>& F, double h) {
    const int nt = static_cast<int>(F.size()) - 1;
    std::vector<std::vector<cd>> G(F.size());
    for (int m = 0; m <= nt; ++m) G[static_cast<std::size_t>(m)].assign(F[static_cast<std::size_t>(m)].size(), cd{0.0, 0.0});
    // Along each anti-diagonal d = m + l the integrand is S[p] = F[d-p][p].
    for (int d = 1; d <= nt; ++d) {
        cd run{0.0, 0.0};
        cd s_prev = F[static_cast<std::size_t>(d)][0];
        for (int l = 1; l <= d; ++l) {
            cd s_cur = F[static_cast<std::size_t>(d - l)][static_cast<std::size_t>(l)];
            run += 0.5 * (s_prev + s_cur);
            G[static_cast<std::size_t>(d - l)][static_cast<std::size_t>(l)] = -h * run;
            s_prev = s_cur;
        }
    }
    return G;
}

namespace {

std::vector<std::vector<cd>> tri_zero(int nt) {
    std::vector<std::vector<cd>> t(static_cast<std::size_t>(nt) + 1);
    for (int m = 0; m <= nt; ++m) t[static_cast<std::size_t>(m)].assign(static_cast<std::size_t>(nt + 1 - m), cd{0.0, 0.0});
    return t;
}

double tri_sup(const std::vector<std::vector<cd>>& t) {
    double s = 0.0;
    for (const auto& row : t)
        for (const cd& v : row) s = std::max(s, std::abs(v));
    return s;
}

void tri_conv_rows(const std::vector<std::vector<cd>>& a, const std::vector<std::vector<cd>>& b,
                   std::vector<std::vector<cd>>& out, double h, double weight) {
    for (std::size_t m = 0; m < a.size(); ++m) {
        std::size_t len = a[m].size();
        if (len == 0) continue;
        std::vector<cd> c(len);
        kernels::conv_trapezoid(a[m].data(), b[m].data(), c.data(), len, h);
        for (std::size_t l = 0; l < len; ++l) out[m][l] += weight * c[l];
    }
}

}  // namespace

std::vector<std::vector<cd>> strip_rhs(const StripProblem& p,
                                       const std::vector<std::vector<cd>>& tau) {
    std::vector<std::vector<cd>> rhs = p.beta0;
    for (std::size_t m = 0; m < rhs.size(); ++m)
        for (std::size_t l = 0; l < rhs[m].size(); ++l) rhs[m][l] += p.v1[m] * tau[m][l];
    tri_conv_rows(p.beta1, tau, rhs, p.h, 1.0);
    auto tt = tri_zero(p.nt);
    tri_conv_rows(tau, tau, tt, p.h, 1.0);
    for (std::size_t m = 0; m < rhs.size(); ++m)
        for (std::size_t l = 0; l < rhs[m].size(); ++l) rhs[m][l] += p.v2[m] * tt[m][l];
    tri_conv_rows(p.beta2, tt, rhs, p.h, 1.0);
    return rhs;
}

StripSolution solve_strip_pde(const StripProblem& p, bool keep_terms) {
    const int nt = p.nt;
    std::vector<std::vector<std::vector<cd>>> terms;  // tau_k triangles
    std::vector<double> sups;
    std::vector<std::vector<std::vector<cd>>> Q;  // pair sums
    terms.push_back(tri_zero(nt));  // tau_0
    sups.push_back(0.0);
    Q.push_back(tri_zero(nt));
    Q.push_back(tri_zero(nt));

    auto tau = tri_zero(nt);
    double pair_floor = 1e-18;
    bool converged = false;
    int small_run = 0;  // sources enter with lags up to 3, so one tiny term is not convergence
    int kmax = 128;
    for (int k = 1; k <= kmax; ++k) {
        std::vector<std::vector<cd>> rhs;
        if (k == 1) {
            rhs = p.beta0;
        } else {
            rhs = tri_zero(nt);
            const auto& prev = terms[static_cast<std::size_t>(k - 1)];
            for (std::size_t m = 0; m < rhs.size(); ++m)
                for (std::size_t l = 0; l < rhs[m].size(); ++l) rhs[m][l] = p.v1[m] * prev[m][l];
            if (k >= 3) tri_conv_rows(p.beta1, terms[static_cast<std::size_t>(k - 2)], rhs, p.h, 1.0);
            while (Q.size() <= static_cast<std::size_t>(k - 2)) {
                std::size_t mm = Q.size();
                auto q = tri_zero(nt);
                for (std::size_t i = 1; i <= mm - i; ++i) {
                    std::size_t j = mm - i;
                    if (j >= terms.size()) continue;
                    if (sups[i] * sups[j] < pair_floor) continue;
                    tri_conv_rows(terms[i], terms[j], q, p.h, (i == j) ? 1.0 : 2.0);
                }
                Q.push_back(std::move(q));
            }
            if (k >= 4) {
                const auto& q = Q[static_cast<std::size_t>(k - 2)];
                for (std::size_t m = 0; m < rhs.size(); ++m)
                    for (std::size_t l = 0; l < rhs[m].size(); ++l) rhs[m][l] += p.v2[m] * q[m][l];
            }
            if (k >= 5) tri_conv_rows(p.beta2, Q[static_cast<std::size_t>(k - 3)], rhs, p.h, 1.0);
        }
        auto term = strip_integral_op(rhs, p.h);
        double s = tri_sup(term);
        for (std::size_t m = 0; m < tau.size(); ++m)
            for (std::size_t l = 0; l < tau[m].size(); ++l) tau[m][l] += term[m][l];
        terms.push_back(std::move(term));
        sups.push_back(s);
        double scale = std::max(1.0, tri_sup(tau));
        if (s > 1e40) throw DivergenceError("solve_strip_pde: term series diverges at n = " + std::to_string(k));
        small_run = (s < 1e-12 * scale) ? small_run + 1 : 0;
        if (small_run >= 3) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw DivergenceError("solve_strip_pde: no convergence in 128 terms (last sup = " +
                              std::to_string(sups.back()) + ")");

    StripSolution out;
    out.tau = tau;
    out.terms = static_cast<int>(terms.size()) - 1;
    if (keep_terms) {
        for (const auto& t : terms) out.term_rows.push_back(t[0]);
        out.term_triangles = terms;
    }
    auto F = strip_integral_op(strip_rhs(p, tau), p.h);
    double r = 0.0;
    for (std::size_t m = 0; m < tau.size(); ++m)
        for (std::size_t l = 0; l < tau[m].size(); ++l)
            r = std::max(r, std::abs(F[m][l] - tau[m][l]));
    out.residual = r;
    return out;
}

PadeSumResult borel_pade_sum(const std::vector<cd>& a, cd eps, double theta, double xi_cap) {
    if (a.size() < 9) throw StructuralError("borel_pade_sum: needs at least 8 eps-orders");
    double scale = 0.0;
    for (const cd& v : a) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return {cd{0.0, 0.0}, 0.0};

    const int K = static_cast<int>(a.size()) - 1;
    std::vector<cd> b(static_cast<std::size_t>(K));  // rotated Borel coefficients
    for (int j = 0; j < K; ++j)
        b[static_cast<std::size_t>(j)] =
            a[static_cast<std::size_t>(j + 1)] * std::polar(1.0, theta * j) / std::exp(lfact(j));

    cd R = std::polar(1.0, theta) / eps;
    if (!(R.real() > 0.5))
        throw DomainError("borel_pade_sum: eps outside the sector of direction theta");
    double Xi = std::min(xi_cap, 40.0 / R.real());
    const double hq = 1.0 / 256;
    double tail_bound = 0.0;

    auto value_at = [&](int q) -> cd {
        int pdeg = K - 1 - q;
        std::vector<cd> qc(static_cast<std::size_t>(q) + 1, cd{0.0, 0.0});
        qc[0] = cd{1.0, 0.0};
        if (q > 0) {
            std::vector<std::vector<cd>> A(static_cast<std::size_t>(q),
                                           std::vector<cd>(static_cast<std::size_t>(q)));
            std::vector<cd> rhsv(static_cast<std::size_t>(q));
            for (int i = 1; i <= q; ++i) {
                for (int m = 1; m <= q; ++m) {
                    int idx = pdeg + i - m;
                    A[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(m - 1)] =
                        (idx >= 0 && idx < K) ? b[static_cast<std::size_t>(idx)] : cd{0.0, 0.0};
                }
                rhsv[static_cast<std::size_t>(i - 1)] = -b[static_cast<std::size_t>(pdeg + i)];
            }
            std::vector<cd> sol = solve_dense(A, rhsv);
            for (int m = 1; m <= q; ++m) qc[static_cast<std::size_t>(m)] = sol[static_cast<std::size_t>(m - 1)];
        }
        std::vector<cd> pc(static_cast<std::size_t>(pdeg) + 1, cd{0.0, 0.0});
        for (int n2 = 0; n2 <= pdeg; ++n2)
            for (int m = 0; m <= std::min(n2, q); ++m)
                pc[static_cast<std::size_t>(n2)] += qc[static_cast<std::size_t>(m)] * b[static_cast<std::size_t>(n2 - m)];

        // pole-on-ray guard; spurious (Froissart) poles of a degenerate Pade
        // table carry a near-zero residue and are harmless to the quadrature.
        // A genuine pole deep in the exponentially damped tail does not
        // obstruct the sum either: integrate up to it and charge the
        // discarded tail to the error estimate.
        double bscale = 0.0;
        for (const cd& v : b) bscale = std::max(bscale, std::abs(v));
        double Xi_use = Xi;
        for (cd root : poly_roots(qc)) {
            double d;
            if (root.real() >= 0.0 && root.real() <= Xi_use)
                d = std::abs(root.imag());
            else
                d = std::min(std::abs(root), std::abs(root - cd{Xi_use, 0.0}));
            if (d >= 3 * hq) continue;
            cd num{0.0, 0.0}, dq{0.0, 0.0};
            for (std::size_t i2 = pc.size(); i2-- > 0;) num = num * root + pc[i2];
            for (int m = q; m >= 1; --m)
                dq = dq * root + static_cast<double>(m) * qc[static_cast<std::size_t>(m)];
            double res = (std::abs(dq) > 0.0) ? std::abs(num / dq)
                                              : std::numeric_limits<double>::infinity();
            if (res <= 1e-9 * bscale) continue;
            double xi_p = std::max(root.real(), 0.0);
            // estimated contribution of a principal-value neighbourhood of the
            // pole, compared with the size of the Laplace integral itself
            double contrib = kPi * res * std::exp(-R.real() * xi_p);
            if (contrib < 1e-6 * bscale / std::max(R.real(), 1.0)) {
                tail_bound += contrib;
                continue;
            }
            if (std::exp(-R.real() * xi_p) < 1e-8)
                Xi_use = std::min(Xi_use, xi_p - 10 * hq);
            else
                throw PoleOnRayError("borel_pade_sum: Pade pole at (" + std::to_string(root.real()) +
                                     ", " + std::to_string(root.imag()) + ") obstructs the ray");
        }
        if (Xi_use < 2 * hq)
            throw PoleOnRayError("borel_pade_sum: ray obstructed arbitrarily close to the origin");

        std::size_t n = static_cast<std::size_t>(std::lround(Xi_use / hq)) + 1;
        std::vector<cd> samples(n);
        for (std::size_t j = 0; j < n; ++j) {
            double xi = hq * static_cast<double>(j);
            cd num{0.0, 0.0}, den{0.0, 0.0};
            for (std::size_t i2 = pc.size(); i2-- > 0;) num = num * xi + pc[i2];
            for (std::size_t i2 = qc.size(); i2-- > 0;) den = den * xi + qc[i2];
            samples[j] = num / den;
        }
        ExpFit fit;
        fit.C2 = 0.0;
        for (const cd& v : samples) fit.C1 = std::max(fit.C1, std::abs(v));
        LaplaceResult lr = laplace_samples(samples.data(), n, hq, theta, eps, fit);
        // tail of the Laplace integral beyond the truncation point
        tail_bound = std::max(tail_bound, fit.C1 * std::exp(-R.real() * Xi_use) / R.real());
        return a[0] + lr.value;
    };

    int q = std::min((K - 1) / 2, 10);
    PadeSumResult out;
    out.value = value_at(q);
    if (q >= 2) {
        cd prev = value_at(q - 1);
        out.error_estimate = std::abs(out.value - prev);
    }
    out.error_estimate += tail_bound;
    return out;
}

// ---------------- RiccatiResummer ----------------

double RiccatiResummer::direction_rate(double theta, cd eps) {
    return (std::polar(1.0, theta) / eps).real();
}

RiccatiResummer::RiccatiResummer(const RiccatiProblem& p, int eps_order, ResumConfig cfg)
    : p_(p), cfg_(cfg) {
    formal_ = solve_formal_riccati(p, eps_order);
    double span = p.arc.theta_plus - p.arc.theta_minus;
    int count = std::max(1, static_cast<int>(std::ceil(span / (kPi / 3))));
    if (span == 0.0) {
        thetas_ = {p.arc.theta_minus};
    } else {
        for (int i = 0; i <= count; ++i)
            thetas_.push_back(p.arc.theta_minus + span * i / count);
    }
    for (double th : thetas_) inputs_.emplace(th, prepare_strip_inputs(p_, formal_.s, th));
    xi_eff_ = std::clamp(36.0 / std::max(cfg_.min_R - 2.0, 3.0), 2.0, cfg_.xi_cap);
}

double RiccatiResummer::pick_theta(cd eps) const {
    double best = -1e300, arg = thetas_[0];
    for (double th : thetas_) {
        double r = direction_rate(th, eps);
        if (r > best) {
            best = r;
            arg = th;
        }
    }
    if (best <= 0.5) throw DomainError("RiccatiResummer: eps admits no direction on the arc");
    return arg;
}

const RiccatiResummer::Line& RiccatiResummer::line(cd x, double theta) const {
    auto key = std::make_pair(std::make_pair(x.real(), x.imag()), theta);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const StripInputs& in = inputs_.at(theta);
    StripProblem sp = straighten(in, x, cfg_.h, xi_eff_);
    StripSolution sol = solve_strip_pde(sp);
    strip_residual_max_ = std::max(strip_residual_max_, sol.residual);
    Line L;
    L.theta = theta;
    L.b0_at_x0 = sp.b0_at_x0;
    std::size_t len = sol.tau[0].size() - 8;
    L.row.assign(sol.tau[0].begin(), sol.tau[0].begin() + static_cast<std::ptrdiff_t>(len));
    L.dzrow.resize(len);
    for (std::size_t l = 0; l < len; ++l) {
        L.dzrow[l] = (-25.0 * sol.tau[0][l] + 48.0 * sol.tau[1][l] - 36.0 * sol.tau[2][l] +
                      16.0 * sol.tau[3][l] - 3.0 * sol.tau[4][l]) /
                     (12.0 * cfg_.h);
    }
    L.fit = fit_exponential(L.row, cfg_.h);
    return cache_.emplace(key, std::move(L)).first->second;
}

RiccatiResummer::Eval RiccatiResummer::eval_along(cd x, cd eps, double theta) const {
    const Line& L = line(x, theta);
    LaplaceResult lv = laplace_samples(L.row.data(), L.row.size(), cfg_.h, theta, eps, L.fit);
    ExpFit dfit = fit_exponential(L.dzrow, cfg_.h);
    LaplaceResult ld = laplace_samples(L.dzrow.data(), L.dzrow.size(), cfg_.h, theta, eps, dfit);
    Eval e;
    const XSeries& s1 = formal_.s.order(1);
    e.s = eps * s1.eval(x) + lv.value;
    e.xdx_s = eps * s1.euler_derivative().eval(x) +
              std::polar(1.0, -theta) * L.b0_at_x0 * ld.value;
    e.tail = lv.tail_bound;
    e.theta = theta;
    return e;
}

RiccatiResummer::Eval RiccatiResummer::eval(cd x, cd eps) const {
    return eval_along(x, eps, pick_theta(eps));
}

cd RiccatiResummer::eval_pade(cd x, cd eps) const {
    return borel_pade_sum(formal_.s.eval_x(x), eps, pick_theta(eps)).value;
}

double RiccatiResummer::residual_at(cd x, cd eps) const {
    Eval e = eval(x, eps);
    cd lhs = eps * e.xdx_s;
    cd av = p_.a.eval(x, eps), bv = p_.b.eval(x, eps), cv = p_.c.eval(x, eps);
    cd rhs = av + bv * e.s + cv * e.s * e.s;
    double scl = std::max({std::abs(av), std::abs(bv * e.s), std::abs(cv * e.s * e.s),
                           std::abs(lhs), 1e-30});
    return std::abs(lhs - rhs) / scl;
}

ResumResult resum_riccati(const RiccatiProblem& p, int eps_order, const std::vector<cd>& xs,
                          const std::vector<cd>& eps_list, const ResumConfig& cfg) {
    ResumConfig c2 = cfg;
    {
        // work out the smallest admissible rate over the requested eps
        double span = p.arc.theta_plus - p.arc.theta_minus;
        int count = std::max(1, static_cast<int>(std::ceil(span / (kPi / 3))));
        std::vector<double> thetas;
        if (span == 0.0)
            thetas = {p.arc.theta_minus};
        else
            for (int i = 0; i <= count; ++i) thetas.push_back(p.arc.theta_minus + span * i / count);
        double minR = 1e300;
        for (cd e : eps_list) {
            double best = -1e300;
            for (double th : thetas) best = std::max(best, RiccatiResummer::direction_rate(th, e));
            minR = std::min(minR, best);
        }
        if (minR < 1e300) c2.min_R = minR;
    }
    RiccatiResummer rr(p, eps_order, c2);

    ResumResult out;
    out.thetas = rr.directions();
    out.formal = rr.formal();
    for (cd x : xs) {
        for (cd e : eps_list) {
            double th = rr.pick_theta(e);
            auto ev = rr.eval_along(x, e, th);
            ResumSample smp;
            smp.x = x;
            smp.eps = e;
            smp.s = ev.s;
            smp.tail = ev.tail;
            smp.theta = th;
            {
                cd lhs = e * ev.xdx_s;
                cd av = p.a.eval(x, e), bv = p.b.eval(x, e), cv = p.c.eval(x, e);
                cd rhs = av + bv * ev.s + cv * ev.s * ev.s;
                double scl = std::max({std::abs(av), std::abs(bv * ev.s), std::abs(cv * ev.s * ev.s),
                                       std::abs(lhs), 1e-30});
                smp.rel_residual = std::abs(lhs - rhs) / scl;
            }
            out.residual_max = std::max(out.residual_max, smp.rel_residual);
            // overlap with the second-best admissible direction
            double best2 = -1e300, th2 = th;
            for (double cand : rr.directions()) {
                if (cand == th) continue;
                double r = RiccatiResummer::direction_rate(cand, e);
                if (r > best2) {
                    best2 = r;
                    th2 = cand;
                }
            }
            if (th2 != th && best2 > 2.0) {
                try {
                    auto ev2 = rr.eval_along(x, e, th2);
                    out.overlap_max = std::max(out.overlap_max, std::abs(ev2.s - ev.s));
                } catch (const DomainError&) {
                    // secondary direction not admissible for this eps; skip
                }
            }
            out.samples.push_back(smp);
        }
    }
    return out;
}

}  // namespace sps2
