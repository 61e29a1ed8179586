#include "sps2/levelt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sps2 {

namespace {

constexpr double kPi = std::numbers::pi;

// Evaluate an eps-expansion at fixed eps, keeping the x-series.
XSeries at_eps(const EpsExpansion& f, cd eps) {
    XSeries r = f.order(f.eps_order());
    for (int k = f.eps_order() - 1; k >= 0; --k) r = eps * r + f.order(k);
    return r;
}

Mat2 mat_mul(const Mat2& a, const Mat2& b) {
    Mat2 c{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
    return c;
}

Mat2 mat_inv(const Mat2& a) {
    cd det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if (std::abs(det) < 1e-300) throw NumericalError("singular 2x2 matrix");
    return Mat2{{{a[1][1] / det, -a[0][1] / det}, {-a[1][0] / det, a[0][0] / det}}};
}

Vec2 mat_vec(const Mat2& a, const Vec2& v) {
    return {a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]};
}

double vec_norm(const Vec2& v) { return std::sqrt(std::norm(v[0]) + std::norm(v[1])); }

// 5-point first derivative on a uniform grid (one-sided at the edges).
std::vector<cd> derivative_5pt(const std::vector<cd>& f, double h) {
    const std::size_t n = f.size();
    std::vector<cd> d(n);
    if (n < 5) throw StructuralError("derivative_5pt: need at least 5 samples");
    auto fw = [&](std::size_t i) {
        return (-25.0 * f[i] + 48.0 * f[i + 1] - 36.0 * f[i + 2] + 16.0 * f[i + 3] -
                3.0 * f[i + 4]) /
               (12.0 * h);
    };
    auto bw = [&](std::size_t i) {
        return (25.0 * f[i] - 48.0 * f[i - 1] + 36.0 * f[i - 2] - 16.0 * f[i - 3] +
                3.0 * f[i - 4]) /
               (12.0 * h);
    };
    d[0] = fw(0);
    d[1] = fw(1);
    d[n - 1] = bw(n - 1);
    d[n - 2] = bw(n - 2);
    for (std::size_t i = 2; i + 2 < n; ++i)
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
    return d;
}

// Log-spaced ladder along the ray through x_out, from |x_out| down to
// |x_out| * 10^{-decades}.
std::vector<cd> radial_ladder(cd x_out, double decades, int n) {
    std::vector<cd> xs(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        double y = -decades * std::log(10.0) * k / (n - 1);
        xs[static_cast<std::size_t>(k)] = x_out * std::exp(y);
    }
    return xs;
}

double fit_slope_loglog(const std::vector<cd>& xs, const std::vector<double>& absv, double lo,
                        double hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        double ax = std::abs(xs[k]);
        if (ax < lo || ax > hi || absv[k] <= 0.0) continue;
        double lx = std::log(ax), ly = std::log(absv[k]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++n;
    }
    if (n < 2) return 0.0;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

double direction_angle(const Vec2& u, const Vec2& v) {
    cd inner = u[0] * std::conj(v[0]) + u[1] * std::conj(v[1]);
    double c = std::abs(inner) / (vec_norm(u) * vec_norm(v) + 1e-300);
    return std::acos(std::clamp(c, 0.0, 1.0));
}

TriangularSystem::TriangularSystem(const SystemSpec& prediag, const SpectralData& spec,
                                   int eps_order, ResumConfig cfg)
    : sys_(prediag), spec_(spec) {
    r0_ = 0.8 * prediag.disc_radius;
    // The coupling circle series is sampled on |t| = r0 and converges
    // geometrically only strictly inside; keep every evaluation point
    // (ladders, flow basepoint) at ratio <= 0.75 of the sampling circle.
    x_star_ = cd{0.75 * r0_, 0.0};
    rp_.a = prediag.A(1, 0);
    rp_.b = prediag.A(0, 0) - prediag.A(1, 1);
    rp_.c = -prediag.A(0, 1);
    rp_.arc = prediag.arc;
    rp_.validate();
    resummer_ = std::make_shared<RiccatiResummer>(rp_, eps_order, cfg);
}

cd TriangularSystem::nu1(cd eps) const { return spec_.lambda1.eval(cd{0.0, 0.0}, eps); }
cd TriangularSystem::nu2(cd eps) const { return spec_.lambda2.eval(cd{0.0, 0.0}, eps); }

cd TriangularSystem::lambda_at(int i, cd x, cd eps) const {
    return (i == 1 ? spec_.lambda1 : spec_.lambda2).eval(x, eps);
}

XSeries TriangularSystem::mu_at(int i, cd eps) const {
    XSeries l = at_eps(i == 1 ? spec_.lambda1 : spec_.lambda2, eps);
    l[0] = cd{0.0, 0.0};
    return l.shift_down();
}

XSeries TriangularSystem::mu12_at(cd eps) const { return mu_at(1, eps) - mu_at(2, eps); }

cd TriangularSystem::Bexp(int i, cd x, cd eps, cd from) const {
    // (1/eps) int (a_ii - lambda_i)/t dt, termwise (the integrand vanishes at 0)
    const EpsExpansion& aii = sys_.A(i - 1, i - 1);
    const EpsExpansion& li = (i == 1 ? spec_.lambda1 : spec_.lambda2);
    XSeries b = at_eps(aii - li, eps);
    b[0] = cd{0.0, 0.0};  // exact zero of B(0, eps) up to roundoff
    XSeries F = b.shift_down().antiderivative();
    return (F.eval(x) - F.eval(from)) / eps;
}

cd TriangularSystem::P12(cd x, cd eps, cd from) const {
    XSeries F = mu12_at(eps).antiderivative();
    return (F.eval(x) - F.eval(from)) / eps;
}

std::vector<cd> TriangularSystem::radial_q(cd eps, const std::vector<cd>& xs) const {
    XSeries a12 = at_eps(sys_.A(0, 1), eps);
    auto F = [&](cd t) { return a12.eval(t) * resummer_->eval_pade(t, eps) / eps; };
    std::vector<cd> q(xs.size(), cd{0.0, 0.0});
    cd f_prev = F(xs[0]);
    for (std::size_t k = 1; k < xs.size(); ++k) {
        cd dy = std::log(xs[k] / xs[k - 1]);  // complex log step along the path
        cd mid = xs[k - 1] * std::exp(0.5 * dy);
        cd f_mid = F(mid), f_cur = F(xs[k]);
        q[k] = q[k - 1] + (dy / 6.0) * (f_prev + 4.0 * f_mid + f_cur);
        f_prev = f_cur;
    }
    return q;
}

cd TriangularSystem::q_at(cd x, cd eps, int n_steps) const {
    std::vector<cd> xs(static_cast<std::size_t>(n_steps));
    cd lr = std::log(x / x_star_);
    for (int k = 0; k < n_steps; ++k)
        xs[static_cast<std::size_t>(k)] = x_star_ * std::exp(lr * static_cast<double>(k) /
                                                             static_cast<double>(n_steps - 1));
    return radial_q(eps, xs).back();
}

cd TriangularSystem::g11(cd x, cd eps, cd q, cd from) const {
    return std::exp(Bexp(1, x, eps, from) - q);
}
cd TriangularSystem::g22(cd x, cd eps, cd q, cd from) const {
    return std::exp(Bexp(2, x, eps, from) + q);
}
cd TriangularSystem::u_of(cd x, cd eps, cd q, cd from) const {
    cd expo = Bexp(1, x, eps, from) - Bexp(2, x, eps, from) - 2.0 * q;
    return sys_.A(0, 1).eval(x, eps) * std::exp(expo);
}

TriangularSystem::CircleData TriangularSystem::circle_data(cd eps) const {
    const int M = 512;  // Simpson intervals; even nodes feed the Cauchy sums
    XSeries a12 = at_eps(sys_.A(0, 1), eps);
    std::vector<cd> t_all(M + 1), f_all(M + 1);
    for (int j = 0; j <= M; ++j) {
        double phi = 2.0 * kPi * j / M;
        cd t = r0_ * std::polar(1.0, phi);
        t_all[static_cast<std::size_t>(j)] = t;
        // d t = i t d phi, so int a12 s / t dt = i int a12 s d phi
        f_all[static_cast<std::size_t>(j)] =
            cd{0.0, 1.0} * a12.eval(t) * resummer_->eval_pade(t, eps) / eps;
    }
    CircleData out;
    double dphi = 2.0 * kPi / M;
    // q is anchored at x_star, which sits strictly inside the circle: seed the
    // angular accumulation with the radial leg x_star -> r0
    cd run = q_at(cd{r0_, 0.0}, eps, 257);
    for (int j = 0; j <= M; j += 2) {
        if (j > 0)
            run += (dphi / 3.0) * (f_all[static_cast<std::size_t>(j - 2)] +
                                   4.0 * f_all[static_cast<std::size_t>(j - 1)] +
                                   f_all[static_cast<std::size_t>(j)]);
        if (j == M) break;
        out.t.push_back(t_all[static_cast<std::size_t>(j)]);
        out.q.push_back(run);
    }
    out.u.resize(out.t.size());
    for (std::size_t k = 0; k < out.t.size(); ++k)
        out.u[k] = u_of(out.t[k], eps, out.q[k], x_star_);
    return out;
}

TriangularisationResult triangularise(const SystemSpec& sys, const std::vector<cd>& eps_list,
                                      int eps_order, ResumConfig cfg, int n_samples) {
    TriangularisationResult out;
    out.prediag = pre_diagonalise(sys);
    out.T = std::make_shared<TriangularSystem>(out.prediag.transformed, out.prediag.spec,
                                               eps_order, cfg);
    const TriangularSystem& T = *out.T;
    out.eps_checked = eps_list;
    const SystemSpec& A2 = out.prediag.transformed;
    cd from = T.x_star();

    for (cd eps : eps_list) {
        std::vector<cd> xs = radial_ladder(T.x_star(), 4.0, n_samples);
        std::vector<cd> q = T.radial_q(eps, xs);
        double dy = std::log(std::abs(xs[1]) / std::abs(xs[0]));

        std::size_t n = xs.size();
        std::vector<cd> G11(n), G21(n), G22(n), U(n), S(n);
        for (std::size_t k = 0; k < n; ++k) {
            cd s = T.resummer().eval_pade(xs[k], eps);
            cd g1 = T.g11(xs[k], eps, q[k], from);
            cd g2 = T.g22(xs[k], eps, q[k], from);
            S[k] = s;
            G11[k] = g1;
            G21[k] = g2 * s;
            G22[k] = g2;
            U[k] = T.u_of(xs[k], eps, q[k], from);
        }
        double usup = 0.0;
        for (const cd& v : U) usup = std::max(usup, std::abs(v));
        out.u_sup_per_eps.push_back(usup);
        out.u_at_zero = std::max(out.u_at_zero, std::abs(A2.A(0, 1).eval(cd{0.0, 0.0}, eps)));

        // gauge residual  eps x dG/dx - G A2 + Atri G  by numerical differentiation
        auto d11 = derivative_5pt(G11, dy);
        auto d21 = derivative_5pt(G21, dy);
        auto d22 = derivative_5pt(G22, dy);
        for (std::size_t k = 2; k + 2 < n; ++k) {
            Mat2 A = A2.A.eval(xs[k], eps);
            cd l1 = T.lambda_at(1, xs[k], eps), l2 = T.lambda_at(2, xs[k], eps);
            Mat2 G{{{G11[k], cd{0.0, 0.0}}, {G21[k], G22[k]}}};
            Mat2 dG{{{eps * d11[k], cd{0.0, 0.0}}, {eps * d21[k], eps * d22[k]}}};
            Mat2 Atri{{{l1, U[k]}, {cd{0.0, 0.0}, l2}}};
            Mat2 GA = mat_mul(G, A), AG = mat_mul(Atri, G);
            double scale = 1e-300, worst = 0.0;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) scale = std::max(scale, std::abs(GA[i][j]));
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    worst = std::max(worst, std::abs(dG[i][j] - GA[i][j] + AG[i][j]));
            out.gauge_residual = std::max(out.gauge_residual, worst / scale);
        }
    }
    return out;
}

FlowIntegrals flow_integrals(const TriangularSystem& T, cd x_star, cd eps,
                             const std::vector<cd>& xs) {
    cd n1 = T.nu1(eps), n2 = T.nu2(eps);
    XSeries M1 = T.mu_at(1, eps).antiderivative();
    XSeries M2 = T.mu_at(2, eps).antiderivative();
    cd m1s = M1.eval(x_star), m2s = M2.eval(x_star);
    FlowIntegrals out;
    for (cd x : xs) {
        cd lr = std::log(x / x_star);
        cd f1 = std::exp(-n1 / eps * lr - (M1.eval(x) - m1s) / eps);
        cd f2 = std::exp(-n2 / eps * lr - (M2.eval(x) - m2s) / eps);
        out.f1.push_back(f1);
        out.f2.push_back(f2);
        out.f12.push_back(f1 / f2);
        out.f21.push_back(f2 / f1);
    }
    return out;
}

cd CouplingC12::operator()(cd x) const {
    if (local_eval) return local_eval(x);
    cd pref = std::exp(-inv_eps * (p12_anti.eval(x) - p12_at_star));
    cd sum{0.0, 0.0};
    cd xn{1.0, 0.0};
    for (std::size_t n = 0; n < g.size(); ++n) {
        bool resonant = std::find(resonant_n.begin(), resonant_n.end(), static_cast<int>(n)) !=
                        resonant_n.end();
        if (!resonant) sum += g[n] * xn / (static_cast<double>(n + 1) + nu12_over_eps);
        xn *= x;
    }
    cd val = -x * sum;
    for (int n : resonant_n)
        val -= g[static_cast<std::size_t>(n)] * std::pow(x, static_cast<double>(n + 1)) *
               std::log(x);
    return pref * val;
}

CouplingC12 coupling_core(cd eps, cd nu12, const XSeries& mu12, const std::function<cd(cd)>& u_fn,
                          cd x_star, double circle_radius, CouplingForm form) {
    CouplingC12 out;
    out.eps = eps;
    out.nu12_over_eps = nu12 / eps;
    out.x_star = x_star;
    out.circle_radius = circle_radius;
    out.form = form;
    out.inv_eps = 1.0 / eps;
    out.p12_anti = mu12.antiderivative();
    out.p12_at_star = out.p12_anti.eval(x_star);

    const int M = 256;
    const int NC = 96;
    std::vector<cd> gs(M);
    for (int j = 0; j < M; ++j) {
        cd t = circle_radius * std::polar(1.0, 2.0 * kPi * j / M);
        cd ut = u_fn(t);
        if (form == CouplingForm::frame) ut /= eps * t;
        gs[static_cast<std::size_t>(j)] =
            std::exp((out.p12_anti.eval(t) - out.p12_at_star) / eps) * ut;
    }
    out.g.resize(NC);
    for (int n = 0; n < NC; ++n) {
        cd acc{0.0, 0.0};
        for (int j = 0; j < M; ++j)
            acc += gs[static_cast<std::size_t>(j)] *
                   std::polar(1.0, -2.0 * kPi * j * n / M);
        out.g[static_cast<std::size_t>(n)] =
            acc / (static_cast<double>(M) * std::pow(circle_radius, n));
    }
    for (int n = 0; n < NC; ++n) {
        if (std::abs(out.nu12_over_eps + static_cast<double>(n + 1)) < 1e-6)
            out.resonant_n.push_back(n);
    }
    // fitted |c12|/|x| over the evaluation ray
    double arg = std::arg(x_star);
    for (int k = 0; k <= 24; ++k) {
        double r = 0.6 * circle_radius * std::pow(10.0, -4.0 * k / 24.0);
        cd x = std::polar(r, arg);
        out.kappa_x = std::max(out.kappa_x, std::abs(out(x)) / r);
    }
    return out;
}

CouplingC12 coupling_c12(const TriangularSystem& T, cd eps, CouplingForm form,
                         std::optional<cd> basepoint) {
    cd x_star = basepoint.value_or(T.x_star());

    // The circle-series representation needs exp(P12(t)/eps) resolved by NC
    // Taylor terms on |t| = r0; deep in the singular regime (|nu12/eps| large)
    // that fails, but there the coupling ODE has a convergent regular
    // expansion c = D/(lambda2 - lambda1) + O(eps/nu12) evaluated locally.
    cd nu12 = T.nu12(eps);
    double p12_sup = 0.0;
    {
        XSeries P = T.mu12_at(eps).antiderivative();
        for (int j = 0; j < 16; ++j)
            p12_sup = std::max(p12_sup,
                               std::abs(P.eval(T.r0() * std::polar(1.0, 2.0 * kPi * j / 16))));
    }
    if (std::abs(nu12 / eps) > 150.0 || p12_sup / std::abs(eps) > 30.0) {
        CouplingC12 out;
        out.eps = eps;
        out.nu12_over_eps = nu12 / eps;
        out.x_star = x_star;
        out.circle_radius = T.r0();
        out.form = form;
        out.inv_eps = 1.0 / eps;
        out.p12_anti = T.mu12_at(eps).antiderivative();
        out.p12_at_star = out.p12_anti.eval(x_star);
        const TriangularSystem* Tp = &T;
        cd from = T.x_star();
        out.local_eval = [Tp, eps, form, from](cd x) -> cd {
            const double h = 0.05;  // log-stencil for the eps x c' correction
            std::array<cd, 3> xs{x * std::exp(cd{-h}), x, x * std::exp(cd{h})};
            std::array<cd, 3> c0;
            for (int j = 0; j < 3; ++j) {
                cd q = Tp->q_at(xs[j], eps);
                cd u = Tp->u_of(xs[j], eps, q, from);
                cd D = (form == CouplingForm::frame) ? u : eps * xs[j] * u;
                cd L = Tp->lambda_at(2, xs[j], eps) - Tp->lambda_at(1, xs[j], eps);
                c0[j] = D / L;
            }
            cd dc0 = (c0[2] - c0[0]) / (2.0 * h);  // d c0 / d log x
            cd q = Tp->q_at(x, eps);
            cd u = Tp->u_of(x, eps, q, from);
            cd D = (form == CouplingForm::frame) ? u : eps * x * u;
            cd L = Tp->lambda_at(2, x, eps) - Tp->lambda_at(1, x, eps);
            return (D + eps * dc0) / L;
        };
        double arg = std::arg(x_star);
        for (int k = 0; k <= 24; ++k) {
            double r = 0.6 * T.r0() * std::pow(10.0, -4.0 * k / 24.0);
            cd xp = std::polar(r, arg);
            out.kappa_x = std::max(out.kappa_x, std::abs(out(xp)) / r);
        }
        return out;
    }

    TriangularSystem::CircleData circle = T.circle_data(eps);
    const int M = static_cast<int>(circle.t.size());
    auto u_fn = [&](cd t) {
        double phi = std::arg(t);
        if (phi < 0) phi += 2.0 * kPi;
        int j = static_cast<int>(std::lround(phi * M / (2.0 * kPi))) % M;
        return circle.u[static_cast<std::size_t>(j)];
    };
    return coupling_core(eps, T.nu12(eps), T.mu12_at(eps), u_fn, x_star, T.r0(), form);
}

SolutionBasis solution_basis(const TriangularSystem& T, cd eps, int n_samples) {
    SolutionBasis out;
    out.eps = eps;
    out.xs = radial_ladder(T.x_star(), 4.0, n_samples);
    std::vector<cd> q = T.radial_q(eps, out.xs);
    FlowIntegrals fl = flow_integrals(T, T.x_star(), eps, out.xs);
    CouplingC12 c12 = coupling_c12(T, eps, CouplingForm::frame);

    const std::size_t n = out.xs.size();
    std::vector<cd> cvals(n), uvals(n);
    std::vector<double> a1(n), a2(n);
    for (std::size_t k = 0; k < n; ++k) {
        cvals[k] = c12(out.xs[k]);
        uvals[k] = T.u_of(out.xs[k], eps, q[k], T.x_star());
        out.phi1.push_back({fl.f1[k], cd{0.0, 0.0}});
        out.phi2.push_back({fl.f2[k] * cvals[k], fl.f2[k]});
        a1[k] = std::abs(fl.f1[k]);
        a2[k] = std::abs(fl.f2[k]);
    }

    // reduced residuals (dividing the ODE by the flow factors keeps the
    // numerically differentiated quantities O(1)):
    //   phi1: eps d/dy log f1 + lambda1 = 0, checked on h1 = f1 (x/x*)^{nu1/eps}
    //   phi2 first component: eps dc/dy + (lambda1 - lambda2) c + u = 0
    double dy = std::log(std::abs(out.xs[1]) / std::abs(out.xs[0]));
    std::vector<cd> h1(n);
    XSeries M1 = T.mu_at(1, eps).antiderivative();
    cd m1s = M1.eval(T.x_star());
    for (std::size_t k = 0; k < n; ++k) h1[k] = std::exp(-(M1.eval(out.xs[k]) - m1s) / eps);
    auto dh1 = derivative_5pt(h1, dy);
    auto dc = derivative_5pt(cvals, dy);
    for (std::size_t k = 2; k + 2 < n; ++k) {
        cd x = out.xs[k];
        cd l1 = T.lambda_at(1, x, eps), l2 = T.lambda_at(2, x, eps);
        cd xmu1 = l1 - T.nu1(eps);
        double r1 = std::abs(eps * dh1[k] + xmu1 * h1[k]) /
                    std::max(std::abs(l1 * h1[k]), 1e-30);
        double s2 = std::max({std::abs(l2 * cvals[k]), std::abs(uvals[k]), 1e-30});
        double r2 = std::abs(eps * dc[k] + (l1 - l2) * cvals[k] + uvals[k]) / s2;
        out.residual = std::max({out.residual, r1, r2});
    }
    out.growth1 = fit_slope_loglog(out.xs, a1, 1e-4 * T.r0(), 1e-2 * T.r0());
    out.growth2 = fit_slope_loglog(out.xs, a2, 1e-4 * T.r0(), 1e-2 * T.r0());
    return out;
}

std::vector<cd> resonant_eps_values(const TriangularSystem& T, double sector_radius) {
    std::vector<cd> out;
    for (int n = 0; n < 400; ++n) {
        cd e = (T.spectral().m2 - T.spectral().m1) / static_cast<double>(n + 1);
        for (int it = 0; it < 25; ++it) e = (T.nu2(e) - T.nu1(e)) / static_cast<double>(n + 1);
        if (std::abs(e) <= sector_radius) out.push_back(e);
        if (std::abs(e) < 1e-4 * sector_radius) break;
    }
    return out;
}

LeveltResult levelt_filtration(const SystemSpec& sys, const std::vector<cd>& eps_list,
                               int eps_order, int n_samples, ResumConfig cfg) {
    LeveltResult out;
    out.sys = sys;
    out.prediag = pre_diagonalise(sys);
    out.T = std::make_shared<TriangularSystem>(out.prediag.transformed, out.prediag.spec,
                                               eps_order, cfg);
    const TriangularSystem& T = *out.T;
    out.resonant_eps = resonant_eps_values(T, sys.sector_radius);
    cd from = T.x_star();

    for (cd eps : eps_list) {
        LeveltFrame fr;
        fr.eps = eps;
        fr.nu1 = T.nu1(eps);
        fr.nu2 = T.nu2(eps);
        fr.nu12 = fr.nu1 - fr.nu2;
        fr.xs = radial_ladder(T.x_star(), 4.0, n_samples);
        std::vector<cd> q = T.radial_q(eps, fr.xs);
        fr.c12 = coupling_c12(T, eps, CouplingForm::frame);

        const std::size_t n = fr.xs.size();
        for (std::size_t k = 0; k < n; ++k) {
            cd x = fr.xs[k];
            cd s = T.resummer().eval_pade(x, eps);
            cd g1 = T.g11(x, eps, q[k], from);
            cd g2 = T.g22(x, eps, q[k], from);
            Mat2 G2G1{{{g1, cd{0.0, 0.0}}, {g2 * s, g2}}};
            Mat2 Gfull = mat_mul(G2G1, out.prediag.G.G.eval(x, eps));
            Mat2 Ginv = mat_inv(Gfull);
            cd c = fr.c12(x);
            fr.e1.push_back(mat_vec(Ginv, Vec2{cd{1.0, 0.0}, cd{0.0, 0.0}}));
            fr.e2.push_back(mat_vec(Ginv, Vec2{c, cd{1.0, 0.0}}));
            fr.c12_sup_over_x = std::max(fr.c12_sup_over_x, std::abs(c) / std::abs(x));
            fr.c12_sup_over_eps = std::max(fr.c12_sup_over_eps, std::abs(c) / std::abs(eps));
        }

        // exact x -> 0 limits: s(0) = 0, c12(0) = 0, q(0) by extending the
        // ladder (the integrand decays at least linearly in |x|)
        {
            std::vector<cd> tail = radial_ladder(fr.xs.back(), 4.0, 33);
            std::vector<cd> qt = T.radial_q(eps, tail);
            cd q0 = q.back() + qt.back();
            cd g1 = T.g11(cd{0.0, 0.0}, eps, q0, from);
            cd g2 = T.g22(cd{0.0, 0.0}, eps, q0, from);
            Mat2 G2G1{{{g1, cd{0.0, 0.0}}, {cd{0.0, 0.0}, g2}}};
            Mat2 Gfull = mat_mul(G2G1, out.prediag.G.G.eval(cd{0.0, 0.0}, eps));
            Mat2 Ginv = mat_inv(Gfull);
            fr.e1_limit = mat_vec(Ginv, Vec2{cd{1.0, 0.0}, cd{0.0, 0.0}});
            fr.e2_limit = mat_vec(Ginv, Vec2{cd{0.0, 0.0}, cd{1.0, 0.0}});
        }

        // (ii) x->0 eigenvector alignment against A(0, eps)
        {
            Mat2 A0e = sys.A.eval(cd{0.0, 0.0}, eps);
            auto [w1, w2] = eigenvalues2(A0e);
            cd r1 = (std::abs(w1 - fr.nu1) < std::abs(w2 - fr.nu1)) ? w1 : w2;
            cd r2 = (r1 == w1) ? w2 : w1;
            Vec2 v1 = eigenvector2(A0e, r1), v2 = eigenvector2(A0e, r2);
            fr.angle_rho1 = direction_angle(fr.e1_limit, v1);
            fr.angle_rho2 = direction_angle(fr.e2_limit, v2);
        }

        // (i) eigen-equation residual eps x e' + A e = lambda e
        {
            double dy = std::log(std::abs(fr.xs[1]) / std::abs(fr.xs[0]));
            for (int comp = 0; comp < 2; ++comp) {
                const auto& e = (comp == 0) ? fr.e1 : fr.e2;
                std::vector<cd> c0(n), c1(n);
                for (std::size_t k = 0; k < n; ++k) {
                    c0[k] = e[k][0];
                    c1[k] = e[k][1];
                }
                auto d0 = derivative_5pt(c0, dy);
                auto d1 = derivative_5pt(c1, dy);
                for (std::size_t k = 2; k + 2 < n; ++k) {
                    cd x = fr.xs[k];
                    Mat2 A = sys.A.eval(x, eps);
                    cd l = T.lambda_at(comp + 1, x, eps);
                    Vec2 Ae = mat_vec(A, e[k]);
                    double scale = std::max({vec_norm(Ae), std::abs(l) * vec_norm(e[k]), 1e-30});
                    cd r0c = eps * d0[k] + Ae[0] - l * c0[k];
                    cd r1c = eps * d1[k] + Ae[1] - l * c1[k];
                    double r = std::sqrt(std::norm(r0c) + std::norm(r1c)) / scale;
                    fr.eigen_residual = std::max(fr.eigen_residual, r);
                }
            }
        }

        // quotient generator modulo span(e1) at the innermost sample
        {
            const Vec2& a = fr.e1.back();
            const Vec2& b = fr.e2.back();
            cd proj = (b[0] * std::conj(a[0]) + b[1] * std::conj(a[1])) /
                      (std::norm(a[0]) + std::norm(a[1]));
            Vec2 q2{b[0] - proj * a[0], b[1] - proj * a[1]};
            double nn = vec_norm(q2);
            fr.quotient_e2bar = {q2[0] / nn, q2[1] / nn};
        }

        out.frames.push_back(std::move(fr));
    }

    // eps -> 0 alignment at the smallest requested |eps|
    if (!out.frames.empty()) {
        std::size_t mi = 0;
        for (std::size_t i = 1; i < out.frames.size(); ++i)
            if (std::abs(out.frames[i].eps) < std::abs(out.frames[mi].eps)) mi = i;
        const LeveltFrame& fr = out.frames[mi];
        for (std::size_t k = 0; k < fr.xs.size(); ++k) {
            cd x = fr.xs[k];
            Mat2 A0 = sys.A.eval(x, cd{0.0, 0.0});
            cd h1 = out.prediag.spec.eta1.eval(x), h2 = out.prediag.spec.eta2.eval(x);
            Vec2 v1 = eigenvector2(A0, h1), v2 = eigenvector2(A0, h2);
            out.angle_eta_max = std::max({out.angle_eta_max,
                                          direction_angle(fr.e1[k], v1),
                                          direction_angle(fr.e2[k], v2)});
        }
    }
    return out;
}

PsiBasis psi_basis(const LeveltResult& L, std::size_t frame_index) {
    const LeveltFrame& fr = L.frames.at(frame_index);
    const TriangularSystem& T = *L.T;
    PsiBasis out;
    out.eps = fr.eps;
    out.xs = fr.xs;
    FlowIntegrals fl = flow_integrals(T, T.x_star(), fr.eps, fr.xs);
    std::vector<double> a1, a2;
    for (std::size_t k = 0; k < fr.xs.size(); ++k) {
        Vec2 p1{fl.f1[k] * fr.e1[k][0], fl.f1[k] * fr.e1[k][1]};
        Vec2 p2{fl.f2[k] * fr.e2[k][0], fl.f2[k] * fr.e2[k][1]};
        out.psi1.push_back(p1);
        out.psi2.push_back(p2);
        a1.push_back(vec_norm(p1));
        a2.push_back(vec_norm(p2));
    }
    out.growth1 = fit_slope_loglog(out.xs, a1, 1e-4 * T.r0(), 1e-2 * T.r0());
    out.growth2 = fit_slope_loglog(out.xs, a2, 1e-4 * T.r0(), 1e-2 * T.r0());
    return out;
}

}  // namespace sps2
