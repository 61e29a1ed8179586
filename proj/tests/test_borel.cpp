#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "sps2/borel.hpp"

using namespace sps2;

namespace {

constexpr int K = 12;
constexpr int N = 12;

RiccatiProblem model_problem(ArcSpec arc = ArcSpec(0.0, 0.0)) {
    // eps x s' = eps x + s, exact sum s = -eps x / (1 - eps)
    RiccatiProblem p;
    p.a = EpsExpansion(K, N, 1.0, arc);
    p.a.order(1)[1] = 1.0;
    p.b = EpsExpansion::constant(1.0, K, N, 1.0, arc);
    p.c = EpsExpansion(K, N, 1.0, arc);
    p.arc = arc;
    return p;
}

}  // namespace

TEST_CASE("formal Borel transform of eps is the constant 1") {
    BorelFunction f = formal_borel({cd{0.0}, cd{1.0}}, 0.0, 1.0 / 128, 4.0);
    for (cd v : f.grid) CHECK(std::abs(v - cd(1.0)) < 1e-14);
    REQUIRE(!f.taylor.empty());
    CHECK(std::abs(f.taylor[0] - cd(1.0)) < 1e-14);
}

TEST_CASE("formal Borel transform of sum eps^k is e^xi") {
    std::vector<cd> coeffs(33, cd{1.0});
    coeffs[0] = 0.0;
    BorelFunction f = formal_borel(coeffs, 0.0, 1.0 / 128, 4.0);
    for (std::size_t j = 0; j < f.grid.size(); ++j) {
        double xi = double(j) * f.step;
        CHECK(std::abs(f.grid[j] - std::exp(xi)) < 1e-9 * std::exp(xi) + 1e-12);
    }
}

TEST_CASE("convolution oracle: e^xi * e^xi = xi e^xi") {
    std::vector<cd> coeffs(26, cd{1.0});
    coeffs[0] = 0.0;
    BorelFunction f = formal_borel(coeffs, 0.0, 1.0 / 256, 8.0);
    BorelFunction c = convolve(f, f);
    for (std::size_t j = 0; j < c.grid.size(); ++j) {
        double xi = double(j) * c.step;
        CHECK(std::abs(c.grid[j] - xi * std::exp(xi)) < 1e-5 * (1 + xi * std::exp(xi)));
    }
    // factorial Cauchy rule on the taylor part: coefficients of xi e^xi are n/n!
    for (std::size_t n = 1; n < 8; ++n) {
        double fact = 1.0;
        for (std::size_t i = 2; i < n; ++i) fact *= double(i);
        CHECK(std::abs(c.taylor[n] - cd(1.0 / fact)) < 1e-10);
    }
}

TEST_CASE("Laplace oracles: L(1) = eps, L(xi) = eps^2, L(e^xi) = eps/(1-eps)") {
    cd eps{0.1, 0.0};

    BorelFunction one = borel_from_taylor({cd{1.0}}, 0.0, 1.0 / 256, 8.0);
    one.fit = ExpFit{1.0, 0.0};
    LaplaceResult l1 = laplace(one, eps);
    CHECK(std::abs(l1.value - eps) < 1e-10 + l1.tail_bound);

    BorelFunction lin = borel_from_taylor({cd{0.0}, cd{1.0}}, 0.0, 1.0 / 256, 8.0);
    lin.fit = ExpFit{8.0, 0.0};
    LaplaceResult l2 = laplace(lin, eps);
    CHECK(std::abs(l2.value - eps * eps) < 1e-10 + l2.tail_bound);

    std::vector<cd> coeffs(26, cd{1.0});
    coeffs[0] = 0.0;
    BorelFunction e = formal_borel(coeffs, 0.0, 1.0 / 256, 8.0);
    LaplaceResult l3 = laplace(e, eps);
    CHECK(std::abs(l3.value - cd(1.0 / 9.0)) < 1e-8 + l3.tail_bound);
}

TEST_CASE("Borel-Laplace roundtrip on a convergent series") {
    // sum (1/2)^k eps^k resums to eps/(2 - eps)
    std::vector<cd> coeffs(26, cd{0.0});
    double p = 1.0;
    for (std::size_t k = 1; k < coeffs.size(); ++k) {
        p *= 0.5;
        coeffs[k] = p;
    }
    BorelFunction f = formal_borel(coeffs, 0.0, 1.0 / 256, 8.0);
    cd eps{0.05, 0.0};
    LaplaceResult l = laplace(f, eps);
    CHECK(std::abs(l.value - eps / (2.0 - eps)) < 1e-10 + l.tail_bound);
}

TEST_CASE("laplace refuses inadmissible directions") {
    BorelFunction f = borel_from_taylor({cd{1.0}}, 0.0, 1.0 / 128, 4.0);
    f.fit = ExpFit{1.0, 5.0};  // grows like e^{5 xi}
    CHECK_THROWS_AS((void)laplace(f, cd{1.0, 0.0}), DomainError);
}

TEST_CASE("fit_exponential dominates the samples") {
    double step = 1.0 / 64;
    std::vector<cd> samples;
    for (int j = 0; j <= 512; ++j) samples.push_back(2.0 * std::exp(0.5 * j * step));
    ExpFit fit = fit_exponential(samples, step);
    for (int j = 0; j <= 512; ++j)
        CHECK(std::abs(samples[std::size_t(j)]) <= fit.C1 * std::exp(fit.C2 * j * step) * (1 + 1e-10));
    CHECK(fit.C2 == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("convolution ODE solver: sigma = -x (e^xi - 1)") {
    cd x{0.3, 0.1};
    double step = 1.0 / 256, ximax = 6.0;
    BorelFunction a0 = borel_from_taylor({-x}, 0.0, step, ximax);
    BorelFunction zero = borel_from_taylor({cd{0.0}}, 0.0, step, ximax);
    BorelOdeResult r = solve_borel_ode(a0, zero, zero, cd{1.0}, cd{0.0});
    for (std::size_t j = 0; j < r.sigma.grid.size(); ++j) {
        double xi = double(j) * step;
        cd want = -x * (std::exp(xi) - 1.0);
        CHECK(std::abs(r.sigma.grid[j] - want) < 1e-5 * (1 + std::abs(want)));
    }
    CHECK(r.residual < 1e-8 * std::exp(ximax));
}

// The strip coordinate needs Re(e^{i theta} b0(0)) < 0; with b = 1 the model
// problem is admissible along theta = pi, i.e. for eps in the left half plane.
constexpr double kPi = 3.14159265358979323846;

TEST_CASE("strip inputs of the model problem and the z-period") {
    RiccatiProblem p = model_problem(ArcSpec(kPi, kPi));
    auto formal = solve_formal_riccati(p, K);
    StripInputs in = prepare_strip_inputs(p, formal.s, kPi);
    CHECK(std::abs(in.b0[0] - cd(1.0)) < 1e-12);
    // A0, U1, U2 vanish at eps = 0; A0 also at order eps^1
    CHECK(in.A0.order(0).coeff_norm() < 1e-12);
    CHECK(in.A0.order(1).coeff_norm() < 1e-12);
    CHECK(in.U1.order(0).coeff_norm() < 1e-12);
    CHECK(in.U2.order(0).coeff_norm() < 1e-12);
    cd period = strip_period(in);
    // 2 pi i e^{-i theta} rho = -2 pi i
    CHECK(std::abs(period - cd{0.0, -2 * kPi}) < 1e-10);
}

TEST_CASE("straighten rejects directions with the wrong strip orientation") {
    RiccatiProblem p = model_problem();
    auto formal = solve_formal_riccati(p, K);
    StripInputs in = prepare_strip_inputs(p, formal.s, 0.0);
    CHECK_THROWS_AS((void)straighten(in, cd{0.4, 0.0}, 1.0 / 64, 6.0), ResonanceError);
}

TEST_CASE("strip solution is periodic under a full-turn z shift") {
    RiccatiProblem p = model_problem(ArcSpec(kPi, kPi));
    auto formal = solve_formal_riccati(p, K);
    StripInputs in = prepare_strip_inputs(p, formal.s, kPi);
    cd x0{0.4, 0.0};
    StripProblem sp0 = straighten(in, x0, 1.0 / 64, 6.0);
    StripProblem sp1 = straighten(in, x0, 1.0 / 64, 6.0, strip_period(in));
    StripSolution s0 = solve_strip_pde(sp0);
    StripSolution s1 = solve_strip_pde(sp1);
    REQUIRE(s0.tau.size() == s1.tau.size());
    std::size_t L = s0.tau[0].size();
    for (std::size_t l = 0; l < L; ++l)
        CHECK(std::abs(s0.tau[0][l] - s1.tau[0][l]) < 1e-8 * (1 + std::abs(s0.tau[0][l])));
}

TEST_CASE("strip solver matches the exact regular part of the model") {
    RiccatiProblem p = model_problem(ArcSpec(kPi, kPi));
    auto formal = solve_formal_riccati(p, K);
    StripInputs in = prepare_strip_inputs(p, formal.s, kPi);
    cd x0{0.4, 0.0};
    StripProblem sp = straighten(in, x0, 1.0 / 64, 6.0);
    StripSolution ss = solve_strip_pde(sp);
    CHECK(ss.residual < 1e-6 * std::exp(6.0));
    // regular part -x sum_{k>=2} eps^k has rotated Borel transform
    // sum_{j>=1} (-x) e^{i j pi} xi^j / j! = x (1 - e^{-xi})
    for (std::size_t l = 0; l < ss.tau[0].size(); ++l) {
        double xi = double(l) * sp.h;
        cd want = x0 * (1.0 - std::exp(-xi));
        CHECK(std::abs(ss.tau[0][l] - want) < 1e-4 * (1 + std::abs(want)));
    }
}

TEST_CASE("Borel-Pade oracle: Euler series at eps = 0.1") {
    std::vector<cd> coeffs(21, cd{0.0});
    double fact = 1.0;
    for (std::size_t k = 1; k < coeffs.size(); ++k) {
        coeffs[k] = ((k % 2) ? 1.0 : -1.0) * fact;  // (-1)^{k-1} (k-1)!
        fact *= double(k);
    }
    PadeSumResult r = borel_pade_sum(coeffs, cd{0.1, 0.0}, 0.0);
    // exact Borel sum: e^{10} E1(10)
    CHECK(std::abs(r.value - cd(0.09156333393978)) < 2e-6);
    CHECK(r.error_estimate < 1e-4);
}

TEST_CASE("Borel-Pade refuses series with a pole on the ray") {
    std::vector<cd> coeffs(21, cd{0.0});
    double fact = 1.0;
    for (std::size_t k = 1; k < coeffs.size(); ++k) {
        coeffs[k] = fact;  // (k-1)!: Borel transform 1/(1 - xi)
        fact *= double(k);
    }
    CHECK_THROWS_AS((void)borel_pade_sum(coeffs, cd{0.1, 0.0}, 0.0), PoleOnRayError);
}

TEST_CASE("RiccatiResummer reproduces the model sum") {
    RiccatiProblem p = model_problem(ArcSpec(kPi, kPi));
    RiccatiResummer rs(p, K);
    for (double epsv : {-0.1, -0.05, -0.02}) {
        for (cd x : {cd{0.3, 0.0}, cd{0.2, 0.2}, cd{-0.1, 0.3}}) {
            cd eps{epsv, 0.0};
            cd want = -eps * x / (1.0 - eps);
            auto ev = rs.eval(x, eps);
            CHECK(std::abs(ev.s - want) < 1e-6);
            // x d/dx of -eps x/(1-eps) is the value itself
            CHECK(std::abs(ev.xdx_s - want) < 1e-5);
            CHECK(std::abs(rs.eval_pade(x, eps) - want) < 1e-8);
            CHECK(rs.residual_at(x, eps) < 1e-5);
        }
    }
}

TEST_CASE("resum_riccati glues adjacent directions consistently") {
    ArcSpec arc(kPi - kPi / 8, kPi + kPi / 8);
    RiccatiProblem p = model_problem(arc);
    std::vector<cd> xs{cd{0.3, 0.0}, cd{0.1, 0.2}};
    std::vector<cd> eps_list{cd{-0.1, 0.0}, cd{-0.05, 0.01}, cd{-0.02, 0.0}};
    ResumResult rr = resum_riccati(p, K, xs, eps_list);
    CHECK(rr.thetas.size() >= 2);
    CHECK(rr.overlap_max < 1e-6);
    CHECK(rr.residual_max < 1e-5);
    for (const auto& smp : rr.samples)
        CHECK(std::abs(smp.s - (-smp.eps * smp.x / (1.0 - smp.eps))) < 1e-6);
}
