#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "sps2/levelt.hpp"

using namespace sps2;

namespace {

constexpr int K = 10;
constexpr int N = 16;

SystemSpec blank_system(ArcSpec arc = ArcSpec(0.0, 0.0)) {
    SystemSpec sys;
    sys.A = Mat2E::zero(K, N, 1.0, arc);
    sys.arc = arc;
    sys.disc_radius = 1.0;
    sys.sector_radius = 0.1;
    return sys;
}

// diag(-1 + 0.5 x, 1): already in normal form
SystemSpec diagonal_system() {
    SystemSpec sys = blank_system();
    sys.A(0, 0).order(0)[0] = -1.0;
    sys.A(0, 0).order(0)[1] = 0.5;
    sys.A(1, 1).order(0)[0] = 1.0;
    return sys;
}

// mild coupled example, already pre-diagonalised (off-diagonal O(eps x))
SystemSpec coupled_system() {
    SystemSpec sys = blank_system();
    sys.A(0, 0).order(0)[0] = -1.0;
    sys.A(1, 1).order(0)[0] = 1.0;
    sys.A(1, 1).order(0)[1] = 0.1;
    sys.A(0, 1).order(1)[1] = 0.3;
    sys.A(1, 0).order(1)[1] = 0.2;
    sys.A(0, 1).order(1)[2] = -0.1;
    return sys;
}

}  // namespace

TEST_CASE("direction_angle basics") {
    Vec2 u{cd{1.0}, cd{0.0}}, v{cd{0.0}, cd{1.0}};
    CHECK(direction_angle(u, u) < 1e-12);
    Vec2 su{cd{0.0, 2.0} * u[0], cd{0.0, 2.0} * u[1]};
    CHECK(direction_angle(u, su) < 1e-12);
    CHECK(direction_angle(u, v) == doctest::Approx(3.14159265358979323846 / 2));
}

TEST_CASE("flow integrals have their closed form on a diagonal system") {
    SystemSpec sys = diagonal_system();
    PreDiagResult pd = pre_diagonalise(sys);
    TriangularSystem T(pd.transformed, pd.spec, K);
    cd eps{0.1, 0.0};
    CHECK(std::abs(T.nu1(eps) - cd(-1.0)) < 1e-12);
    CHECK(std::abs(T.nu2(eps) - cd(1.0)) < 1e-12);

    cd xst = T.x_star();
    std::vector<cd> xs{xst, cd{0.4}, cd{0.2}, cd{0.1}};
    FlowIntegrals fl = flow_integrals(T, xst, eps, xs);
    for (std::size_t k = 0; k < xs.size(); ++k) {
        cd x = xs[k];
        // f1 = (x/x*)^{10} e^{-5 (x - x*)}, f2 = (x/x*)^{-10}
        cd want1 = std::pow(x / xst, 10.0) * std::exp(-5.0 * (x - xst));
        cd want2 = std::pow(x / xst, -10.0);
        CHECK(std::abs(fl.f1[k] - want1) < 1e-9 * std::abs(want1));
        CHECK(std::abs(fl.f2[k] - want2) < 1e-9 * std::abs(want2));
        CHECK(std::abs(fl.f12[k] * fl.f21[k] - cd(1.0)) < 1e-10);
    }
}

TEST_CASE("coupling_core: constant driving term, nonresonant") {
    cd eps{0.11, 0.0}, nu12{-2.0, 0.0}, g0{0.7, 0.2};  // nu12/eps is not a negative integer
    XSeries mu12(N, 1.0);  // zero
    auto u_fn = [g0](cd) { return g0; };
    CouplingC12 c = coupling_core(eps, nu12, mu12, u_fn, cd{0.8}, 0.8, CouplingForm::display);
    // c12(x) = -x g0 / (1 + nu12/eps) = -x g0 / (1 - 20)
    for (cd x : {cd{0.1}, cd{0.05, 0.05}, cd{-0.2, 0.1}}) {
        cd want = -x * g0 / (1.0 + nu12 / eps);
        CHECK(std::abs(c(x) - want) < 1e-9 * (1 + std::abs(want)));
    }
    CHECK(c.resonant_n.empty());
}

TEST_CASE("coupling_core: resonant case produces -g0 x log x") {
    cd nu12{-2.0, 0.0};
    cd eps = nu12 / cd(-1.0);  // nu12/eps = -1: the n = 0 term is resonant
    cd g0{0.5, -0.3};
    XSeries mu12(N, 1.0);
    auto u_fn = [g0](cd) { return g0; };
    CouplingC12 c = coupling_core(eps, nu12, mu12, u_fn, cd{0.8}, 0.8, CouplingForm::display);
    REQUIRE(!c.resonant_n.empty());
    CHECK(c.resonant_n[0] == 0);
    for (cd x : {cd{0.1}, cd{0.2, 0.1}}) {
        cd want = -g0 * x * std::log(x);
        CHECK(std::abs(c(x) - want) < 1e-8 * (1 + std::abs(want)));
    }
}

TEST_CASE("coupling_core: zero driving term gives the zero solution") {
    XSeries mu12(N, 1.0);
    CouplingC12 c = coupling_core(cd{0.05}, cd{-2.0}, mu12, [](cd) { return cd{0.0}; }, cd{0.8},
                                  0.8, CouplingForm::display);
    CHECK(std::abs(c(cd{0.2, 0.1})) < 1e-14);
    CHECK(c.kappa_x < 1e-14);
}

TEST_CASE("coupling_core solution satisfies the display ODE") {
    cd eps{0.07, 0.0}, nu12{-2.0, 0.0};
    XSeries mu12(N, 1.0);
    mu12[0] = cd{0.3, 0.1};  // lambda2 - lambda1 = -nu12 - x * mu12
    auto u_fn = [](cd t) { return t + cd{0.3} * t * t; };
    CouplingC12 c = coupling_core(eps, nu12, mu12, u_fn, cd{0.8}, 0.8, CouplingForm::display);
    for (cd x : {cd{0.2}, cd{0.1, 0.1}, cd{-0.15, 0.05}}) {
        double h = 1e-4;
        cd dc = (c(x * (1.0 + h)) - c(x * (1.0 - h))) / (2.0 * h);  // x dc/dx
        cd lam21 = -nu12 - x * mu12.eval(x);
        cd res = eps * dc - lam21 * c(x) + eps * x * u_fn(x);
        CHECK(std::abs(res) < 1e-6 * (1 + std::abs(c(x))));
    }
}

TEST_CASE("triangularise: diagonal system is already triangular") {
    SystemSpec sys = diagonal_system();
    std::vector<cd> eps_list{cd{0.1}, cd{0.05}};
    TriangularisationResult tr = triangularise(sys, eps_list, K, {}, 81);
    CHECK(tr.gauge_residual < 1e-8);
    CHECK(tr.u_at_zero < 1e-14);
    for (double us : tr.u_sup_per_eps) CHECK(us < 1e-12);
}

TEST_CASE("triangularise: coupled system meets the gauge-residual budget") {
    SystemSpec sys = coupled_system();
    std::vector<cd> eps_list{cd{0.1}, cd{0.05}, cd{0.025}};
    TriangularisationResult tr = triangularise(sys, eps_list, K, {}, 81);
    CHECK(tr.gauge_residual < 1e-5);
    CHECK(tr.u_at_zero < 1e-9);
    // |u| shrinks with eps (the upper-right entry is O(eps x))
    REQUIRE(tr.u_sup_per_eps.size() == 3);
    CHECK(tr.u_sup_per_eps[0] > tr.u_sup_per_eps[1]);
    CHECK(tr.u_sup_per_eps[1] > tr.u_sup_per_eps[2]);
}

TEST_CASE("coupling of a triangular system is basepoint independent") {
    SystemSpec sys = coupled_system();
    PreDiagResult pd = pre_diagonalise(sys);
    TriangularSystem T(pd.transformed, pd.spec, K);
    cd eps{0.05, 0.0};
    CouplingC12 c0 = coupling_c12(T, eps);
    cd moved = T.r0() * std::exp(cd{0.0, 2.0});
    CouplingC12 c1 = coupling_c12(T, eps, CouplingForm::display, moved);
    double worst = 0.0;
    for (cd x : {cd{0.2}, cd{0.1, 0.1}, cd{0.05, -0.05}, cd{-0.1, 0.2}})
        worst = std::max(worst, std::abs(c0(x) - c1(x)));
    CHECK(worst < 1e-8);
}

TEST_CASE("solution basis: residual and growth exponents") {
    SystemSpec sys = coupled_system();
    PreDiagResult pd = pre_diagonalise(sys);
    TriangularSystem T(pd.transformed, pd.spec, K);
    cd eps{0.1, 0.0};
    SolutionBasis sb = solution_basis(T, eps, 161);
    CHECK(sb.residual < 1e-6);
    // growth of phi_i is -Re(nu_i / eps): +10 and -10 here
    CHECK(sb.growth1 == doctest::Approx(10.0).epsilon(0.01));
    CHECK(sb.growth2 == doctest::Approx(-10.0).epsilon(0.01));
    CHECK(sb.growth1 > sb.growth2);
}

TEST_CASE("levelt_filtration on a constant diagonal system hits the axes") {
    SystemSpec sys = blank_system();
    sys.A(0, 0).order(0)[0] = -1.0;
    sys.A(1, 1).order(0)[0] = 1.0;
    LeveltResult L = levelt_filtration(sys, {cd{0.1}}, K, 121);
    REQUIRE(L.frames.size() == 1);
    const LeveltFrame& fr = L.frames[0];
    CHECK(direction_angle(fr.e1_limit, Vec2{cd{1.0}, cd{0.0}}) < 1e-10);
    CHECK(direction_angle(fr.e2_limit, Vec2{cd{0.0}, cd{1.0}}) < 1e-10);
    CHECK(fr.angle_rho1 < 1e-10);
    CHECK(fr.angle_rho2 < 1e-10);
    CHECK(fr.c12_sup_over_x < 1e-12);
    CHECK(fr.eigen_residual < 1e-8);
}

TEST_CASE("levelt_filtration on the coupled system: limits and alignments") {
    SystemSpec sys = coupled_system();
    LeveltResult L = levelt_filtration(sys, {cd{0.05}, cd{0.01}}, K, 121);
    REQUIRE(L.frames.size() == 2);
    for (const LeveltFrame& fr : L.frames) {
        CHECK(fr.angle_rho1 < 1e-6);
        CHECK(fr.angle_rho2 < 1e-6);
        CHECK(fr.eigen_residual < 1e-4);
        CHECK(std::abs(fr.nu12 - cd(-2.0)) < 1e-10);
    }
    CHECK(L.angle_eta_max < 1e-3);

    PsiBasis pb = psi_basis(L, 0);
    CHECK(pb.growth1 > pb.growth2);
    CHECK(pb.growth1 == doctest::Approx(1.0 / 0.05).epsilon(0.01));
    CHECK(pb.growth2 == doctest::Approx(-1.0 / 0.05).epsilon(0.01));
}

TEST_CASE("levelt frames are covariant under a constant gauge") {
    SystemSpec sys = coupled_system();
    Mat2E H = Mat2E::from_constant({{{cd{1.0}, cd{0.3}}, {cd{-0.2}, cd{1.0}}}}, K, N, 1.0,
                                   sys.arc);
    SystemSpec sys2 = sys;
    sys2.A = apply_gauge(H, sys.A);
    LeveltResult L1 = levelt_filtration(sys, {cd{0.05}}, K, 121);
    LeveltResult L2 = levelt_filtration(sys2, {cd{0.05}}, K, 121);
    auto push = [](const Vec2& v) {
        return Vec2{v[0] + cd{0.3} * v[1], cd{-0.2} * v[0] + v[1]};
    };
    CHECK(direction_angle(push(L1.frames[0].e1_limit), L2.frames[0].e1_limit) < 1e-6);
    CHECK(direction_angle(push(L1.frames[0].e2_limit), L2.frames[0].e2_limit) < 1e-6);
}

TEST_CASE("resonant eps values enumerate (nu2 - nu1)/(n + 1)") {
    SystemSpec sys = coupled_system();
    PreDiagResult pd = pre_diagonalise(sys);
    TriangularSystem T(pd.transformed, pd.spec, K);
    auto res = resonant_eps_values(T, 0.5);
    REQUIRE(!res.empty());
    CHECK(std::abs(res[0] - cd(0.5)) < 1e-8);  // (nu2 - nu1)/4 = 2/4
    for (cd e : res) CHECK(std::abs(e) <= 0.5 + 1e-12);
}
