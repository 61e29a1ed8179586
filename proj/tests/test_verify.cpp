#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "sps2/verify.hpp"

using namespace sps2;

namespace {

constexpr int K = 8;
constexpr int N = 12;

SystemSpec diagonal_system() {
    ArcSpec arc(0.0, 0.0);
    SystemSpec sys;
    sys.A = Mat2E::zero(K, N, 1.0, arc);
    sys.arc = arc;
    sys.disc_radius = 1.0;
    sys.sector_radius = 0.1;
    sys.A(0, 0).order(0)[0] = -1.0;
    sys.A(1, 1).order(0)[0] = 1.0;
    return sys;
}

}  // namespace

TEST_CASE("fixed-eps integration of a constant diagonal system is a power law") {
    SystemSpec sys = diagonal_system();
    cd eps{0.1, 0.0}, x0{0.5, 0.0}, x1{0.1, 0.0};
    OdeTrace tr = integrate_fixed_eps(sys, eps, x0, x1, Vec2{cd{1.0}, cd{0.0}});
    REQUIRE(!tr.values.empty());
    // eps x psi' = psi  =>  psi1(x) = (x/x0)^{10}
    cd want = std::pow(x1 / x0, 10.0);
    CHECK(std::abs(tr.values.back()[0] - want) < 1e-8 * std::abs(want));
    CHECK(std::abs(tr.values.back()[1]) < 1e-10);

    OdeTrace tr2 = integrate_fixed_eps(sys, eps, x0, x1, Vec2{cd{0.0}, cd{1.0}});
    cd want2 = std::pow(x1 / x0, -10.0);
    CHECK(std::abs(tr2.values.back()[1] - want2) < 1e-8 * std::abs(want2));
}

TEST_CASE("integration is linear in the initial data") {
    SystemSpec sys = diagonal_system();
    sys.A(0, 1).order(0)[1] = 0.4;  // make it non-diagonal
    sys.A(1, 0).order(0)[1] = -0.3;
    cd eps{0.1, 0.0}, x0{0.5, 0.0}, x1{0.2, 0.1};
    Vec2 u{cd{1.0}, cd{0.5}}, v{cd{-0.3}, cd{1.0}};
    cd al{0.7, 0.1}, be{-0.4, 0.2};
    auto end = [&](Vec2 init) { return integrate_fixed_eps(sys, eps, x0, x1, init).values.back(); };
    Vec2 eu = end(u), ev = end(v);
    Vec2 ec = end(Vec2{al * u[0] + be * v[0], al * u[1] + be * v[1]});
    double scale = std::abs(eu[0]) + std::abs(eu[1]) + std::abs(ev[0]) + std::abs(ev[1]);
    CHECK(std::abs(ec[0] - (al * eu[0] + be * ev[0])) < 1e-8 * scale);
    CHECK(std::abs(ec[1] - (al * eu[1] + be * ev[1])) < 1e-8 * scale);
}

TEST_CASE("transfer_matrix reproduces individual trajectories") {
    SystemSpec sys = diagonal_system();
    sys.A(1, 0).order(0)[1] = 0.25;
    cd eps{0.05, 0.0}, x0{0.5, 0.0}, x1{0.1, 0.0};
    Mat2 T = transfer_matrix(sys, eps, x0, x1);
    Vec2 init{cd{0.3, 0.1}, cd{1.0, -0.2}};
    Vec2 direct = integrate_fixed_eps(sys, eps, x0, x1, init).values.back();
    Vec2 via{T[0][0] * init[0] + T[0][1] * init[1], T[1][0] * init[0] + T[1][1] * init[1]};
    double scale = std::abs(direct[0]) + std::abs(direct[1]);
    CHECK(std::abs(via[0] - direct[0]) < 1e-8 * scale);
    CHECK(std::abs(via[1] - direct[1]) < 1e-8 * scale);
}

TEST_CASE("too-stiff eps is refused") {
    SystemSpec sys = diagonal_system();
    CHECK_THROWS_AS(
        (void)integrate_fixed_eps(sys, cd{1e-4, 0.0}, cd{0.5}, cd{0.1}, Vec2{cd{1.0}, cd{0.0}}),
        StiffnessError);
}

TEST_CASE("slow_direction picks the subdominant axis of a diagonal system") {
    SystemSpec sys = diagonal_system();
    cd eps{0.1, 0.0};
    Vec2 d = slow_direction(sys, eps, cd{0.5}, cd{0.01});
    CHECK(direction_angle(d, Vec2{cd{1.0}, cd{0.0}}) < 1e-6);
}

TEST_CASE("auxiliary integral estimates hold on the scan grid") {
    SuiteReport rep = appendix_estimates_suite();
    for (const auto& f : rep.failures) MESSAGE(f);
    CHECK(rep.passed);
    CHECK(!rep.checks.empty());
}

TEST_CASE("rearrangement residuals vanish / decay as expected") {
    SuiteReport rep = rearrangement_suite();
    for (const auto& f : rep.failures) MESSAGE(f);
    CHECK(rep.passed);
}

TEST_CASE("strip rearrangement residuals decay monotonically from K = 3") {
    ArcSpec arc(0.0, 0.0);
    RiccatiProblem p;
    p.a = EpsExpansion(K, N, 1.0, arc);
    p.a.order(1)[1] = 1.0;
    p.a.order(1)[2] = cd{0.2, 0.1};
    p.b = EpsExpansion::constant(-1.0, K, N, 1.0, arc);
    p.b.order(0)[1] = 0.1;
    p.c = EpsExpansion(K, N, 1.0, arc);
    p.c.order(1)[0] = 0.2;
    p.arc = arc;
    auto formal = solve_formal_riccati(p, K);
    StripInputs in = prepare_strip_inputs(p, formal.s, 0.0);
    StripProblem sp = straighten(in, cd{0.4, 0.0}, 1.0 / 64, 5.0);
    auto r = strip_rearrangement_residuals(sp, 7);
    REQUIRE(r.size() >= 6);
    for (std::size_t k = 3; k + 1 < r.size(); ++k) CHECK(r[k + 1] <= r[k] * (1 + 1e-12));
    CHECK(r.back() < r[1]);
}
