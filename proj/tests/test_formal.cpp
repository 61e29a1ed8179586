#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sps2/formal.hpp"

using namespace sps2;

namespace {

constexpr int K = 10;
constexpr int N = 12;

RiccatiProblem model_problem() {
    // eps x s' = eps x + s : solved exactly by s = -eps x / (1 - eps)
    ArcSpec arc(0.0, 0.0);
    RiccatiProblem p;
    p.a = EpsExpansion(K, N, 1.0, arc);
    p.a.order(1)[1] = 1.0;
    p.b = EpsExpansion::constant(1.0, K, N, 1.0, arc);
    p.c = EpsExpansion(K, N, 1.0, arc);
    p.arc = arc;
    return p;
}

RiccatiProblem generic_problem() {
    ArcSpec arc(0.0, 0.0);
    RiccatiProblem p;
    p.a = EpsExpansion(K, N, 1.0, arc);
    p.a.order(1)[1] = 0.4;
    p.a.order(1)[2] = cd{-0.1, 0.2};
    p.a.order(2)[1] = 0.05;
    p.b = EpsExpansion::constant(cd{1.0, 0.3}, K, N, 1.0, arc);
    p.b.order(0)[1] = 0.2;
    p.b.order(1)[0] = -0.1;
    p.c = EpsExpansion(K, N, 1.0, arc);
    p.c.order(1)[0] = 0.3;
    p.c.order(1)[2] = -0.2;
    p.arc = arc;
    return p;
}

}  // namespace

TEST_CASE("model Riccati: every order is s_k = -x") {
    auto sol = solve_formal_riccati(model_problem(), K);
    CHECK(sol.s.order(0).coeff_norm() == doctest::Approx(0.0));
    for (int k = 1; k <= K; ++k) {
        CHECK(std::abs(sol.s.order(k)[1] - cd(-1.0)) < 1e-13);
        for (int n = 0; n <= N; ++n)
            if (n != 1) CHECK(std::abs(sol.s.order(k)[n]) < 1e-13);
    }
    CHECK(sol.residual_norm < 1e-12);
}

TEST_CASE("riccati_residual vanishes through the solved order and detects errors") {
    auto p = generic_problem();
    auto sol = solve_formal_riccati(p, K);
    EpsExpansion r = riccati_residual(p, sol.s);
    for (int k = 0; k <= K; ++k)
        CHECK(r.order(k).coeff_norm() < 1e-12 * (1 + sol.s.order(k).coeff_norm()));

    EpsExpansion wrong = sol.s;
    wrong.order(2)[1] += 0.01;
    EpsExpansion rw = riccati_residual(p, wrong);
    double worst = 0.0;
    for (int k = 0; k <= K; ++k) worst = std::max(worst, rw.order(k).coeff_norm());
    CHECK(worst > 1e-3);
}

TEST_CASE("validate rejects problems outside the solvable class") {
    auto p = generic_problem();
    p.b.order(0)[0] = 0.0;  // b(0,0) = 0
    CHECK_THROWS_AS(p.validate(), HypothesisError);

    auto q = generic_problem();
    q.a.order(0)[2] = 1.0;  // a(x, 0) != 0
    CHECK_THROWS_AS(q.validate(), HypothesisError);
}

TEST_CASE("Gevrey certificate dominates the solution sup norms") {
    auto sol = solve_formal_riccati(generic_problem(), K);
    double fact = 1.0, pw = 1.0;
    for (int k = 0; k <= K; ++k) {
        CHECK(sol.s.order(k).sup_norm() <= sol.gevrey.C * pw * fact * (1 + 1e-10) + 1e-300);
        pw *= sol.gevrey.M;
        fact *= (k + 1.0);
    }
}

TEST_CASE("majorant sequences: literal values from the recursions") {
    // quadratic kind with A = B = A0 = 1 generates the Catalan numbers
    auto q = majorant_sequence(1.0, 1.0, 1.0, 0.0, MajorantKind::quadratic, 4);
    const double cat[5] = {0.0, 1.0, 2.0, 5.0, 14.0};
    for (int k = 0; k <= 4; ++k) CHECK(q.M[std::size_t(k)] == doctest::Approx(cat[k]));

    auto r = majorant_sequence(1.0, 1.0, 1.0, 0.0, MajorantKind::riccati, 4);
    const double ric[5] = {0.0, 1.0, 3.0, 9.0, 30.0};
    for (int k = 0; k <= 4; ++k) CHECK(r.M[std::size_t(k)] == doctest::Approx(ric[k]));

    auto b = majorant_sequence(0.0, 0.0, 0.0, 1.0, MajorantKind::borel, 5);
    const double bor[6] = {0.0, 1.0, 1.0, 2.0, 4.0, 9.0};
    for (int k = 0; k <= 5; ++k) CHECK(b.M[std::size_t(k)] == doctest::Approx(bor[k]));
}

TEST_CASE("majorant overflow is reported with the offending index") {
    try {
        (void)majorant_sequence(1e200, 10.0, 1e3, 0.0, MajorantKind::quadratic, 64);
        FAIL("expected OverflowError");
    } catch (const OverflowError& e) {
        CHECK(e.offending_k >= 1);
    }
}

TEST_CASE("geometric fit of a majorant sequence dominates it") {
    auto q = majorant_sequence(0.5, 1.2, 1.1, 0.0, MajorantKind::quadratic, 64);
    double pw = 1.0;
    for (std::size_t k = 0; k < q.M.size(); ++k) {
        CHECK(q.M[k] <= q.geometric.C * pw * (1 + 1e-10));
        pw *= q.geometric.M;
    }
}

TEST_CASE("fit_input_constants gives a valid factorial envelope") {
    auto sol = solve_formal_riccati(generic_problem(), K);
    auto [A, B] = fit_input_constants(sol.s);
    CHECK(A > 0.0);
    double fact = 1.0, pw = 1.0;
    for (int k = 0; k <= K; ++k) {
        CHECK(sol.s.order(k).sup_norm() <= A * pw * fact * (1 + 1e-10));
        pw *= B;
        fact *= (k + 1.0);
    }
}

TEST_CASE("formal normal form of a pre-diagonalised system") {
    ArcSpec arc(0.0, 0.0);
    SystemSpec sys;
    sys.arc = arc;
    sys.disc_radius = 1.0;
    sys.sector_radius = 0.1;
    sys.A = Mat2E::zero(K, N, 1.0, arc);
    sys.A(0, 0).order(0)[0] = -1.0;
    sys.A(1, 1).order(0)[0] = 1.0;
    sys.A(0, 0).order(0)[2] = 0.1;
    sys.A(1, 1).order(0)[1] = -0.2;
    // off-diagonal vanishing at x = 0 and eps = 0
    sys.A(0, 1).order(1)[1] = 0.3;
    sys.A(1, 0).order(1)[2] = -0.2;
    sys.A(0, 1).order(2)[1] = 0.05;

    FormalNormalForm nf = solve_formal_normal_form(sys);
    CHECK(nf.residual_norm < 1e-11);
    Mat2E res = normal_form_residual(sys, nf);
    CHECK(res.coeff_norm() < 1e-11);
    // the normal form is diagonal: lambda_i(x, 0) agrees with a_ii(x, 0)
    CHECK((nf.lambda1.order(0) - sys.A(0, 0).order(0)).coeff_norm() < 1e-12);
    CHECK((nf.lambda2.order(0) - sys.A(1, 1).order(0)).coeff_norm() < 1e-12);
    // unipotent gauge whose off-diagonal entries start at order eps
    CHECK(nf.G.G(0, 1).order(0).coeff_norm() < 1e-13);
    CHECK(nf.G.G(1, 0).order(0).coeff_norm() < 1e-13);
}
