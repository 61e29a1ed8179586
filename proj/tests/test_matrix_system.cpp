#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "sps2/matrix_system.hpp"

using namespace sps2;

namespace {

constexpr int K = 8;
constexpr int N = 12;

SystemSpec make_system(ArcSpec arc = ArcSpec(0.0, 0.0)) {
    SystemSpec sys;
    sys.A = Mat2E::zero(K, N, 1.0, arc);
    sys.arc = arc;
    sys.disc_radius = 1.0;
    sys.sector_radius = 0.1;
    return sys;
}

}  // namespace

TEST_CASE("eigenvalues2 / eigenvector2 on a constant matrix") {
    std::array<std::array<cd, 2>, 2> m{{{cd{1.0, 0.0}, cd{2.0, 0.0}}, {cd{3.0, 0.0}, cd{2.0, 0.0}}}};
    auto [l1, l2] = eigenvalues2(m);
    // roots of t^2 - 3t - 4: -1 and 4
    double lo = std::min(l1.real(), l2.real()), hi = std::max(l1.real(), l2.real());
    CHECK(lo == doctest::Approx(-1.0));
    CHECK(hi == doctest::Approx(4.0));
    for (cd l : {l1, l2}) {
        auto v = eigenvector2(m, l);
        cd r0 = m[0][0] * v[0] + m[0][1] * v[1] - l * v[0];
        cd r1 = m[1][0] * v[0] + m[1][1] * v[1] - l * v[1];
        CHECK(std::abs(r0) < 1e-12);
        CHECK(std::abs(r1) < 1e-12);
        CHECK(std::abs(std::abs(v[0]) * std::abs(v[0]) + std::abs(v[1]) * std::abs(v[1]) - 1.0) < 1e-12);
    }
}

TEST_CASE("classical eigenvalue branches of [[-1, x], [x, 1]] are -+sqrt(1 + x^2)") {
    SystemSpec sys = make_system();
    sys.A(0, 0).order(0)[0] = -1.0;
    sys.A(1, 1).order(0)[0] = 1.0;
    sys.A(0, 1).order(0)[1] = 1.0;
    sys.A(1, 0).order(0)[1] = 1.0;
    ClassicalData cl = classical_data(sys);
    CHECK(std::abs(cl.m1 - cd(-1.0)) < 1e-12);
    CHECK(std::abs(cl.m2 - cd(1.0)) < 1e-12);
    // -sqrt(1 + x^2) = -1 - x^2/2 + x^4/8 - x^6/16 + ...
    const double want[7] = {-1.0, 0.0, -0.5, 0.0, 0.125, 0.0, -1.0 / 16};
    for (int n = 0; n < 7; ++n) {
        CHECK(std::abs(cl.eta1[n] - cd(want[n])) < 1e-12);
        CHECK(std::abs(cl.eta2[n] + cd(want[n])) < 1e-12);
    }
}

TEST_CASE("genericity and nonresonance violations are reported") {
    SystemSpec sys = make_system();
    // equal eigenvalues at (0,0)
    sys.A(0, 0).order(0)[0] = 1.0;
    sys.A(1, 1).order(0)[0] = 1.0;
    CHECK_THROWS_AS((void)classical_data(sys), GenericityError);

    // eigenvalues +-i are resonant for the direction theta = 0
    SystemSpec res = make_system();
    res.A(0, 0).order(0)[0] = cd{0.0, -1.0};
    res.A(1, 1).order(0)[0] = cd{0.0, 1.0};
    CHECK_THROWS_AS((void)classical_data(res), ResonanceError);
}

TEST_CASE("residue_diagonalise: upper-triangular example g12 = -eps/2") {
    ArcSpec arc(0.0, 0.0);
    Mat2E R = Mat2E::zero(K, N, 1.0, arc);
    R(0, 0).order(0)[0] = -1.0;
    R(1, 1).order(0)[0] = 1.0;
    R(0, 1).order(1)[0] = 1.0;  // eps in the corner
    ResidueDiag rd = residue_diagonalise(R);
    CHECK(std::abs(rd.G.a[0][1].order(1)[0] - cd(-0.5)) < 1e-12);
    CHECK(rd.G.a[1][0].coeff_norm() == doctest::Approx(0.0));
    CHECK(std::abs(rd.rho1.order(0)[0] - cd(-1.0)) < 1e-12);
    CHECK(std::abs(rd.rho2.order(0)[0] - cd(1.0)) < 1e-12);
    for (int k = 1; k <= K; ++k) {
        CHECK(std::abs(rd.rho1.order(k)[0]) < 1e-12);
        CHECK(std::abs(rd.rho2.order(k)[0]) < 1e-12);
    }
}

TEST_CASE("residue_diagonalise: symmetric example rho = -+sqrt(1 + eps^2)") {
    ArcSpec arc(0.0, 0.0);
    Mat2E R = Mat2E::zero(K, N, 1.0, arc);
    R(0, 0).order(0)[0] = -1.0;
    R(1, 1).order(0)[0] = 1.0;
    R(0, 1).order(1)[0] = 1.0;
    R(1, 0).order(1)[0] = 1.0;
    ResidueDiag rd = residue_diagonalise(R);
    // -sqrt(1 + eps^2) = -1 - eps^2/2 + eps^4/8 - eps^6/16
    const double want[7] = {-1.0, 0.0, -0.5, 0.0, 0.125, 0.0, -1.0 / 16};
    for (int k = 0; k < 7; ++k) {
        CHECK(std::abs(rd.rho1.order(k)[0] - cd(want[k])) < 1e-12);
        CHECK(std::abs(rd.rho2.order(k)[0] + cd(want[k])) < 1e-12);
    }
    // the gauge actually diagonalises R through the stored orders
    Mat2E D = rd.G * R * rd.G.inverse();
    CHECK(D(0, 1).coeff_norm() < 1e-12);
    CHECK(D(1, 0).coeff_norm() < 1e-12);
}

TEST_CASE("apply_gauge: constant gauge is plain conjugation") {
    ArcSpec arc(0.0, 0.0);
    Mat2E A = Mat2E::zero(K, N, 1.0, arc);
    A(0, 0).order(0)[0] = 2.0;
    A(0, 1).order(1)[1] = 1.0;
    A(1, 0).order(0)[2] = 0.5;
    A(1, 1).order(0)[0] = -1.0;
    Mat2E G = Mat2E::from_constant({{{cd{1.0}, cd{0.3}}, {cd{-0.2}, cd{1.0}}}}, K, N, 1.0, arc);
    Mat2E lhs = apply_gauge(G, A);
    Mat2E rhs = G * A * G.inverse();
    CHECK((lhs - rhs).coeff_norm() < 1e-13);
}

TEST_CASE("apply_gauge: derivative term for G = diag(1, 1 + x)") {
    ArcSpec arc(0.0, 0.0);
    Mat2E A = Mat2E::zero(K, N, 1.0, arc);
    A(0, 0).order(0)[0] = 2.0;
    A(0, 1).order(0)[0] = 1.0;
    A(1, 0).order(0)[0] = 1.0;
    A(1, 1).order(0)[0] = -1.0;
    Mat2E G = Mat2E::identity(K, N, 1.0, arc);
    G(1, 1).order(0)[1] = 1.0;  // 1 + x
    Mat2E out = apply_gauge(G, A);
    // (1,2) entry divides by (1 + x), (2,1) multiplies, diagonal (2,2) picks
    // up -eps x / (1 + x) = -eps (x - x^2 + x^3 - ...)
    for (int n = 0; n <= N; ++n) {
        double sgn = (n % 2 == 0) ? 1.0 : -1.0;
        CHECK(std::abs(out(0, 1).order(0)[n] - cd(sgn)) < 1e-12);
    }
    CHECK(std::abs(out(1, 0).order(0)[0] - cd(1.0)) < 1e-12);
    CHECK(std::abs(out(1, 0).order(0)[1] - cd(1.0)) < 1e-12);
    for (int n = 1; n <= N; ++n) {
        double sgn = (n % 2 == 1) ? -1.0 : 1.0;  // -eps x/(1+x) = eps sum (-1)^n x^n
        CHECK(std::abs(out(1, 1).order(1)[n] - cd(sgn)) < 1e-12);
    }
    CHECK(std::abs(out(0, 0).order(0)[0] - cd(2.0)) < 1e-12);
}

TEST_CASE("apply_gauge rejects gauges that degenerate at the origin") {
    ArcSpec arc(0.0, 0.0);
    Mat2E A = Mat2E::identity(K, N, 1.0, arc);
    Mat2E G = Mat2E::zero(K, N, 1.0, arc);
    G(0, 0).order(0)[0] = 1.0;
    G(1, 1).order(0)[1] = 1.0;  // diag(1, x): det(0,0) = 0
    CHECK_THROWS_AS((void)apply_gauge(G, A), StructuralError);
}

TEST_CASE("gauge transforms compose as a group action") {
    ArcSpec arc(0.0, 0.0);
    Mat2E A = Mat2E::zero(K, N, 1.0, arc);
    A(0, 0).order(0)[0] = -1.0;
    A(1, 1).order(0)[0] = 1.5;
    A(0, 1).order(1)[1] = 0.4;
    A(1, 0).order(1)[2] = -0.3;
    Mat2E G1 = Mat2E::identity(K, N, 1.0, arc);
    G1(0, 1).order(1)[1] = 0.2;
    Mat2E G2 = Mat2E::identity(K, N, 1.0, arc);
    G2(1, 0).order(0)[1] = -0.5;
    G2(0, 0).order(1)[0] = 0.1;
    Mat2E lhs = apply_gauge(G2, apply_gauge(G1, A));
    Mat2E rhs = apply_gauge(G2 * G1, A);
    CHECK((lhs - rhs).coeff_norm() < 1e-12);
}

TEST_CASE("pre_diagonalise produces Lambda + B with the stated vanishing") {
    SystemSpec sys = make_system();
    sys.A(0, 0).order(0)[0] = -1.0;
    sys.A(1, 1).order(0)[0] = 1.0;
    sys.A(0, 0).order(0)[1] = 0.2;
    sys.A(0, 1).order(0)[1] = 0.3;
    sys.A(1, 0).order(0)[2] = -0.25;
    sys.A(0, 1).order(1)[0] = 0.15;
    sys.A(1, 0).order(1)[0] = -0.1;
    sys.A(1, 1).order(2)[1] = 0.05;
    PreDiagResult pd = pre_diagonalise(sys);

    // Lambda is diagonal with lambda_i = eta_i + eps kappa_i
    CHECK(pd.Lambda(0, 1).coeff_norm() == doctest::Approx(0.0));
    CHECK(pd.Lambda(1, 0).coeff_norm() == doctest::Approx(0.0));
    CHECK(std::abs(pd.spec.lambda1.order(0)[0] - pd.spec.m1) < 1e-12);
    CHECK(std::abs(pd.spec.lambda2.order(0)[0] - pd.spec.m2) < 1e-12);

    // B vanishes at x = 0 and at eps = 0
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            CHECK(pd.B(i, j).order(0).coeff_norm() < 1e-12);
            for (int k = 0; k <= K; ++k) CHECK(std::abs(pd.B(i, j).order(k)[0]) < 1e-12);
        }

    // the transformed system really is the gauge image, split as Lambda + B
    Mat2E img = apply_gauge(pd.G.G, sys.A);
    CHECK((img - (pd.Lambda + pd.B)).coeff_norm() < 1e-11);
    CHECK((pd.transformed.A - img).coeff_norm() < 1e-11);
}
