#include "sps2/matrix_system.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sps2 {

namespace {
constexpr double kPi = std::numbers::pi;
}

Mat2E Mat2E::zero(int K, int N, double radius, ArcSpec arc) {
    Mat2E m;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) m(i, j) = EpsExpansion(K, N, radius, arc);
    return m;
}

Mat2E Mat2E::identity(int K, int N, double radius, ArcSpec arc) {
    Mat2E m = zero(K, N, radius, arc);
    m(0, 0) = EpsExpansion::constant(1.0, K, N, radius, arc);
    m(1, 1) = EpsExpansion::constant(1.0, K, N, radius, arc);
    return m;
}

Mat2E Mat2E::from_constant(const std::array<std::array<cd, 2>, 2>& c, int K, int N, double radius,
                           ArcSpec arc) {
    Mat2E m = zero(K, N, radius, arc);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) m(i, j) = EpsExpansion::constant(c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], K, N, radius, arc);
    return m;
}

Mat2E Mat2E::operator+(const Mat2E& o) const {
    Mat2E r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r(i, j) = (*this)(i, j) + o(i, j);
    return r;
}

Mat2E Mat2E::operator-(const Mat2E& o) const {
    Mat2E r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r(i, j) = (*this)(i, j) - o(i, j);
    return r;
}

Mat2E Mat2E::operator*(const Mat2E& o) const {
    Mat2E r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r(i, j) = (*this)(i, 0) * o(0, j) + (*this)(i, 1) * o(1, j);
    return r;
}

EpsExpansion Mat2E::det() const {
    return (*this)(0, 0) * (*this)(1, 1) - (*this)(0, 1) * (*this)(1, 0);
}

Mat2E Mat2E::inverse() const {
    EpsExpansion d = det();
    if (std::abs(d.order(0)[0]) == 0.0)
        throw StructuralError("Mat2E: gauge not invertible near the origin (det(0,0) = 0)");
    EpsExpansion di = d.inverse();
    Mat2E r;
    r(0, 0) = di * (*this)(1, 1);
    r(1, 1) = di * (*this)(0, 0);
    r(0, 1) = -(di * (*this)(0, 1));
    r(1, 0) = -(di * (*this)(1, 0));
    return r;
}

Mat2E Mat2E::euler_derivative() const {
    Mat2E r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r(i, j) = (*this)(i, j).euler_derivative();
    return r;
}

double Mat2E::coeff_norm() const {
    double m = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) m = std::max(m, (*this)(i, j).coeff_norm());
    return m;
}

std::array<std::array<cd, 2>, 2> Mat2E::eval(cd x, cd eps) const {
    return {{{(*this)(0, 0).eval(x, eps), (*this)(0, 1).eval(x, eps)},
             {(*this)(1, 0).eval(x, eps), (*this)(1, 1).eval(x, eps)}}};
}

void SystemSpec::validate() const {
    if (!(disc_radius > 0.0) || !(sector_radius > 0.0))
        throw ValidationError("SystemSpec: radii must be positive");
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            EpsExpansion::check_compatible(A(i, j), A(0, 0));
            if (!(A(i, j).arc() == arc)) throw StructuralError("SystemSpec: entry arc differs from system arc");
        }
}

Mat2E apply_gauge(const Mat2E& G, const Mat2E& A) {
    Mat2E Gi = G.inverse();
    Mat2E conj = G * A * Gi;
    Mat2E dG = G.euler_derivative();  // x dG/dx
    Mat2E r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            EpsExpansion t = dG(i, 0) * Gi(0, j) + dG(i, 1) * Gi(1, j);
            r(i, j) = conj(i, j) - t.eps_shift_up();
        }
    return r;
}

SystemSpec apply_gauge(const GaugeTransform& G, const SystemSpec& sys) {
    SystemSpec out = sys;
    out.A = apply_gauge(G.G, sys.A);
    return out;
}

std::pair<cd, cd> eigenvalues2(const std::array<std::array<cd, 2>, 2>& m) {
    cd tr = m[0][0] + m[1][1];
    cd det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    cd disc = std::sqrt(tr * tr - 4.0 * det);
    return {0.5 * (tr - disc), 0.5 * (tr + disc)};
}

std::array<cd, 2> eigenvector2(const std::array<std::array<cd, 2>, 2>& m, cd lambda) {
    // Rows of (m - lambda I) are proportional; a kernel vector is orthogonal
    // to either row.  Pick the construction with the larger magnitude.
    std::array<cd, 2> v1 = {m[0][1], lambda - m[0][0]};
    std::array<cd, 2> v2 = {lambda - m[1][1], m[1][0]};
    double n1 = std::abs(v1[0]) + std::abs(v1[1]);
    double n2 = std::abs(v2[0]) + std::abs(v2[1]);
    std::array<cd, 2> v = (n1 >= n2) ? v1 : v2;
    double n = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
    if (n == 0.0) throw GenericityError("eigenvector2: zero eigenvector (defective matrix)");
    return {v[0] / n, v[1] / n};
}

namespace {

// Ordered eigenvalues of A(0,0) with the grid nonresonance / ordering checks.
std::pair<cd, cd> ordered_leading_eigenvalues(const SystemSpec& sys) {
    auto A00 = sys.A.eval(0.0, 0.0);
    auto [l1, l2] = eigenvalues2(A00);
    double scale = 1.0 + std::abs(l1) + std::abs(l2);
    if (std::abs(l1 - l2) <= 1e-10 * scale)
        throw GenericityError("classical_data: repeated eigenvalue of the leading residue");

    const int npts = 65;
    std::vector<double> thetas;
    if (sys.arc.theta_plus == sys.arc.theta_minus) {
        thetas.push_back(sys.arc.theta_minus);
    } else {
        for (int j = 0; j < npts; ++j)
            thetas.push_back(sys.arc.theta_minus +
                             (sys.arc.theta_plus - sys.arc.theta_minus) * j / (npts - 1));
    }
    cd delta = l1 - l2;
    for (double th : thetas) {
        if (std::abs(std::real(std::polar(1.0, -th) * delta)) < 1e-8)
            throw ResonanceError("classical_data: eigenvalue separation degenerates at theta = " +
                                 std::to_string(th));
    }
    // Ordering Re(e^{i theta} m1) < Re(e^{i theta} m2) for all grid theta;
    // refuse if the sign is inconsistent across the arc.
    bool first_ok = true, swap_ok = true;
    for (double th : thetas) {
        double d = std::real(std::polar(1.0, th) * delta);
        if (std::abs(d) < 1e-8) { first_ok = swap_ok = false; break; }
        if (d >= 0.0) first_ok = false;
        if (d <= 0.0) swap_ok = false;
    }
    if (first_ok) return {l1, l2};
    if (swap_ok) return {l2, l1};
    throw ResonanceError("classical_data: eigenvalue ordering changes sign across the arc");
}

// Newton iteration on the characteristic polynomial in truncated series
// arithmetic: eta^2 - T eta + D = 0 with eta(0) = m.
XSeries eigen_branch(const XSeries& T, const XSeries& D, cd m) {
    XSeries eta = XSeries::constant(m, T.trunc_order(), T.radius());
    XSeries two = XSeries::constant(2.0, T.trunc_order(), T.radius());
    int iters = 2;
    while ((1 << iters) <= T.trunc_order() + 1) ++iters;
    for (int i = 0; i <= iters; ++i) {
        XSeries F = eta * eta - T * eta + D;
        XSeries J = two * eta - T;
        eta = eta - F * J.inverse();
    }
    return eta;
}

// Order-by-order solve of a(e) + b(e) g + c(e) g^2 = 0 in scalar eps
// coefficients, with a_0 = c_0 = 0, b_0 != 0, g_0 = 0.
std::vector<cd> quadratic_branch(const std::vector<cd>& a, const std::vector<cd>& b,
                                 const std::vector<cd>& c) {
    const std::size_t K1 = a.size();
    std::vector<cd> g(K1, cd{0.0, 0.0});
    for (std::size_t k = 1; k < K1; ++k) {
        cd s = a[k];
        for (std::size_t i = 1; i < k; ++i) s += b[i] * g[k - i];
        for (std::size_t i = 1; i + 2 <= k; ++i)
            for (std::size_t j = 1; j + i + 1 <= k; ++j) s += c[i] * g[j] * g[k - i - j];
        g[k] = -s / b[0];
    }
    return g;
}

EpsExpansion eps_only(const std::vector<cd>& coeffs, int N, double radius, ArcSpec arc) {
    EpsExpansion f(static_cast<int>(coeffs.size()) - 1, N, radius, arc);
    for (std::size_t k = 0; k < coeffs.size(); ++k) f.order(static_cast<int>(k))[0] = coeffs[k];
    return f;
}

}  // namespace

ResidueDiag residue_diagonalise(const Mat2E& R) {
    const int K = R(0, 0).eps_order();
    const int N = R(0, 0).x_order();
    const double rad = R(0, 0).radius();
    const ArcSpec arc = R(0, 0).arc();

    // Extract scalar eps coefficients (the input must be x-independent).
    auto col = [&](int i, int j) {
        std::vector<cd> v(static_cast<std::size_t>(K) + 1);
        for (int k = 0; k <= K; ++k) {
            const XSeries& f = R(i, j).order(k);
            for (int n = 1; n <= f.trunc_order(); ++n)
                if (std::abs(f[n]) > 1e-12 * std::max(1.0, R.coeff_norm()))
                    throw StructuralError("residue_diagonalise: input depends on x");
            v[static_cast<std::size_t>(k)] = f[0];
        }
        return v;
    };
    auto r11 = col(0, 0), r12 = col(0, 1), r21 = col(1, 0), r22 = col(1, 1);
    double scale = std::max(1.0, R.coeff_norm());
    if (std::abs(r12[0]) > 1e-12 * scale || std::abs(r21[0]) > 1e-12 * scale)
        throw StructuralError("residue_diagonalise: off-diagonal does not vanish at eps = 0");
    cd m1 = r11[0], m2 = r22[0];
    if (std::abs(m1 - m2) <= 1e-10 * (1.0 + std::abs(m1) + std::abs(m2)))
        throw GenericityError("residue_diagonalise: repeated leading eigenvalue");

    std::vector<cd> b12(r22), b21(r11), negr12(r12), negr21(r21);
    for (std::size_t k = 0; k < b12.size(); ++k) {
        b12[k] = r22[k] - r11[k];
        b21[k] = r11[k] - r22[k];
        negr12[k] = -r12[k];
        negr21[k] = -r21[k];
    }
    // g12 solves r12 + (r22 - r11) g - r21 g^2 = 0; g21 symmetric.
    std::vector<cd> g12 = quadratic_branch(r12, b12, negr21);
    std::vector<cd> g21 = quadratic_branch(r21, b21, negr12);

    ResidueDiag out;
    out.G = Mat2E::identity(K, N, rad, arc);
    out.G(0, 1) = eps_only(g12, N, rad, arc);
    out.G(1, 0) = eps_only(g21, N, rad, arc);

    // rho1 = r11 + r21 g12, rho2 = r22 + r12 g21 (scalar eps convolutions).
    std::vector<cd> rho1(r11), rho2(r22);
    for (std::size_t k = 0; k < rho1.size(); ++k) {
        for (std::size_t i = 0; i <= k; ++i) {
            rho1[k] += r21[i] * g12[k - i];
            rho2[k] += r12[i] * g21[k - i];
        }
    }
    out.rho1 = eps_only(rho1, N, rad, arc);
    out.rho2 = eps_only(rho2, N, rad, arc);
    return out;
}

ClassicalData classical_data(const SystemSpec& sys) {
    sys.validate();
    auto [m1, m2] = ordered_leading_eigenvalues(sys);

    // Classical spectral data from the eps-leading matrix A(x, 0).
    XSeries T = sys.A(0, 0).order(0) + sys.A(1, 1).order(0);
    XSeries D = sys.A(0, 0).order(0) * sys.A(1, 1).order(0) -
                sys.A(0, 1).order(0) * sys.A(1, 0).order(0);
    ClassicalData out;
    out.m1 = m1;
    out.m2 = m2;
    out.eta1 = eigen_branch(T, D, m1);
    out.eta2 = eigen_branch(T, D, m2);

    // Polar data from the residue A(0, eps): conjugate by the constant
    // eigenvector frame, then diagonalise in eps.
    auto A00 = sys.A.eval(0.0, 0.0);
    auto v1 = eigenvector2(A00, m1);
    auto v2 = eigenvector2(A00, m2);
    cd detV = v1[0] * v2[1] - v2[0] * v1[1];
    std::array<std::array<cd, 2>, 2> V = {{{v1[0], v2[0]}, {v1[1], v2[1]}}};
    std::array<std::array<cd, 2>, 2> Vi = {{{v2[1] / detV, -v2[0] / detV}, {-v1[1] / detV, v1[0] / detV}}};

    const int K = sys.eps_order();
    const int N = sys.x_order();
    Mat2E residue = Mat2E::zero(K, N, sys.disc_radius, sys.arc);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k <= K; ++k) {
                cd s{0.0, 0.0};
                for (int p = 0; p < 2; ++p)
                    for (int q = 0; q < 2; ++q)
                        s += Vi[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)] *
                             sys.A(p, q).order(k)[0] * V[static_cast<std::size_t>(q)][static_cast<std::size_t>(j)];
                residue(i, j).order(k)[0] = s;
            }
    ResidueDiag rd = residue_diagonalise(residue);
    out.rho1 = rd.rho1;
    out.rho2 = rd.rho2;
    return out;
}

PreDiagResult pre_diagonalise(const SystemSpec& sys) {
    sys.validate();
    const int K = sys.eps_order();
    const int N = sys.x_order();
    const double rad = sys.disc_radius;
    const ArcSpec arc = sys.arc;

    auto [m1, m2] = ordered_leading_eigenvalues(sys);

    // Constant frame: H0 = V^{-1} with V the eigenvector columns of A(0,0).
    auto A00 = sys.A.eval(0.0, 0.0);
    auto v1 = eigenvector2(A00, m1);
    auto v2 = eigenvector2(A00, m2);
    cd detV = v1[0] * v2[1] - v2[0] * v1[1];
    if (std::abs(detV) < 1e-12) throw GenericityError("pre_diagonalise: eigenvector frame degenerate");
    std::array<std::array<cd, 2>, 2> Vc = {{{v1[0], v2[0]}, {v1[1], v2[1]}}};
    std::array<std::array<cd, 2>, 2> Vic = {{{v2[1] / detV, -v2[0] / detV}, {-v1[1] / detV, v1[0] / detV}}};
    Mat2E H0 = Mat2E::from_constant(Vic, K, N, rad, arc);
    Mat2E V = Mat2E::from_constant(Vc, K, N, rad, arc);

    // Residue gauge in eps.
    Mat2E residue = Mat2E::zero(K, N, rad, arc);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k <= K; ++k) {
                cd s{0.0, 0.0};
                for (int p = 0; p < 2; ++p)
                    for (int q = 0; q < 2; ++q)
                        s += Vic[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)] *
                             sys.A(p, q).order(k)[0] * Vc[static_cast<std::size_t>(q)][static_cast<std::size_t>(j)];
                residue(i, j).order(k)[0] = s;
            }
    ResidueDiag rd = residue_diagonalise(residue);
    Mat2E H1 = rd.G * H0;  // x-independent

    Mat2E A1 = apply_gauge(H1, sys.A);

    // Leading-order straightening: solve (M + x W(x)) P = P N(x) with
    // P(0) = I, diag correction zero, N diagonal.
    std::array<std::vector<std::array<std::array<cd, 2>, 2>>, 1> dummy;  // (unused)
    (void)dummy;
    std::vector<std::array<std::array<cd, 2>, 2>> W(static_cast<std::size_t>(N) + 1),
        P(static_cast<std::size_t>(N) + 1), Nn(static_cast<std::size_t>(N) + 1);
    cd mm[2] = {m1, m2};
    for (int n = 0; n <= N; ++n)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                W[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    (n < N) ? A1(i, j).order(0)[n + 1] : cd{0.0, 0.0};
                P[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = cd{0.0, 0.0};
                Nn[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = cd{0.0, 0.0};
            }
    P[0] = {{{1.0, 0.0}, {0.0, 1.0}}};
    Nn[0] = {{{m1, 0.0}, {0.0, m2}}};
    for (int n = 1; n <= N; ++n) {
        std::array<std::array<cd, 2>, 2> C = {{{0.0, 0.0}, {0.0, 0.0}}};
        for (int b = 1; b < n; ++b)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    for (int p = 0; p < 2; ++p)
                        C[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +=
                            P[static_cast<std::size_t>(n - b)][static_cast<std::size_t>(i)][static_cast<std::size_t>(p)] *
                            Nn[static_cast<std::size_t>(b)][static_cast<std::size_t>(p)][static_cast<std::size_t>(j)];
        for (int b = 0; b <= n - 1; ++b)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    for (int p = 0; p < 2; ++p)
                        C[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -=
                            W[static_cast<std::size_t>(n - 1 - b)][static_cast<std::size_t>(i)][static_cast<std::size_t>(p)] *
                            P[static_cast<std::size_t>(b)][static_cast<std::size_t>(p)][static_cast<std::size_t>(j)];
        for (int i = 0; i < 2; ++i) {
            Nn[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] =
                -C[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
            int j = 1 - i;
            P[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                C[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] / (mm[i] - mm[j]);
        }
    }

    // H2 = P^{-1} as an x-only gauge.
    Mat2E Pm = Mat2E::zero(K, N, rad, arc);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int n = 0; n <= N; ++n)
                Pm(i, j).order(0)[n] = P[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    Mat2E H2 = Pm.inverse();

    Mat2E A2 = apply_gauge(H2, A1);

    PreDiagResult out;
    out.G.G = H2 * H1;
    out.G.kind = GaugeKind::mixed;

    // Spectral data.
    out.spec.m1 = m1;
    out.spec.m2 = m2;
    XSeries eta1(N, rad), eta2(N, rad);
    for (int n = 0; n <= N; ++n) {
        eta1[n] = Nn[static_cast<std::size_t>(n)][0][0];
        eta2[n] = Nn[static_cast<std::size_t>(n)][1][1];
    }
    eta1[0] = m1;
    eta2[0] = m2;
    out.spec.eta1 = eta1;
    out.spec.eta2 = eta2;
    out.spec.kappa1 = (rd.rho1 - EpsExpansion::constant(m1, K, N, rad, arc)).eps_shift_down();
    out.spec.kappa2 = (rd.rho2 - EpsExpansion::constant(m2, K, N, rad, arc)).eps_shift_down();
    out.spec.lambda1 = EpsExpansion::from_x_series(eta1, K, arc) + out.spec.kappa1.eps_shift_up();
    out.spec.lambda2 = EpsExpansion::from_x_series(eta2, K, arc) + out.spec.kappa2.eps_shift_up();
    out.spec.mu1 = (eta1 - XSeries::constant(m1, N, rad)).shift_down();
    out.spec.mu2 = (eta2 - XSeries::constant(m2, N, rad)).shift_down();

    out.Lambda = Mat2E::zero(K, N, rad, arc);
    out.Lambda(0, 0) = out.spec.lambda1;
    out.Lambda(1, 1) = out.spec.lambda2;
    out.B = A2 - out.Lambda;
    out.transformed = sys;
    out.transformed.A = A2;
    return out;
}

}  // namespace sps2
