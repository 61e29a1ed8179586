#include "sps2/formal.hpp"

#include <cmath>

namespace sps2 {

void RiccatiProblem::validate() const {
    EpsExpansion::check_compatible(a, b);
    EpsExpansion::check_compatible(a, c);
    if (!(a.arc() == arc)) throw StructuralError("RiccatiProblem: coefficient arc differs");
    double scale = std::max({1.0, a.coeff_norm(), b.coeff_norm(), c.coeff_norm()});
    if (a.order(0).coeff_norm() > 1e-10 * scale)
        throw HypothesisError("RiccatiProblem: a(x, 0) must vanish");
    if (c.order(0).coeff_norm() > 1e-10 * scale)
        throw HypothesisError("RiccatiProblem: c(x, 0) must vanish");
    if (std::abs(b.order(0)[0]) < 1e-10 * scale)
        throw HypothesisError("RiccatiProblem: b(0, 0) must be nonzero");
}

FormalRiccatiSolution solve_formal_riccati(const RiccatiProblem& p, int eps_order) {
    p.validate();
    const int K = eps_order;
    const int N = p.a.x_order();
    const double rad = p.a.radius();
    if (K > p.a.eps_order())
        throw StructuralError("solve_formal_riccati: requested order exceeds coefficient order");

    XSeries b0inv = p.b.order(0).inverse();
    std::vector<XSeries> s(static_cast<std::size_t>(K) + 1, XSeries(N, rad));
    for (int k = 1; k <= K; ++k) {
        // rhs = x d/dx s_{k-1} - a_k - sum b_i s_{k-i} - sum sum c_i s_j s_{k-i-j}
        XSeries rhs = s[static_cast<std::size_t>(k - 1)].euler_derivative() - p.a.order(k);
        for (int i = 1; i <= k - 1; ++i) rhs -= p.b.order(i) * s[static_cast<std::size_t>(k - i)];
        for (int i = 1; i <= k - 2; ++i) {
            XSeries acc(N, rad);
            for (int j = 1; j <= k - i - 1; ++j)
                acc += s[static_cast<std::size_t>(j)] * s[static_cast<std::size_t>(k - i - j)];
            rhs -= p.c.order(i) * acc;
        }
        s[static_cast<std::size_t>(k)] = b0inv * rhs;
    }

    FormalRiccatiSolution out;
    out.s = EpsExpansion(K, N, rad, p.arc);
    for (int k = 0; k <= K; ++k) out.s.order(k) = s[static_cast<std::size_t>(k)];
    // Residual wants the problem truncated to the solution's eps order.
    RiccatiProblem pt = p;
    if (p.a.eps_order() != K) {
        pt.a = EpsExpansion(K, N, rad, p.arc);
        pt.b = EpsExpansion(K, N, rad, p.arc);
        pt.c = EpsExpansion(K, N, rad, p.arc);
        for (int k = 0; k <= K; ++k) {
            pt.a.order(k) = p.a.order(k);
            pt.b.order(k) = p.b.order(k);
            pt.c.order(k) = p.c.order(k);
        }
    }
    out.residual_norm = riccati_residual(pt, out.s).coeff_norm();
    out.gevrey = fit_gevrey(out.s);
    return out;
}

EpsExpansion riccati_residual(const RiccatiProblem& p, const EpsExpansion& s) {
    EpsExpansion lhs = s.euler_derivative().eps_shift_up();
    return lhs - (p.a + p.b * s + p.c * s * s);
}

FormalNormalForm solve_formal_normal_form(const SystemSpec& sys) {
    sys.validate();
    const int K = sys.eps_order();
    const int N = sys.x_order();
    const double rad = sys.disc_radius;
    double scale = std::max(1.0, sys.A.coeff_norm());
    if (sys.A(0, 1).order(0).coeff_norm() > 1e-9 * scale ||
        sys.A(1, 0).order(0).coeff_norm() > 1e-9 * scale)
        throw HypothesisError("solve_formal_normal_form: system is not pre-diagonalised");

    RiccatiProblem p12{sys.A(0, 1), sys.A(1, 1) - sys.A(0, 0), -sys.A(1, 0), sys.arc};
    RiccatiProblem p21{sys.A(1, 0), sys.A(0, 0) - sys.A(1, 1), -sys.A(0, 1), sys.arc};

    FormalNormalForm out;
    out.g12 = solve_formal_riccati(p12, K);
    out.g21 = solve_formal_riccati(p21, K);
    out.G.G = Mat2E::identity(K, N, rad, sys.arc);
    out.G.G(0, 1) = out.g12.s;
    out.G.G(1, 0) = out.g21.s;
    out.G.kind = GaugeKind::mixed;
    out.lambda1 = sys.A(0, 0) + sys.A(1, 0) * out.g12.s;
    out.lambda2 = sys.A(1, 1) + sys.A(0, 1) * out.g21.s;
    out.residual_norm = normal_form_residual(sys, out).coeff_norm();
    return out;
}

Mat2E normal_form_residual(const SystemSpec& sys, const FormalNormalForm& nf) {
    Mat2E Lam = Mat2E::zero(sys.eps_order(), sys.x_order(), sys.disc_radius, sys.arc);
    Lam(0, 0) = nf.lambda1;
    Lam(1, 1) = nf.lambda2;
    Mat2E rhs = nf.G.G * sys.A - Lam * nf.G.G;
    Mat2E r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            r(i, j) = nf.G.G(i, j).euler_derivative().eps_shift_up() - rhs(i, j);
    return r;
}

MajorantResult majorant_sequence(double A, double B, double A0, double Mcoef, MajorantKind kind,
                                 int K) {
    if (K < 0) throw StructuralError("majorant_sequence: negative length");
    std::vector<double> M(static_cast<std::size_t>(K) + 1, 0.0);
    constexpr double kCap = 1e280;
    if (kind == MajorantKind::borel) {
        if (K >= 1) M[1] = Mcoef;
        for (int n = 2; n <= K; ++n) {
            double s = M[static_cast<std::size_t>(n - 1)] + M[static_cast<std::size_t>(n - 2)];
            for (int i = 1; i <= n - 3; ++i) s += M[static_cast<std::size_t>(i)] * M[static_cast<std::size_t>(n - 2 - i)];
            for (int i = 1; i <= n - 4; ++i) s += M[static_cast<std::size_t>(i)] * M[static_cast<std::size_t>(n - 3 - i)];
            M[static_cast<std::size_t>(n)] = Mcoef * s;
            if (!(M[static_cast<std::size_t>(n)] < kCap))
                throw OverflowError("majorant_sequence: overflow", n);
        }
    } else {
        double Bk = 1.0;
        for (int k = 1; k <= K; ++k) {
            Bk *= B;
            double s = A * Bk;
            double Bi = 1.0;
            for (int i = 1; i <= k - 1; ++i) {
                Bi *= B;
                s += A * Bi * M[static_cast<std::size_t>(k - i)];
            }
            Bi = 1.0;
            for (int i = 1; i <= k - 2; ++i) {
                Bi *= B;
                double q = 0.0;
                for (int j = 1; j <= k - i - 1; ++j)
                    q += M[static_cast<std::size_t>(j)] * M[static_cast<std::size_t>(k - i - j)];
                s += A * Bi * q;
            }
            if (kind == MajorantKind::riccati) s += M[static_cast<std::size_t>(k - 1)];
            M[static_cast<std::size_t>(k)] = A0 * s;
            if (!(M[static_cast<std::size_t>(k)] < kCap))
                throw OverflowError("majorant_sequence: overflow", k);
        }
    }
    MajorantResult out;
    out.M = M;
    out.geometric = fit_geometric(M);
    return out;
}

std::pair<double, double> fit_input_constants(const EpsExpansion& f) {
    double A = std::max(f.order(0).sup_norm(), 1e-300);
    double logB = std::log(1e-6);
    double lfact = 0.0;
    for (int k = 1; k <= f.eps_order(); ++k) {
        lfact += std::log(static_cast<double>(k));
        double s = f.order(k).sup_norm();
        if (s > 0.0) logB = std::max(logB, (std::log(s) - std::log(A) - lfact) / k);
    }
    return {A, std::exp(logB)};
}

}  // namespace sps2
