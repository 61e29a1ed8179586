#pragma once

#include <array>

#include "sps2/series.hpp"

namespace sps2 {

// 2x2 matrix with EpsExpansion entries (row major).
struct Mat2E {
    std::array<std::array<EpsExpansion, 2>, 2> a;

    EpsExpansion& operator()(int i, int j) { return a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
    const EpsExpansion& operator()(int i, int j) const {
        return a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }

    static Mat2E zero(int eps_order, int x_order, double radius, ArcSpec arc);
    static Mat2E identity(int eps_order, int x_order, double radius, ArcSpec arc);
    static Mat2E from_constant(const std::array<std::array<cd, 2>, 2>& m, int eps_order, int x_order,
                               double radius, ArcSpec arc);

    Mat2E operator+(const Mat2E& o) const;
    Mat2E operator-(const Mat2E& o) const;
    Mat2E operator*(const Mat2E& o) const;
    EpsExpansion det() const;
    // Inverse as a power series in (x, eps); requires det(0,0) != 0.
    Mat2E inverse() const;
    Mat2E euler_derivative() const;
    double coeff_norm() const;

    std::array<std::array<cd, 2>, 2> eval(cd x, cd eps) const;
};

// The system eps * x * dpsi/dx + A(x, eps) * psi = 0 on a disc of radius
// disc_radius, with eps ranging over a sector of radius sector_radius and
// directions drawn from arc.
struct SystemSpec {
    Mat2E A;
    ArcSpec arc;
    double disc_radius = 1.0;
    double sector_radius = 0.1;

    int eps_order() const { return A(0, 0).eps_order(); }
    int x_order() const { return A(0, 0).x_order(); }
    void validate() const;
};

// Eigendata of the classical (eps = 0) part.
struct ClassicalData {
    cd m1, m2;              // eigenvalues of A(0, 0), ordered along the arc
    XSeries eta1, eta2;     // eigenvalue branches of A(x, 0) with eta_i(0) = m_i
    EpsExpansion rho1, rho2;  // eigenvalue branches of A(0, eps) (constant in x)
};

// Spectral data of the pre-diagonalised system: Lambda = diag(lambda_1,
// lambda_2) with lambda_i = eta_i(x) + eps * kappa_i(eps).
struct SpectralData {
    cd m1, m2;
    EpsExpansion lambda1, lambda2;
    EpsExpansion kappa1, kappa2;  // eps-only
    XSeries mu1, mu2;             // (eta_i(x) - m_i)/x
    XSeries eta1, eta2;
};

enum class GaugeKind { constant, eps_only, x_only, mixed };

struct GaugeTransform {
    Mat2E G;
    GaugeKind kind = GaugeKind::mixed;
};

// Action of a gauge transform psi -> G psi on the connection matrix:
//   A  |->  G A G^{-1} - eps * x * (dG/dx) G^{-1}.
// Throws StructuralError when G is not invertible near the origin.
Mat2E apply_gauge(const Mat2E& G, const Mat2E& A);
SystemSpec apply_gauge(const GaugeTransform& G, const SystemSpec& sys);

// Eigenvalues/eigenvectors of a constant 2x2 matrix.
std::pair<cd, cd> eigenvalues2(const std::array<std::array<cd, 2>, 2>& m);
// Eigenvector for eigenvalue lambda of m (unit norm).
std::array<cd, 2> eigenvector2(const std::array<std::array<cd, 2>, 2>& m, cd lambda);

// Classical spectral data.  Checks genericity of A(0,0) and nonresonance /
// ordering over a 65-point grid on the arc; ordering is
// Re(e^{i theta} m1) < Re(e^{i theta} m2) throughout.
ClassicalData classical_data(const SystemSpec& sys);

// Diagonalises an x-independent residue matrix R(eps) whose off-diagonal
// part vanishes at eps = 0, by the unipotent-diagonal gauge
// G = [[1, g12],[g21, 1]].  Returns (G, rho1, rho2).
struct ResidueDiag {
    Mat2E G;
    EpsExpansion rho1, rho2;
};
ResidueDiag residue_diagonalise(const Mat2E& R);

// Pre-diagonalisation: constructs G with apply_gauge(G, A) = Lambda + B,
// Lambda = diag(eta_i(x) + eps kappa_i(eps)) and B(0, eps) = B(x, 0) = 0.
struct PreDiagResult {
    GaugeTransform G;
    SpectralData spec;
    Mat2E Lambda;
    Mat2E B;
    SystemSpec transformed;  // the full system after the gauge
};
PreDiagResult pre_diagonalise(const SystemSpec& sys);

}  // namespace sps2
