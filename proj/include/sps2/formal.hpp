#pragma once

#include "sps2/matrix_system.hpp"
#include "sps2/series.hpp"

namespace sps2 {

// Scalar Riccati equation  eps * x * ds/dx = a + b s + c s^2  with
// a(x, 0) = c(x, 0) = 0 and b(0, 0) != 0.
struct RiccatiProblem {
    EpsExpansion a, b, c;
    ArcSpec arc;

    void validate() const;
};

// Formal solution s = sum_{k>=1} s_k(x) eps^k of a RiccatiProblem, obtained
// order by order; carries the residual of the defining equation through the
// stored eps order and a Gevrey-1 growth certificate.
struct FormalRiccatiSolution {
    EpsExpansion s;           // s_0 = 0
    double residual_norm = 0.0;  // sup of residual coefficient norms through order K
    GevreyFit gevrey;
};

FormalRiccatiSolution solve_formal_riccati(const RiccatiProblem& p, int eps_order);

// Residual coefficients of eps x d/dx s - (a + b s + c s^2) through the
// stored order of s (valid orders 0..K).
EpsExpansion riccati_residual(const RiccatiProblem& p, const EpsExpansion& s);

// Formal diagonal normal form of a pre-diagonalised system: a unipotent
// gauge G = [[1, g12],[g21, 1]] with off-diagonal formal Riccati solutions
// and the diagonal spectral corrections.
struct FormalNormalForm {
    GaugeTransform G;
    EpsExpansion lambda1, lambda2;  // diagonal of the normal form
    FormalRiccatiSolution g12, g21;
    double residual_norm = 0.0;  // sup coefficient norm of the gauge residual
};

// pre: sys is pre-diagonalised (off-diagonal entries vanish at eps = 0 and
// at x = 0).  The full pipeline is pre_diagonalise + this.
FormalNormalForm solve_formal_normal_form(const SystemSpec& sys);

// Gauge residual eps x dG/dx - (G A - Lambda' G) of a candidate normal form.
Mat2E normal_form_residual(const SystemSpec& sys, const FormalNormalForm& nf);

enum class MajorantKind { quadratic, riccati, borel };

// Majorant sequences M_k evaluated literally from their defining recursions.
//   quadratic: M_k = A0 (A B^k + A sum B^i M_{k-i} + A sum sum B^i M_j M_{k-i-j})
//   riccati:   M_k = A0 (M_{k-1} + A B^k + same weighted sums)
//   borel:     M_n = M (M_{n-1} + M_{n-2} + sum_{i+j=n-2} M_i M_j
//                        + sum_{i+j=n-3} M_i M_j),  M_0 = 0, M_1 = M
// (inner sums range over i, j >= 1).  Throws OverflowError when an entry
// exceeds the double range.
struct MajorantResult {
    std::vector<double> M;
    GevreyFit geometric;  // fit M_k <= C * Mgeo^k
};
MajorantResult majorant_sequence(double A, double B, double A0, double Mcoef, MajorantKind kind,
                                 int K);

// Constants (A, B) with sup-norm(f_k) <= A B^k k! for every stored k of f
// (A at least the order-0 sup and 1e-300 to stay positive).
std::pair<double, double> fit_input_constants(const EpsExpansion& f);

}  // namespace sps2
