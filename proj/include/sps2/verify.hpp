#pragma once

#include <string>
#include <vector>

#include "sps2/borel.hpp"
#include "sps2/levelt.hpp"
#include "sps2/matrix_system.hpp"

namespace sps2 {

// Solution trace of the system specialised at a fixed nonzero eps, integrated
// along the straight segment (in the log coordinate) from x_from to x_to.
struct OdeTrace {
    std::vector<cd> path;
    std::vector<Vec2> values;
    cd eps;
    int method_order = 5;
    double rel_tol = 1e-10;
};

// Adaptive Dormand-Prince (5th order, embedded 4th) on
// d psi / d sigma = -(L / eps) A(x(sigma)) psi,  x(sigma) = x_from e^{sigma L},
// L = log(x_to / x_from).  Guard: |eps| >= 1e-3; step underflow -> StiffnessError.
OdeTrace integrate_fixed_eps(const SystemSpec& sys, cd eps, cd x_from, cd x_to, Vec2 init,
                             double rel_tol = 1e-10);

// Transfer matrix of the specialised system from x_from to x_to.
Mat2 transfer_matrix(const SystemSpec& sys, cd eps, cd x_from, cd x_to, double rel_tol = 1e-10);

// Direction (unit vector) at x_to of the solution with the slowest growth
// from x_from to x_to: image of the smallest right singular vector of the
// transfer matrix.
Vec2 slow_direction(const SystemSpec& sys, cd eps, cd x_from, cd x_to, double rel_tol = 1e-10);

struct SuiteReport {
    bool passed = true;
    std::vector<std::string> checks;    // one line per verified case
    std::vector<std::string> failures;  // offending parameters
};

// Numeric validation of the three auxiliary estimates:
//   (1) int_0^R r^n/n! e^{L r} dr <= R^{n+1}/(n+1)! e^{L R}
//   (2) int_0^R (R-r)^m r^n dr = m! n!/(m+n+1)! R^{m+n+1}      (and the
//       taylor convolution rule, exactly)
//   (3) |f_i * f_j(xi)| <= M_i M_j xi^{i+j+1}/(i+j+1)! e^{L xi}
// over R in {0.5, 1, 2, 4}, m, n <= 8, L in {0, 1, 2}.
SuiteReport appendix_estimates_suite();

// Residuals sup | I(RHS(S_K)) - S_{K+1} | of the partial sums of the
// successive-approximation series, for K = 1..K_max (discrete analogue of the
// series rearrangement identities).
std::vector<double> rearrangement_residuals(const BorelFunction& a0, const BorelFunction& a1,
                                            const BorelFunction& a2, cd u1, cd u2, int K_max);
std::vector<double> strip_rearrangement_residuals(const StripProblem& p, int K_max);

// Runs the rearrangement checks on the model problem (exact at every K), the
// zero problem, and a fixed randomized problem (decay for K >= 3).
SuiteReport rearrangement_suite(int K_max = 8);

}  // namespace sps2
