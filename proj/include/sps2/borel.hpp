#pragma once

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "sps2/formal.hpp"
#include "sps2/series.hpp"

namespace sps2 {

// Exponential dominating bound |f(xi_j)| <= C1 * e^{C2 xi_j}.
struct ExpFit {
    double C1 = 0.0;
    double C2 = 0.0;
};

// Least-squares fit over the upper half of the grid, then C1 raised so the
// bound dominates every sample.
ExpFit fit_exponential(const std::vector<cd>& samples, double step);

// A function of the Borel variable along the ray arg = theta, stored in
// rotated coordinates: grid[j] = f(e^{i theta} * j * step) and taylor the
// expansion in the rotated variable xi.
struct BorelFunction {
    double theta = 0.0;
    double step = 1.0 / 128;
    std::vector<cd> taylor;
    std::vector<cd> grid;
    std::optional<ExpFit> fit;

    double xi_max() const { return step * static_cast<double>(grid.size() - 1); }
};

// Build from rotated-frame Taylor coefficients (grid filled by evaluation).
BorelFunction borel_from_taylor(std::vector<cd> taylor, double theta, double step, double xi_max);

// Formal Borel transform of sum_{k>=1} a_k eps^k: coefficient of the
// (unrotated) Borel variable zeta^{k-1} is a_k/(k-1)!.  eps_coeffs[0] must
// vanish.
BorelFunction formal_borel(const std::vector<cd>& eps_coeffs, double theta, double step,
                           double xi_max);

// Trapezoid convolution int_0^xi f(xi-u) g(u) du in rotated coordinates;
// taylor part by the factorial Cauchy rule.
BorelFunction convolve(const BorelFunction& f, const BorelFunction& g);

// Successive-approximation solution of
//   sigma(xi) = int_0^xi (a0 + u1 sigma + a1*sigma + u2 sigma*sigma
//                          + a2*sigma*sigma)(u) du   (* = convolution)
struct BorelOdeResult {
    BorelFunction sigma;
    double residual = 0.0;
    int terms = 0;
    std::vector<std::vector<cd>> term_grids;  // filled when keep_terms
};
BorelOdeResult solve_borel_ode(const BorelFunction& a0, const BorelFunction& a1,
                               const BorelFunction& a2, cd u1, cd u2, bool keep_terms = false);

struct LaplaceResult {
    cd value{0.0, 0.0};
    double tail_bound = 0.0;
};

// Directional Laplace transform e^{i theta} int_0^{Xi} e^{-xi e^{i theta}/eps} f(xi) dxi
// with an exponentially weighted product quadrature (the weight integrated
// exactly against a piecewise parabola) and the analytic tail bound from fit.
LaplaceResult laplace_samples(const cd* f, std::size_t n, double step, double theta, cd eps,
                              const ExpFit& fit);
LaplaceResult laplace(const BorelFunction& f, cd eps);

// ---- strip machinery (straightened coordinate z = e^{-i theta} rho log xtilde) ----

// Coefficient data of the convolution PDE satisfied by the Borel transform
// of the regular part sigma = s - eps s1:
//   x dx sigma - (b0/eps) sigma = A0/eps + (U1/eps) sigma + (U2/eps) sigma^2.
struct StripInputs {
    XSeries b0;            // leading coefficient; rho = b0(0)
    EpsExpansion A0;       // vanishes through eps^1
    EpsExpansion U1;       // vanishes at eps^0
    EpsExpansion U2;       // vanishes at eps^0
    double theta = 0.0;
};

// Assembles StripInputs from a Riccati problem and its formal solution.
StripInputs prepare_strip_inputs(const RiccatiProblem& p, const EpsExpansion& s_formal,
                                 double theta);

// z-period of the straightened coordinate (one turn around x = 0).
cd strip_period(const StripInputs& in);

struct StripProblem {
    double theta = 0.0;
    double h = 1.0 / 128;
    double delta = 0.0;
    int nt = 0;  // triangular grid: indices (m, l) with m + l <= nt
    cd rho;      // b0(0)
    double w = 0.0, w0 = 0.0;
    cd x0, z0;
    cd b0_at_x0;
    std::vector<cd> x_nodes;                // Phi^{-1}(z0 + m h)
    std::vector<cd> v1, v2;                 // sampled per z-node
    std::vector<std::vector<cd>> beta0, beta1, beta2;  // [m][l]
    double fitM = 0.0, fitL = 0.0;          // fundamental-estimate fit
};

// Builds the strip problem for the z-line through x0.  z_offset shifts the
// anchor (used by the periodicity property test).
StripProblem straighten(const StripInputs& in, cd x0, double h, double xi_max, cd z_offset = cd{0.0, 0.0});

struct StripSolution {
    std::vector<std::vector<cd>> tau;  // triangular [m][l]
    double residual = 0.0;
    int terms = 0;
    std::vector<std::vector<cd>> term_rows;  // tau_n at m = 0 when keep_terms
    std::vector<std::vector<std::vector<cd>>> term_triangles;  // full tau_n when keep_terms
};
StripSolution solve_strip_pde(const StripProblem& p, bool keep_terms = false);

// Integral operator I(F)(m, l) = -h * trapz_{p=0..l} F(m+l-p, p) on the
// triangular grid (exposed for the rearrangement suite).
std::vector<std::vector<cd>> strip_integral_op(const std::vector<std::vector<cd>>& F, double h);
// Right-hand side beta0 + v1 tau + beta1*tau + v2 tau*tau + beta2*tau*tau.
std::vector<std::vector<cd>> strip_rhs(const StripProblem& p,
                                       const std::vector<std::vector<cd>>& tau);

// ---- Borel-Pade independent resummation oracle ----
struct PadeSumResult {
    cd value{0.0, 0.0};
    double error_estimate = 0.0;
};
PadeSumResult borel_pade_sum(const std::vector<cd>& eps_coeffs, cd eps, double theta,
                             double xi_cap = 32.0);

// ---- resummation driver ----

struct ResumConfig {
    double h = 1.0 / 64;      // strip grid step
    double xi_cap = 16.0;     // hard cap on the Laplace range
    double min_R = 8.0;       // smallest Re(e^{i theta}/eps) planned (sets xi)
    int max_terms = 128;
};

// Resummed solution of a Riccati problem: s = eps s1 + Laplace(strip tau).
// Caches one strip line per (x, direction).
class RiccatiResummer {
  public:
    RiccatiResummer(const RiccatiProblem& p, int eps_order, ResumConfig cfg = {});

    const FormalRiccatiSolution& formal() const { return formal_; }
    const std::vector<double>& directions() const { return thetas_; }
    const RiccatiProblem& problem() const { return p_; }

    // Admissibility margin Re(e^{i theta}/eps) for a direction.
    static double direction_rate(double theta, cd eps);
    // Best direction for eps; DomainError if none admissible.
    double pick_theta(cd eps) const;

    struct Eval {
        cd s;
        cd xdx_s;        // x d/dx of s
        double tail = 0.0;
        double theta = 0.0;
    };
    Eval eval(cd x, cd eps) const;
    Eval eval_along(cd x, cd eps, double theta) const;

    // Fast evaluation through the Borel-Pade oracle on the formal series.
    cd eval_pade(cd x, cd eps) const;

    // Relative residual of the Riccati equation at a sample.
    double residual_at(cd x, cd eps) const;

    double strip_residual_max() const { return strip_residual_max_; }

  private:
    struct Line {
        std::vector<cd> row;    // tau at the anchor z-node
        std::vector<cd> dzrow;  // d tau / dz at the anchor
        ExpFit fit;
        cd b0_at_x0;
        double theta;
    };
    const Line& line(cd x, double theta) const;

    RiccatiProblem p_;
    FormalRiccatiSolution formal_;
    ResumConfig cfg_;
    std::vector<double> thetas_;
    std::map<double, StripInputs> inputs_;  // per direction
    double xi_eff_ = 6.0;
    mutable std::map<std::pair<std::pair<double, double>, double>, Line> cache_;
    mutable double strip_residual_max_ = 0.0;
};

struct ResumSample {
    cd x, eps, s;
    double tail = 0.0;
    double theta = 0.0;
    double rel_residual = 0.0;
};

struct ResumResult {
    std::vector<double> thetas;
    std::vector<ResumSample> samples;
    double overlap_max = 0.0;    // direction-gluing disagreement
    double residual_max = 0.0;   // max relative equation residual
    FormalRiccatiSolution formal;
};

ResumResult resum_riccati(const RiccatiProblem& p, int eps_order, const std::vector<cd>& xs,
                          const std::vector<cd>& eps_list, const ResumConfig& cfg = {});

}  // namespace sps2
