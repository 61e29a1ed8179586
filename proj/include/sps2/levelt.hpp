#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "sps2/borel.hpp"
#include "sps2/matrix_system.hpp"

namespace sps2 {

using Vec2 = std::array<cd, 2>;
using Mat2 = std::array<std::array<cd, 2>, 2>;

// Angle between complex lines spanned by u and v (0 .. pi/2).
double direction_angle(const Vec2& u, const Vec2& v);

// Upper-triangular reduction Lambda + U of a pre-diagonalised system:
// the lower-left entry is removed by G1 = [[1,0],[s,1]] with s the resummed
// Riccati solution of  eps x s' = a21 + (a11 - a22) s - a12 s^2, and the
// diagonal is normalised by G2 = diag(g11, g22) with eps x g_ii' = v_ii g_ii,
// g_ii(x*) = 1.  The upper-right entry becomes u = a12 g11 / g22.
class TriangularSystem {
  public:
    TriangularSystem() = default;
    TriangularSystem(const SystemSpec& prediag, const SpectralData& spec, int eps_order = 12,
                     ResumConfig cfg = {});

    const SystemSpec& system() const { return sys_; }
    const SpectralData& spectral() const { return spec_; }
    const RiccatiProblem& riccati() const { return rp_; }
    const RiccatiResummer& resummer() const { return *resummer_; }

    double r0() const { return r0_; }      // working boundary |x| = 0.8 * disc radius
    cd x_star() const { return x_star_; }  // default basepoint on the positive axis

    cd nu1(cd eps) const;  // lambda_i(0, eps)
    cd nu2(cd eps) const;
    cd nu12(cd eps) const { return nu1(eps) - nu2(eps); }
    cd lambda_at(int i, cd x, cd eps) const;
    // x-series at fixed eps: mu_i = (lambda_i - nu_i)/x and mu12 = mu1 - mu2
    XSeries mu_at(int i, cd eps) const;
    XSeries mu12_at(cd eps) const;

    // resummed Riccati solution (strip backend / Pade oracle backend)
    cd s_strip(cd x, cd eps) const { return resummer_->eval(x, eps).s; }
    cd s_pade(cd x, cd eps) const { return resummer_->eval_pade(x, eps); }

    // Termwise-exact exponent pieces (independent of the path inside the disc):
    // Bexp(i) = (1/eps) int_{x*}^x (a_ii - lambda_i)/t dt,
    // P12     = (1/eps) int_{x*}^x (mu1 - mu2) dt.
    cd Bexp(int i, cd x, cd eps, cd from) const;
    cd P12(cd x, cd eps, cd from) const;

    // q(x_k) = (1/eps) int_{x*}^{x_k} a12(t) s(t) / t dt cumulatively along the
    // ray through the (descending-modulus, equal-argument) ladder xs, with
    // xs[0] = the starting point (q = 0 there).  Pade backend for s.
    std::vector<cd> radial_q(cd eps, const std::vector<cd>& xs) const;

    // q at a single point, integrating along the log-path from x_star.
    cd q_at(cd x, cd eps, int n_steps = 49) const;

    // Gauge entries and u given the path integral q at x.
    cd g11(cd x, cd eps, cd q, cd from) const;
    cd g22(cd x, cd eps, cd q, cd from) const;
    cd u_of(cd x, cd eps, cd q, cd from) const;

    // Circle data on |t| = r0, Simpson nodes t_j = r0 e^{i phi_j},
    // phi_j = 2 pi j / (2n), j = 0..2n (n = 256): cumulative q and u there.
    struct CircleData {
        std::vector<cd> t;  // even Simpson nodes (256 of them, equally spaced)
        std::vector<cd> q;  // cumulative q from angle 0
        std::vector<cd> u;  // u at the even nodes
    };
    CircleData circle_data(cd eps) const;

  private:
    SystemSpec sys_;
    SpectralData spec_;
    RiccatiProblem rp_;
    std::shared_ptr<RiccatiResummer> resummer_;
    double r0_ = 0.0;
    cd x_star_;
};

// Full triangularisation of an original system: pre-diagonalisation followed
// by the G1/G2 reduction, with the gauge residual measured on a radial
// (x, eps) grid by high-order numerical differentiation.
struct TriangularisationResult {
    PreDiagResult prediag;
    std::shared_ptr<TriangularSystem> T;
    double gauge_residual = 0.0;        // sup of relative residual over the grid
    double u_at_zero = 0.0;             // |u(0, eps)| (exact limit)
    std::vector<double> u_sup_per_eps;  // max_x |u| for each requested eps
    std::vector<cd> eps_checked;
};
TriangularisationResult triangularise(const SystemSpec& sys, const std::vector<cd>& eps_list,
                                      int eps_order = 12, ResumConfig cfg = {},
                                      int n_samples = 161);

// Flow integrals f_i = (x/x*)^{-nu_i/eps} exp(-(1/eps) int_{x*}^x mu_i dt)
// along the radial ray, f_ij = f_i / f_j.
struct FlowIntegrals {
    std::vector<cd> f1, f2, f12, f21;
};
FlowIntegrals flow_integrals(const TriangularSystem& T, cd x_star, cd eps,
                             const std::vector<cd>& xs);

// ---- the vanishing-lemma coupling ----

// Which right-hand side the coupling solves:
//   display: eps x c' = (lambda2 - lambda1) c - eps x u   (series display form)
//   frame:   eps x c' = (lambda2 - lambda1) c - u         (as needed by phi2)
enum class CouplingForm { display, frame };

struct CouplingC12 {
    cd eps;
    cd nu12_over_eps;
    cd x_star;
    double circle_radius = 0.0;
    CouplingForm form = CouplingForm::display;
    std::vector<cd> g;            // Taylor coefficients g_n of the driving term
    std::vector<int> resonant_n;  // indices inside the resonance tube
    XSeries p12_anti;             // antiderivative of mu12 at this eps
    cd p12_at_star;               // its value at the basepoint
    cd inv_eps;

    // Deep singular-perturbation regime (|nu12/eps| beyond the reach of the
    // NC-term circle series): evaluate the regular limit of the coupling ODE,
    // c = D/(lambda2 - lambda1) plus one eps x c' correction, locally at x.
    std::function<cd(cd)> local_eval;

    // Evaluation (|x| <= ~0.6 * circle_radius for geometric convergence);
    // includes the exp(-P12/eps) prefactor and any x log x resonant terms.
    cd operator()(cd x) const;

    double kappa_x = 0.0;  // fitted sup |c12(x)| / |x| over the sample ray
};

// Core solver from explicit circle samples of u (independent of the
// triangularisation machinery; used by constructed-example tests).
CouplingC12 coupling_core(cd eps, cd nu12, const XSeries& mu12, const std::function<cd(cd)>& u_fn,
                          cd x_star, double circle_radius, CouplingForm form);

// Coupling of a triangular system; basepoint defaults to T.x_star() and may
// be moved along the circle |x| = r0 (basepoint-independence property).
CouplingC12 coupling_c12(const TriangularSystem& T, cd eps,
                         CouplingForm form = CouplingForm::display,
                         std::optional<cd> basepoint = std::nullopt);

// ---- solution bases and frames ----

struct SolutionBasis {
    cd eps;
    std::vector<cd> xs;
    std::vector<Vec2> phi1, phi2;
    double residual = 0.0;  // sup relative residual of the triangular ODE
    double growth1 = 0.0, growth2 = 0.0;  // fitted d log|phi| / d log|x|
};
SolutionBasis solution_basis(const TriangularSystem& T, cd eps, int n_samples = 241);

struct LeveltFrame {
    cd eps;
    std::vector<cd> xs;
    std::vector<Vec2> e1, e2;
    Vec2 e1_limit, e2_limit;  // exact x -> 0 limits
    CouplingC12 c12;          // frame-form coupling
    cd nu1, nu2, nu12;
    double eigen_residual = 0.0;  // sup rel. residual of eps x e' + A e = lambda e
    double angle_rho1 = 0.0, angle_rho2 = 0.0;  // x->0 eigenvector alignment
    double c12_sup_over_x = 0.0, c12_sup_over_eps = 0.0;
    Vec2 quotient_e2bar;  // e2 at the innermost sample modulo span(e1)
};

struct LeveltResult {
    SystemSpec sys;
    PreDiagResult prediag;
    std::shared_ptr<TriangularSystem> T;
    std::vector<LeveltFrame> frames;  // one per requested eps
    std::vector<cd> resonant_eps;     // (nu2 - nu1)/(n+1) inside the sector
    double angle_eta_max = 0.0;       // eps->0 alignment at the smallest eps
};
LeveltResult levelt_filtration(const SystemSpec& sys, const std::vector<cd>& eps_list,
                               int eps_order = 12, int n_samples = 241, ResumConfig cfg = {});

// Solution basis of the original system: psi_i = G_full^{-1} phi_i.
struct PsiBasis {
    cd eps;
    std::vector<cd> xs;
    std::vector<Vec2> psi1, psi2;
    double growth1 = 0.0, growth2 = 0.0;  // fitted over |x| in [1e-4, 1e-2] r0
};
PsiBasis psi_basis(const LeveltResult& L, std::size_t frame_index);

// Resonant eps values (nu2 - nu1)/(n+1) inside the sector (|eps| <= radius).
std::vector<cd> resonant_eps_values(const TriangularSystem& T, double sector_radius);

}  // namespace sps2
