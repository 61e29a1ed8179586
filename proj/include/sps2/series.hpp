#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "sps2/errors.hpp"

namespace sps2 {

using cd = std::complex<double>;

// Closed arc of directions [theta_minus, theta_plus] in the Borel plane.
// A degenerate arc (theta_minus == theta_plus) is a single direction.
struct ArcSpec {
    double theta_minus = 0.0;
    double theta_plus = 0.0;

    ArcSpec() = default;
    ArcSpec(double tm, double tp) : theta_minus(tm), theta_plus(tp) {
        if (!(tm <= tp)) throw StructuralError("ArcSpec: theta_minus > theta_plus");
        if (tp - tm >= 2 * 3.14159265358979323846)
            throw StructuralError("ArcSpec: arc spans a full turn");
    }

    // Widened arc of admissible epsilon directions (opening +- pi/2).
    ArcSpec widened() const;

    bool operator==(const ArcSpec&) const = default;
};

// Truncated Taylor series in x about 0 with a radius of validity attached.
// Coefficients 0..trunc_order are stored; arithmetic truncates back to the
// common order.
class XSeries {
  public:
    XSeries() = default;
    XSeries(int trunc_order, double radius);
    static XSeries constant(cd value, int trunc_order, double radius);

    int trunc_order() const { return static_cast<int>(c_.size()) - 1; }
    double radius() const { return radius_; }
    void set_radius(double r);

    cd& operator[](int n) { return c_[static_cast<std::size_t>(n)]; }
    const cd& operator[](int n) const { return c_[static_cast<std::size_t>(n)]; }
    const std::vector<cd>& coeffs() const { return c_; }

    cd eval(cd x) const;  // Horner

    // max |coefficient|
    double coeff_norm() const;
    // max |f(x)| over 64 points on |x| = 0.9*radius (0 for the zero series)
    double sup_norm() const;

    friend XSeries operator+(const XSeries& a, const XSeries& b);
    friend XSeries operator-(const XSeries& a, const XSeries& b);
    friend XSeries operator*(const XSeries& a, const XSeries& b);
    XSeries operator-() const;
    friend XSeries operator*(cd s, const XSeries& a);
    XSeries& operator+=(const XSeries& b) { return *this = *this + b; }
    XSeries& operator-=(const XSeries& b) { return *this = *this - b; }

    // x d/dx : multiplies the n-th coefficient by n.
    XSeries euler_derivative() const;
    // Multiplication by x (shift up; the top coefficient is dropped).
    XSeries shift_up() const;
    // Division by x.  Requires |c_0| <= tol * scale; top coefficient padded 0.
    XSeries shift_down() const;
    // Coefficient-wise antiderivative vanishing at 0 (top coefficient drops).
    XSeries antiderivative() const;
    // Reciprocal; requires c_0 != 0.
    XSeries inverse() const;
    // exp of the series.
    XSeries exp() const;

  private:
    std::vector<cd> c_;  // size trunc_order + 1
    double radius_ = 1.0;
    static void check_compatible(const XSeries& a, const XSeries& b);
};

// Diagnostic Gevrey-1 growth certificate: sup_k <= C * M^k * k!.
struct GevreyFit {
    double C = 0.0;
    double M = 1.0;
};

// Formal series in eps whose coefficients are XSeries, together with the arc
// of directions the expansion is attached to.
class EpsExpansion {
  public:
    EpsExpansion() = default;
    EpsExpansion(int eps_order, int x_order, double radius, ArcSpec arc);
    static EpsExpansion constant(cd value, int eps_order, int x_order, double radius, ArcSpec arc);
    static EpsExpansion from_x_series(const XSeries& f, int eps_order, ArcSpec arc);

    int eps_order() const { return static_cast<int>(o_.size()) - 1; }
    int x_order() const { return o_.empty() ? -1 : o_[0].trunc_order(); }
    double radius() const { return o_.empty() ? 0.0 : o_[0].radius(); }
    const ArcSpec& arc() const { return arc_; }

    XSeries& order(int k) { return o_[static_cast<std::size_t>(k)]; }
    const XSeries& order(int k) const { return o_[static_cast<std::size_t>(k)]; }

    cd eval(cd x, cd eps) const;  // Horner in eps of coefficient evaluations
    // Coefficients of the x = x0 slice as a polynomial in eps.
    std::vector<cd> eval_x(cd x0) const;

    double coeff_norm() const;

    friend EpsExpansion operator+(const EpsExpansion& a, const EpsExpansion& b);
    friend EpsExpansion operator-(const EpsExpansion& a, const EpsExpansion& b);
    friend EpsExpansion operator*(const EpsExpansion& a, const EpsExpansion& b);
    EpsExpansion operator-() const;
    friend EpsExpansion operator*(cd s, const EpsExpansion& a);
    EpsExpansion& operator+=(const EpsExpansion& b) { return *this = *this + b; }
    EpsExpansion& operator-=(const EpsExpansion& b) { return *this = *this - b; }

    EpsExpansion euler_derivative() const;  // x d/dx termwise
    EpsExpansion eps_shift_up() const;      // multiply by eps (top order drops)
    EpsExpansion eps_shift_down() const;    // divide by eps (order 0 must vanish)
    // Reciprocal; requires order-0 constant term != 0.
    EpsExpansion inverse() const;

    static void check_compatible(const EpsExpansion& a, const EpsExpansion& b);

  private:
    std::vector<XSeries> o_;  // size eps_order + 1
    ArcSpec arc_;
};

// Least-squares Gevrey-1 fit of an expansion: returns (C, M) with
// sup_x |f_k| <= C * M^k * k! holding for every stored k (C is inflated to
// the least value making the fitted-M bound hold).  All-zero input -> (0,1).
GevreyFit fit_gevrey(const EpsExpansion& f);
GevreyFit fit_gevrey(const std::vector<double>& sups);

// Least-squares geometric fit: values[k] <= C * M^k on every stored k.
GevreyFit fit_geometric(const std::vector<double>& values);

}  // namespace sps2
