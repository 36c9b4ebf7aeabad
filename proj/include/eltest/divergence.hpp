// divergence.hpp
//
// Phi-divergences between discrete weight vectors, the Cressie-Read power
// family, and outer transforms h producing (h, phi)-divergences such as the
// Renyi and Sharma-Mittal families.
//
// A generator phi is convex on (0, inf) with phi(1) = 0 and phi''(1) > 0.
// The divergence between weights u and p (same length, p_i >= 0) is
//   D_phi(u, p) = sum_i p_i * phi(u_i / p_i)
// with the boundary conventions 0 * phi(0/0) = 0 and
// 0 * phi(u/0) = u * lim_{t -> inf} phi(t)/t.

#ifndef ELTEST_DIVERGENCE_HPP_INCLUDED
#define ELTEST_DIVERGENCE_HPP_INCLUDED

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "eltest/errors.hpp"

namespace eltest {

using Eigen::VectorXd;

// Convex generator of a phi-divergence together with the derived quantities
// the asymptotic formulas need: the derivative phi', the curvature at one,
// and psi(x) = phi(x) - x * phi'(x).
struct PhiFunction {
    std::function<double(double)> phi;
    std::function<double(double)> dphi;
    double dd1 = 1.0; // phi''(1)
    std::function<double(double)> psi;
    // Limit of phi(t)/t as t -> inf; +inf when the limit diverges.  Used by
    // the p_i = 0 boundary convention.
    double slope_at_inf = 0.0;
    std::string label;
};

// Outer transform for (h, phi)-divergences: h differentiable at 0 with
// h(0) = 0 and h'(0) > 0.
struct HFunction {
    std::function<double(double)> h;
    double dh0 = 1.0; // h'(0)
    std::string label;
};

// Cressie-Read power-divergence generator
//   phi_lambda(x) = (x^{lambda+1} - x - lambda (x - 1)) / (lambda (lambda+1))
// with the continuous limits
//   lambda =  0 : x log x - x + 1      (Kullback direction D(u, p))
//   lambda = -1 : -log x + x - 1       (reverse Kullback direction)
// Branches are selected with tolerance 1e-8 on |lambda| and |lambda + 1|.
// phi_lambda''(1) = 1 for every lambda.
PhiFunction power_divergence_phi(double lambda);

// Shorthand for power_divergence_phi(0).
PhiFunction kullback_phi();

// Equivalent generator phi~(x) = phi(x) - (x - 1) phi'(1) with phi~'(1) = 0.
PhiFunction normalize_phi(const PhiFunction& f);

// D_phi(u, p).  Throws LengthMismatch for unequal lengths and
// NonpositiveWeight when u has a negative entry or p has a negative entry.
// Zero entries are handled by the boundary conventions above; the result is
// +inf when a zero p_i meets a positive u_i and phi grows superlinearly.
double d_phi(const VectorXd& u, const VectorXd& p, const PhiFunction& f);

// h(D_phi(u, p)).  Throws DomainError if D_phi lands outside the domain of h
// (h returning NaN/-inf).
double hphi_divergence(const VectorXd& u, const VectorXd& p,
                       const PhiFunction& f, const HFunction& h);

// Renyi-type transform of order a (a != 0, a != 1):
//   h(x) = log(a (a - 1) x + 1) / (a (a - 1))
// paired with phi_a(x) = (x^a - a (x - 1) - 1) / (a (a - 1)).
HFunction renyi_h(double a);
PhiFunction renyi_phi(double a);

// Sharma-Mittal transform of orders (a, b), a != 1, b != 1:
//   h(x) = ((1 + a (a - 1) x)^{(b - 1)/(a - 1)} - 1) / (b - 1)
HFunction sharma_mittal_h(double a, double b);

} // namespace eltest

#endif
