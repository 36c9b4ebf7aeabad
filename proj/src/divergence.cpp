// divergence.cpp -- phi-divergence generators and evaluation.

#include "eltest/divergence.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace eltest {

namespace {

constexpr double kBranchTol = 1e-8; // lambda branch selection tolerance
const double kInf = std::numeric_limits<double>::infinity();

} // namespace

PhiFunction power_divergence_phi(double lambda) {
    PhiFunction f;
    f.dd1 = 1.0; // phi_lambda''(x) = x^{lambda - 1}, so phi''(1) = 1
    if (std::abs(lambda) < kBranchTol) {
        // Kullback limit lambda -> 0.
        f.phi = [](double x) { return x <= 0.0 ? 1.0 : x * std::log(x) - x + 1.0; };
        f.dphi = [](double x) { return std::log(x); };
        f.slope_at_inf = kInf;
        f.label = "power(0)";
    } else if (std::abs(lambda + 1.0) < kBranchTol) {
        // Reverse Kullback limit lambda -> -1.
        f.phi = [](double x) { return -std::log(x) + x - 1.0; };
        f.dphi = [](double x) { return 1.0 - 1.0 / x; };
        f.slope_at_inf = 1.0;
        f.label = "power(-1)";
    } else {
        const double c = lambda * (lambda + 1.0);
        f.phi = [lambda, c](double x) {
            return (std::pow(x, lambda + 1.0) - x - lambda * (x - 1.0)) / c;
        };
        f.dphi = [lambda](double x) {
            return (std::pow(x, lambda) - 1.0) / lambda;
        };
        f.slope_at_inf = lambda > 0.0 ? kInf : -1.0 / lambda;
        f.label = "power(" + std::to_string(lambda) + ")";
    }
    f.psi = [phi = f.phi, dphi = f.dphi](double x) {
        return phi(x) - x * dphi(x);
    };
    return f;
}

PhiFunction kullback_phi() { return power_divergence_phi(0.0); }

PhiFunction normalize_phi(const PhiFunction& f) {
    PhiFunction g = f;
    const double d1 = f.dphi(1.0);
    g.phi = [phi = f.phi, d1](double x) { return phi(x) - (x - 1.0) * d1; };
    g.dphi = [dphi = f.dphi, d1](double x) { return dphi(x) - d1; };
    g.psi = [phi = g.phi, dphi = g.dphi](double x) {
        return phi(x) - x * dphi(x);
    };
    if (std::isfinite(f.slope_at_inf)) {
        g.slope_at_inf = f.slope_at_inf - d1;
    }
    g.label = f.label + "~";
    return g;
}

double d_phi(const VectorXd& u, const VectorXd& p, const PhiFunction& f) {
    if (u.size() != p.size()) {
        throw LengthMismatch("d_phi: weight vectors of unequal length");
    }
    for (int i = 0; i < u.size(); ++i) {
        if (u[i] < 0.0 || p[i] < 0.0) {
            throw NonpositiveWeight("d_phi: negative weight at index " +
                                    std::to_string(i));
        }
    }
    double acc = 0.0;
    for (int i = 0; i < u.size(); ++i) {
        if (p[i] == 0.0) {
            if (u[i] == 0.0) continue;          // 0 * phi(0/0) = 0
            if (f.slope_at_inf == kInf) return kInf;
            acc += u[i] * f.slope_at_inf;       // u * lim phi(t)/t
        } else {
            acc += p[i] * f.phi(u[i] / p[i]);
        }
    }
    return acc;
}

double hphi_divergence(const VectorXd& u, const VectorXd& p,
                       const PhiFunction& f, const HFunction& h) {
    const double d = d_phi(u, p, f);
    const double out = h.h(d);
    if (std::isnan(out) || out == -kInf) {
        throw DomainError("hphi_divergence: divergence value outside the "
                          "domain of " + h.label);
    }
    return out;
}

HFunction renyi_h(double a) {
    if (std::abs(a) < kBranchTol || std::abs(a - 1.0) < kBranchTol) {
        throw InvalidOrder("renyi_h: order must satisfy a != 0, a != 1");
    }
    HFunction h;
    const double c = a * (a - 1.0);
    h.h = [c](double x) { return std::log(c * x + 1.0) / c; };
    h.dh0 = 1.0;
    h.label = "renyi(" + std::to_string(a) + ")";
    return h;
}

PhiFunction renyi_phi(double a) {
    if (std::abs(a) < kBranchTol || std::abs(a - 1.0) < kBranchTol) {
        throw InvalidOrder("renyi_phi: order must satisfy a != 0, a != 1");
    }
    // (x^a - a (x - 1) - 1) / (a (a - 1)) is the power generator at
    // lambda = a - 1.
    PhiFunction f = power_divergence_phi(a - 1.0);
    f.label = "renyi_phi(" + std::to_string(a) + ")";
    return f;
}

HFunction sharma_mittal_h(double a, double b) {
    if (std::abs(a - 1.0) < kBranchTol || std::abs(a) < kBranchTol ||
        std::abs(b - 1.0) < kBranchTol) {
        throw InvalidOrder(
            "sharma_mittal_h: orders must satisfy a != 0, a != 1, b != 1");
    }
    HFunction h;
    const double c = a * (a - 1.0);
    const double m = (b - 1.0) / (a - 1.0);
    h.h = [c, m, b](double x) {
        return (std::pow(1.0 + c * x, m) - 1.0) / (b - 1.0);
    };
    h.dh0 = a; // d/dx at 0: m * c / (b - 1) = a
    h.label = "sharma_mittal(" + std::to_string(a) + "," + std::to_string(b) + ")";
    return h;
}

} // namespace eltest
