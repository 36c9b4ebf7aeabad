// tilting.cpp -- ET and EL multiplier solvers.

#include "eltest/tilting.hpp"

#include <cmath>
#include <limits>

namespace eltest {

namespace {

constexpr double kArmijo = 1e-4;   // sufficient-decrease constant
constexpr double kShrink = 0.5;    // backtracking shrink factor
constexpr double kMinStep = 1e-14; // smallest admissible step fraction
constexpr double kMaxMult = 1e6;   // divergence guard on |t|_inf

// log of the ET dual K(t) = (1/n) sum_i exp(a_i), a = G t, computed with a
// max shift, plus the normalized exponentials needed by the Newton step.
struct EtState {
    double log_dual;  // log K(t)
    double shift;     // max_i a_i
    VectorXd p;       // exp(a_i) / sum_j exp(a_j)
    double sum_shift; // sum_i exp(a_i - shift)
};

EtState et_state(const MatrixXd& values, const VectorXd& t) {
    EtState st;
    VectorXd a = values * t;
    st.shift = a.maxCoeff();
    VectorXd s = (a.array() - st.shift).exp();
    st.sum_shift = s.sum();
    st.p = s / st.sum_shift;
    st.log_dual = st.shift +
                  std::log(st.sum_shift / static_cast<double>(values.rows()));
    return st;
}

} // namespace

VectorXd et_weights(const MomentMatrix& mm, const VectorXd& t) {
    return et_state(mm.values, t).p;
}

VectorXd el_weights(const MomentMatrix& mm, const VectorXd& t) {
    VectorXd d = (mm.values * t).array() + 1.0;
    VectorXd w = d.cwiseInverse();
    // At the exact multiplier the reciprocals sum to n; renormalizing
    // removes the solver-tolerance slack so the weights always form a
    // probability vector.
    return w / w.sum();
}

TiltSolution solve_et_multiplier(const MomentMatrix& mm, double tol,
                                 int max_iter,
                                 std::vector<double>* dual_trace) {
    const int r = mm.r();
    TiltSolution sol;
    sol.method = TiltMethod::ET;
    sol.t = VectorXd::Zero(r);

    EtState st = et_state(mm.values, sol.t);
    if (dual_trace) dual_trace->push_back(std::exp(st.log_dual));
    for (int iter = 0; iter < max_iter; ++iter) {
        // Weighted mean and second moment of g under the current tilt; these
        // are grad K / K and Hess K / K, so the Newton direction is the same
        // as for K itself.
        // Convergence is measured on the tilted mean sum p_i g_i; the raw
        // estimating equation is exp(logK) times this, which would shrink to
        // zero as t diverges on an infeasible hull and mask the failure.
        VectorXd gw = mm.values.transpose() * st.p;
        sol.residual_norm = gw.lpNorm<Eigen::Infinity>();
        sol.iterations = iter;
        if (sol.residual_norm <= tol) {
            sol.converged = true;
            sol.weights = st.p;
            return sol;
        }

        MatrixXd hw = mm.values.transpose() * st.p.asDiagonal() * mm.values;
        Eigen::FullPivLU<MatrixXd> lu(hw);
        if (!lu.isInvertible()) {
            throw SingularMoments(
                "solve_et_multiplier: singular dual Hessian");
        }
        VectorXd dir = -lu.solve(gw);
        const double slope = gw.dot(dir); // directional derivative of log K

        // Near the optimum the predicted decrease falls below rounding
        // noise in log K; the slack keeps the full Newton step acceptable
        // there (the residual check above terminates the iteration).
        const double slack = 1e-14 * (1.0 + std::abs(st.log_dual));
        double alpha = 1.0;
        EtState trial;
        bool accepted = false;
        while (alpha >= kMinStep) {
            trial = et_state(mm.values, sol.t + alpha * dir);
            if (trial.log_dual <=
                st.log_dual + kArmijo * alpha * slope + slack) {
                accepted = true;
                break;
            }
            alpha *= kShrink;
        }
        if (!accepted) {
            throw HullFailure(
                "solve_et_multiplier: no decrease of the dual criterion");
        }
        sol.t += alpha * dir;
        st = trial;
        if (dual_trace) dual_trace->push_back(std::exp(st.log_dual));
        if (sol.t.lpNorm<Eigen::Infinity>() > kMaxMult) {
            throw HullFailure(
                "solve_et_multiplier: multiplier diverged; zero is outside "
                "the convex hull of the moments");
        }
    }
    throw HullFailure("solve_et_multiplier: iteration budget exhausted");
}

TiltSolution solve_el_multiplier(const MomentMatrix& mm, double tol,
                                 int max_iter) {
    const int n = mm.n();
    const int r = mm.r();
    const double floor = 1.0 / static_cast<double>(n); // 1 + t'g_i >= 1/n

    TiltSolution sol;
    sol.method = TiltMethod::EL;
    sol.t = VectorXd::Zero(r);

    // Convex criterion L(t) = -(1/n) sum log(1 + t'g_i); grad L = -F where F
    // is the estimating equation.
    auto criterion = [&](const VectorXd& d) {
        return -d.array().log().sum() / static_cast<double>(n);
    };
    VectorXd d = VectorXd::Ones(n);
    double crit = 0.0;

    for (int iter = 0; iter < max_iter; ++iter) {
        VectorXd inv = d.cwiseInverse();
        VectorXd f = mm.values.transpose() * inv / static_cast<double>(n);
        sol.residual_norm = f.lpNorm<Eigen::Infinity>();
        sol.iterations = iter;
        if (sol.residual_norm <= tol) {
            sol.converged = true;
            sol.weights = el_weights(mm, sol.t);
            return sol;
        }

        VectorXd inv2 = inv.cwiseProduct(inv);
        MatrixXd h = mm.values.transpose() * inv2.asDiagonal() * mm.values /
                     static_cast<double>(n);
        Eigen::FullPivLU<MatrixXd> lu(h);
        if (!lu.isInvertible()) {
            throw SingularMoments(
                "solve_el_multiplier: singular criterion Hessian");
        }
        VectorXd dir = lu.solve(f); // Newton step: t - H^{-1} grad L = t + H^{-1} F
        const double slope = -f.dot(dir); // grad L . dir, negative

        // Same rounding-noise slack as in the ET solver: near the optimum
        // the predicted decrease is smaller than representable changes.
        const double slack = 1e-14 * (1.0 + std::abs(crit));
        double alpha = 1.0;
        bool accepted = false;
        VectorXd trial_d;
        double trial_crit = 0.0;
        while (alpha >= kMinStep) {
            VectorXd t_try = sol.t + alpha * dir;
            trial_d = (mm.values * t_try).array() + 1.0;
            if (trial_d.minCoeff() >= floor) {
                trial_crit = criterion(trial_d);
                if (trial_crit <= crit + kArmijo * alpha * slope + slack) {
                    accepted = true;
                    break;
                }
            }
            alpha *= kShrink;
        }
        if (!accepted) {
            throw HullFailure(
                "solve_el_multiplier: no feasible decreasing step");
        }
        sol.t += alpha * dir;
        d = trial_d;
        crit = trial_crit;
        if (sol.t.lpNorm<Eigen::Infinity>() > kMaxMult) {
            throw HullFailure(
                "solve_el_multiplier: multiplier diverged; zero is outside "
                "the convex hull of the moments");
        }
    }
    throw HullFailure("solve_el_multiplier: iteration budget exhausted");
}

double etel_loglik(const MomentMatrix& mm, const TiltSolution& et) {
    Eigen::RowVectorXd gbar = mm.values.colwise().mean();
    VectorXd a = (mm.values.rowwise() - gbar) * et.t;
    const double shift = a.maxCoeff();
    const double mean_exp =
        (a.array() - shift).exp().sum() / static_cast<double>(mm.n());
    return -(shift + std::log(mean_exp));
}

std::string to_string(TiltMethod m) {
    return m == TiltMethod::EL ? "EL" : "ET";
}

} // namespace eltest
