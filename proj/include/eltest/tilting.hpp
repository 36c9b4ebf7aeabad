// tilting.hpp
//
// Inner (multiplier) problems given a fixed parameter value:
//
//   exponential tilting (ET): t solves (1/n) sum_i exp(t'g_i) g_i = 0,
//     the stationarity condition of the convex dual
//     K(t) = (1/n) sum_i exp(t'g_i); weights p_i = exp(t'g_i)/sum_j exp(t'g_j).
//
//   empirical likelihood (EL): t solves (1/n) sum_i g_i / (1 + t'g_i) = 0
//     subject to 1 + t'g_i > 1/n; weights p_i = (1/n) / (1 + t'g_i).
//
// Both solvers use damped Newton iterations on a convex criterion and report
// HullFailure when zero is not in the interior of the convex hull of the
// moment vectors.

#ifndef ELTEST_TILTING_HPP_INCLUDED
#define ELTEST_TILTING_HPP_INCLUDED

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eltest/model.hpp"

namespace eltest {

enum class TiltMethod { EL, ET };

struct TiltSolution {
    VectorXd t;       // multiplier, length r
    VectorXd weights; // implied probabilities, length n, positive, sum to 1
    TiltMethod method = TiltMethod::ET;
    int iterations = 0;
    double residual_norm = 0.0; // max-norm of the estimating equation at t
    bool converged = false;
};

// Solve the ET multiplier problem by damped Newton with Armijo backtracking
// on the dual criterion, starting from t = 0.  Throws HullFailure when the
// iteration diverges (|t|_inf > 1e6 or no progress), SingularMoments when
// the dual Hessian is numerically singular.  When dual_trace is non-null the
// dual value K(t) is appended at every accepted iterate.
TiltSolution solve_et_multiplier(const MomentMatrix& mm, double tol = 1e-10,
                                 int max_iter = 100,
                                 std::vector<double>* dual_trace = nullptr);

// ET weights for a given multiplier, computed with a max-shift so large
// t'g_i cannot overflow.
VectorXd et_weights(const MomentMatrix& mm, const VectorXd& t);

// Solve the EL multiplier problem by damped Newton on the convex criterion
// -(1/n) sum_i log(1 + t'g_i), with step halving keeping every
// 1 + t'g_i >= 1/n.
TiltSolution solve_el_multiplier(const MomentMatrix& mm, double tol = 1e-10,
                                 int max_iter = 100);

// EL weights for a given multiplier.
VectorXd el_weights(const MomentMatrix& mm, const VectorXd& t);

// Per-observation profile log-likelihood of the exponentially tilted
// empirical likelihood at the ET solution:
//   -log( (1/n) sum_i exp( t' (g_i - gbar_n) ) )
// where gbar_n is the sample mean of the moments.  Equals
// (1/n) sum_i log p_i + log n for the ET weights p_i.
double etel_loglik(const MomentMatrix& mm, const TiltSolution& et);

std::string to_string(TiltMethod m);

} // namespace eltest

#endif
