// estimators.hpp
//
// Outer parameter estimation by minimizing the profiled inner criterion:
//
//   EL   : minimize -(1/n) sum_i log(n p_EL,i(theta))
//   ET   : minimize sum_i p_ET,i(theta) log(n p_ET,i(theta))
//   ETEL : minimize -(1/n) sum_i log(n p_ET,i(theta))
//          (equivalently, maximize the tilted profile log-likelihood)
//
// For scalar parameters the search is a coarse scan followed by
// golden-section refinement; for vector parameters a Nelder-Mead simplex.
// Inner multiplier failures are treated as +inf criterion values.

#ifndef ELTEST_ESTIMATORS_HPP_INCLUDED
#define ELTEST_ESTIMATORS_HPP_INCLUDED

#include <string>

#include "eltest/model.hpp"
#include "eltest/tilting.hpp"

namespace eltest {

enum class EstMethod { EL, ET, ETEL };

struct EstimatorResult {
    EstMethod method = EstMethod::ETEL;
    VectorXd theta_hat;
    TiltSolution tilt;    // inner solution at theta_hat (ET tilt for ETEL)
    double objective = 0; // criterion value at theta_hat
    int outer_iterations = 0;
    bool converged = false;
    int failures = 0; // candidate evaluations rejected as infeasible
};

// Profiled criterion at a fixed parameter value.  Propagates HullFailure /
// SingularMoments from the inner solve.
double profile_criterion(EstMethod method, const MomentModel& model,
                         const Sample& sample, const VectorXd& theta);

EstimatorResult estimate_el(const MomentModel& model, const Sample& sample,
                            const VectorXd& init);
EstimatorResult estimate_et(const MomentModel& model, const Sample& sample,
                            const VectorXd& init);
EstimatorResult estimate_etel(const MomentModel& model, const Sample& sample,
                              const VectorXd& init);

// Generic entry point used by the three wrappers above.
EstimatorResult estimate(EstMethod method, const MomentModel& model,
                         const Sample& sample, const VectorXd& init);

std::string to_string(EstMethod m);
EstMethod est_method_from_string(const std::string& name);

} // namespace eltest

#endif
