// testing.hpp
//
// Divergence-based test statistics for H0: theta = theta0 in moment-condition
// models, plus the distribution helpers they require.
//
// With implied probabilities p_i(theta) of the chosen estimator family
// (EL weights for the EL estimator, ET weights for the ET and tilted-profile
// estimators) and uniform weights u_i = 1/n:
//
//   T = (2n / phi''(1)) * ( D_phi(u, p(theta0)) - D_phi(u, p(theta_hat)) )
//   S = (2n / phi''(1)) *   D_phi(p(theta_hat), p(theta0))
//   G2 = 2 sum_i log p_i(theta_hat) - 2 sum_i log p_i(theta0)
//
// G2 coincides with T for the Kullback generator.  The (h, phi) variants
// apply an outer transform h and divide by phi''(1) * h'(0).  All statistics
// are asymptotically chi-square with p degrees of freedom under H0.

#ifndef ELTEST_TESTING_HPP_INCLUDED
#define ELTEST_TESTING_HPP_INCLUDED

#include <string>

#include "eltest/divergence.hpp"
#include "eltest/estimators.hpp"
#include "eltest/model.hpp"

namespace eltest {

enum class TestFamily { T, S, G2, T_h, S_h };

struct TestResult {
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
    double critical_value = 0.0;
    double alpha = 0.05;
    bool reject = false;
    TestFamily family = TestFamily::T;
    EstMethod estimator = EstMethod::ETEL;
    std::string lambda_or_phi; // label of the generator / transform used
};

// --- distribution helpers --------------------------------------------------

// Standard normal CDF (absolute error below 1e-12).
double normal_cdf(double x);

// Standard normal quantile (inverse CDF).
double normal_quantile(double q);

// Central chi-square CDF with k > 0 degrees of freedom; 0 for x <= 0.
double chi2_cdf(double x, double k);

// Chi-square quantile by bracketed Newton iteration, |CDF(x) - q| <= 1e-10.
double chi2_quantile(double q, double k);

// Noncentral chi-square CDF via the Poisson mixture representation,
// truncated when the remaining Poisson mass is below 1e-12.
double noncentral_chi2_cdf(double x, double k, double ncp);

// --- statistics ------------------------------------------------------------

// Implied probabilities of the estimator family at an arbitrary parameter
// value: EL weights for EL, ET weights for ET/ETEL.  Throws NullInfeasible
// when the multiplier problem has no solution at theta.
TiltSolution null_tilt(EstMethod method, const MomentModel& model,
                       const Sample& sample, const VectorXd& theta);

double t_statistic(const MomentModel& model, const Sample& sample,
                   const VectorXd& theta0, const PhiFunction& f,
                   const EstimatorResult& est);

double s_statistic(const MomentModel& model, const Sample& sample,
                   const VectorXd& theta0, const PhiFunction& f,
                   const EstimatorResult& est);

double likelihood_ratio(const MomentModel& model, const Sample& sample,
                        const VectorXd& theta0, const EstimatorResult& est);

double hphi_t_statistic(const MomentModel& model, const Sample& sample,
                        const VectorXd& theta0, const PhiFunction& f,
                        const HFunction& h, const EstimatorResult& est);

double hphi_s_statistic(const MomentModel& model, const Sample& sample,
                        const VectorXd& theta0, const PhiFunction& f,
                        const HFunction& h, const EstimatorResult& est);

// Estimate, compute one statistic, and package the chi-square decision.
// Negative statistics (possible for non-Kullback generators in small
// samples) are reported as-is and never reject.
TestResult run_simple_test(TestFamily family, const MomentModel& model,
                           const Sample& sample, const VectorXd& theta0,
                           const PhiFunction& f, const HFunction* h,
                           EstMethod est_method, const VectorXd& init,
                           double alpha = 0.05);

std::string to_string(TestFamily f);
TestFamily test_family_from_string(const std::string& name);

} // namespace eltest

#endif
