// asymptotics.hpp
//
// Large-sample machinery for the divergence tests: sandwich variance blocks,
// influence functions, analytic gradients of the profiled divergences,
// power approximations under fixed and local alternatives, and the stacked
// estimating-equation sandwich that stays valid under misspecification.

#ifndef ELTEST_ASYMPTOTICS_HPP_INCLUDED
#define ELTEST_ASYMPTOTICS_HPP_INCLUDED

#include "eltest/divergence.hpp"
#include "eltest/estimators.hpp"
#include "eltest/model.hpp"
#include "eltest/testing.hpp"
#include "eltest/tilting.hpp"

namespace eltest {

// Moment variance blocks evaluated from a sample:
//   S11 = (1/n) sum g g'            (r x r)
//   S12 = (1/n) sum d g / d theta'  (r x p)
//   V   = (S12' S11^{-1} S12)^{-1}  (p x p)  -- estimator variance
//   R   = S11^{-1} - S11^{-1} S12 V S12' S11^{-1}  -- multiplier variance
struct SandwichBlocks {
    MatrixXd s11, s12, v, r;
};

SandwichBlocks sandwich_blocks(const MomentModel& model, const Sample& sample,
                               const VectorXd& theta);

// Normal approximation to the power of a divergence test under a fixed
// alternative theta_star, computed by replacing population expectations with
// sample means over a sample drawn under theta_star:
//   nu = sqrt(n) (phi''(1) chi2_{p,alpha} / (2n) - mu) / sqrt(s' M s)
//   beta_star = 1 - Phi(nu)
struct FixedAltApprox {
    VectorXd tau; // tilting multiplier of the null moments under theta_star
    double mu = 0.0;
    VectorXd s;
    MatrixXd m;
    double nu = 0.0;
    double beta_star = 0.0;
};

// Multiplier tau solving the tilted null moment equation under the
// alternative; identical to solve_et_multiplier at theta0.
VectorXd solve_tau(const MomentMatrix& mm_theta0);

FixedAltApprox power_approx_t(const MomentModel& model, const Sample& sample,
                              const VectorXd& theta0,
                              const VectorXd& theta_star,
                              const PhiFunction& f, int n_eval, double alpha);

FixedAltApprox power_approx_s(const MomentModel& model, const Sample& sample,
                              const VectorXd& theta0,
                              const VectorXd& theta_star,
                              const PhiFunction& f, int n_eval, double alpha);

// Power under local alternatives theta0 + delta / sqrt(n): the statistics
// are noncentral chi-square with noncentrality delta' V^{-1} delta.
double contiguous_power(const SandwichBlocks& blocks, const VectorXd& delta,
                        double alpha);

// Influence function of the estimated multiplier functionals:
//   EL   : t' G_x / (1 + t'g(x))
//   ET   : t' G_x * exp(t'g(x))
//   ETEL : t' G_x * (exp(t'g(x)) - mean_exp)
// Returns a vector of length p.  Throws PoleEncountered at 1 + t'g(x) = 0.
VectorXd influence_rho(EstMethod method, const MomentModel& model,
                       const VectorXd& x_row, const VectorXd& theta,
                       const VectorXd& t, double mean_exp);

// Squared norm g' S11^{-1} S12 V S12' S11^{-1} g of the limiting estimator
// influence function in the V metric.
double if2_s(const SandwichBlocks& blocks, const VectorXd& g);

// Same quantity computed through the influence function IF = V S12' S11^{-1} g
// and IF' V^{-1} IF; used to cross-check if2_s.
double if2_s_via_if(const SandwichBlocks& blocks, const VectorXd& g);

// Gradient d p_i(theta) / d theta' of the exponentially tilted weights,
// one row per observation (n x p).  Rows sum to zero across observations.
MatrixXd weight_gradient(const MomentModel& model, const Sample& sample,
                         const VectorXd& theta);

// Analytic gradient of D_phi(uniform, p(theta)) with respect to theta.
// The same expression with sample means read as expectations is the
// plug-in population slope used by the misspecified-power approximation.
VectorXd dphi_u_gradient(const MomentModel& model, const Sample& sample,
                         const VectorXd& theta, const PhiFunction& f);

// Analytic gradient of D_phi(p(theta), p(theta0)) with respect to theta.
VectorXd dphi_pp_gradient(const MomentModel& model, const Sample& sample,
                          const VectorXd& theta, const VectorXd& theta0,
                          const PhiFunction& f);

// Joint pseudo-value of the stacked estimating system
// (theta, t, kappa, tau): the tilted-profile estimator, its multiplier, the
// auxiliary multiplier kappa, and the mean exponential tilt tau.
struct JointPseudoValue {
    VectorXd theta;
    VectorXd t;
    VectorXd kappa;
    double tau_scalar = 1.0;
};

// Fit the stacked system on a sample: theta and t from the tilted-profile
// estimator, tau as the mean exponential tilt, kappa from the linear
// second-block equation.
JointPseudoValue misspec_fit(const MomentModel& model, const Sample& sample,
                             const VectorXd& init);

// Stacked estimating function, averaged over the sample, at beta.
VectorXd misspec_system_mean(const MomentModel& model, const Sample& sample,
                             const JointPseudoValue& beta);

// Sandwich covariance of the stacked system:
//   Gamma = d E phi / d beta' (finite differences), Phi = E phi phi',
//   Sigma_theta = leading p x p block of Gamma^{-1} Phi Gamma^{-T}.
struct MisspecLaw {
    MatrixXd gamma;
    MatrixXd phi;
    MatrixXd sigma_theta;
    VectorXd r_or_q;  // slope of the divergence in theta at the pseudo-value
    double mu_star = 0.0;
    double nu = 0.0;
    double beta_star = 0.0;
};

MisspecLaw misspec_sandwich(const MomentModel& model, const Sample& sample,
                            const JointPseudoValue& beta);

// Normal power approximation under misspecification for the T, S, or G2
// family, with expectations replaced by sample means over a sample drawn
// under the pseudo-true regime.
MisspecLaw misspec_power(TestFamily family, const MomentModel& model,
                         const Sample& sample, const VectorXd& theta0,
                         const JointPseudoValue& beta, const PhiFunction& f,
                         int n_eval, double alpha);

// Closed-form power ingredients for the builtin normal model under correct
// specification at theta0 = 0 and a power-divergence generator: mean shift
// mu, scalar variance s'Ms, and the resulting (nu, beta_star).
struct ClosedFormPower {
    double mu = 0.0;
    double sms = 0.0;
    double nu = 0.0;
    double beta_star = 0.0;
};

ClosedFormPower builtin_power_closed_form_t(double lambda, double theta_star,
                                            int n, double alpha);

} // namespace eltest

#endif
