// Tests for the large-sample machinery: sandwich blocks, analytic gradients
// against finite differences, influence functions, and the power
// approximations under fixed, local, and misspecified alternatives.

#include <cmath>

#include "doctest.h"

#include "eltest/asymptotics.hpp"
#include "eltest/montecarlo.hpp"
#include "eltest/testing.hpp"
#include "eltest/tilting.hpp"

using namespace eltest;

namespace {

VectorXd scalar(double v) {
    VectorXd out(1);
    out[0] = v;
    return out;
}

// ET weights of the builtin model at theta, as a probability vector.
VectorXd et_probs(const MomentModel& m, const Sample& s, double theta) {
    MomentMatrix mm = evaluate_moments(m, s, scalar(theta));
    return solve_et_multiplier(mm).weights;
}

double rel_err(const VectorXd& got, const VectorXd& want) {
    const double scale = std::max(1e-10, want.lpNorm<Eigen::Infinity>());
    return (got - want).lpNorm<Eigen::Infinity>() / scale;
}

MomentModel location_model() {
    MomentModel m;
    m.p = 1;
    m.r = 1;
    m.g = [](const VectorXd& x, const VectorXd& theta) {
        VectorXd out(1);
        out[0] = x[0] - theta[0];
        return out;
    };
    m.jacobian = [](const VectorXd&, const VectorXd&) {
        MatrixXd j(1, 1);
        j(0, 0) = -1.0;
        return j;
    };
    return m;
}

} // namespace

TEST_SUITE("asymptotics") {

TEST_CASE("analytic gradients match finite differences") {
    MomentModel m = mean_variance_normal_model(1.0);
    const double lambdas[4] = {-1.0, -0.5, 0.0, 2.0 / 3.0};
    const double deltas[3] = {0.7, 1.0, 1.3};
    int config = 0;
    for (int rep = 0; rep < 20; ++rep) {
        ExperimentConfig cfg;
        cfg.n = 300;
        cfg.delta = deltas[rep % 3];
        cfg.theta_true = -0.4 + 0.06 * rep;
        cfg.master_seed = 1000 + rep;
        Sample s = draw_sample(cfg, 0);
        const double theta = cfg.theta_true + 0.05;
        const double theta0 = cfg.theta_true - 0.05;
        PhiFunction f = power_divergence_phi(lambdas[rep % 4]);
        const double h = 1e-5 * std::max(1.0, std::abs(theta));
        const double dn = static_cast<double>(cfg.n);
        VectorXd u = VectorXd::Constant(cfg.n, 1.0 / dn);

        // weight gradient, one derivative per observation.
        MatrixXd grad = weight_gradient(m, s, scalar(theta));
        VectorXd pf = et_probs(m, s, theta + h);
        VectorXd pb = et_probs(m, s, theta - h);
        VectorXd fd = (pf - pb) / (2.0 * h);
        CHECK(rel_err(grad.col(0), fd) < 1e-4);
        // the derivative of a probability vector sums to zero.
        CHECK(std::abs(grad.col(0).sum()) < 1e-10);

        // gradient of D_phi(uniform, p(theta)).
        VectorXd gu = dphi_u_gradient(m, s, scalar(theta), f);
        const double du_f = d_phi(u, et_probs(m, s, theta + h), f);
        const double du_b = d_phi(u, et_probs(m, s, theta - h), f);
        VectorXd fdu = scalar((du_f - du_b) / (2.0 * h));
        CHECK(rel_err(gu, fdu) < 1e-4);

        // gradient of D_phi(p(theta), p(theta0)) in the first argument's
        // parameter.
        VectorXd p0 = et_probs(m, s, theta0);
        VectorXd gp = dphi_pp_gradient(m, s, scalar(theta), scalar(theta0), f);
        const double dp_f = d_phi(et_probs(m, s, theta + h), p0, f);
        const double dp_b = d_phi(et_probs(m, s, theta - h), p0, f);
        VectorXd fdp = scalar((dp_f - dp_b) / (2.0 * h));
        CHECK(rel_err(gp, fdp) < 1e-4);
        ++config;
    }
    CHECK(config == 20);
}

TEST_CASE("kullback slope equals the profile criterion derivative") {
    MomentModel m = mean_variance_normal_model(1.0);
    ExperimentConfig cfg;
    cfg.n = 400;
    cfg.theta_true = 0.1;
    Sample s = draw_sample(cfg, 14);
    const double theta = 0.2;
    const double h = 1e-5;
    VectorXd g = dphi_u_gradient(m, s, scalar(theta), kullback_phi());
    const double fd = (profile_criterion(EstMethod::ETEL, m, s,
                                         scalar(theta + h)) -
                       profile_criterion(EstMethod::ETEL, m, s,
                                         scalar(theta - h))) /
                      (2.0 * h);
    CHECK(g[0] == doctest::Approx(fd).epsilon(1e-5));

    // At the tilted-profile optimum the slope vanishes.
    EstimatorResult est = estimate_etel(m, s, scalar(0.0));
    VectorXd at_hat = dphi_u_gradient(m, s, est.theta_hat, kullback_phi());
    CHECK(std::abs(at_hat[0]) < 1e-5);
}

TEST_CASE("sandwich blocks in just- and over-identified models") {
    ExperimentConfig cfg;
    cfg.n = 2000;
    cfg.theta_true = 0.0;
    Sample s = draw_sample(cfg, 8);

    // r = p: the multiplier variance R vanishes.
    SandwichBlocks ji = sandwich_blocks(location_model(), s, scalar(0.0));
    CHECK(std::abs(ji.r(0, 0)) < 1e-10);
    CHECK(ji.v(0, 0) == doctest::Approx(ji.s11(0, 0)).epsilon(1e-10));

    // Over-identified builtin model: V positive, R positive semidefinite.
    SandwichBlocks b =
        sandwich_blocks(mean_variance_normal_model(1.0), s, scalar(0.0));
    CHECK(b.v(0, 0) > 0.0);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(b.r);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);

    // the two influence-norm routes agree.
    VectorXd g(2);
    g << 0.7, -1.3;
    CHECK(std::abs(if2_s(b, g) - if2_s_via_if(b, g)) <= 1e-10);
}

TEST_CASE("contiguous power endpoints") {
    SandwichBlocks b;
    b.v = MatrixXd::Identity(1, 1);
    // No shift: rejection probability is exactly the level.
    CHECK(std::abs(contiguous_power(b, scalar(0.0), 0.05) - 0.05) <= 1e-9);
    // ncp = 4 against chi2_1: closed form through the normal CDF.
    const double crit = chi2_quantile(0.95, 1.0);
    const double direct = 1.0 - (normal_cdf(std::sqrt(crit) - 2.0) -
                                 normal_cdf(-std::sqrt(crit) - 2.0));
    CHECK(contiguous_power(b, scalar(2.0), 0.05) ==
          doctest::Approx(direct).epsilon(1e-9));
    CHECK(contiguous_power(b, scalar(2.0), 0.05) > 0.5);
}

TEST_CASE("influence function pole") {
    MomentModel m = location_model();
    VectorXd t = scalar(-1.0);
    // 1 + t'g = 1 - (x - theta) = 0 at x = theta + 1.
    CHECK_THROWS_AS(
        influence_rho(EstMethod::EL, m, scalar(1.0), scalar(0.0), t, 1.0),
        PoleEncountered);
    VectorXd ok =
        influence_rho(EstMethod::EL, m, scalar(0.5), scalar(0.0), t, 1.0);
    CHECK(ok[0] == doctest::Approx((-1.0) * (-1.0) / 0.5).epsilon(1e-12));
    VectorXd et =
        influence_rho(EstMethod::ET, m, scalar(0.5), scalar(0.0), t, 1.0);
    CHECK(et[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("stacked pseudo-value system") {
    MomentModel m = mean_variance_normal_model(1.0);

    // Correct specification: the pseudo-value collapses to
    // (theta, 0, 0, 1) up to sampling noise, and the averaged system
    // vanishes at the fitted value.
    ExperimentConfig cfg;
    cfg.n = 10000;
    cfg.delta = 1.0;
    cfg.theta_true = 0.0;
    cfg.master_seed = 31;
    Sample s = draw_sample(cfg, 0);
    JointPseudoValue beta = misspec_fit(m, s, scalar(0.0));
    CHECK(std::abs(beta.theta[0]) < 0.05);
    CHECK(beta.t.lpNorm<Eigen::Infinity>() < 0.05);
    CHECK(beta.kappa.lpNorm<Eigen::Infinity>() < 0.1);
    CHECK(beta.tau_scalar == doctest::Approx(1.0).epsilon(0.05));
    VectorXd res = misspec_system_mean(m, s, beta);
    CHECK(res.lpNorm<Eigen::Infinity>() <= 1e-6);

    // Variance mismatch: the tilt converges to (0, (1-delta)/(2 delta)).
    cfg.delta = 0.7;
    cfg.n = 20000;
    Sample s2 = draw_sample(cfg, 1);
    JointPseudoValue beta2 = misspec_fit(m, s2, scalar(0.0));
    CHECK(beta2.t[1] == doctest::Approx(3.0 / 14.0).epsilon(0.25));
    CHECK(std::abs(beta2.t[1] - 3.0 / 14.0) < 0.05);
    VectorXd res2 = misspec_system_mean(m, s2, beta2);
    CHECK(res2.lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("sandwich variance matches the standard one when well specified") {
    MomentModel m = mean_variance_normal_model(1.0);
    ExperimentConfig cfg;
    cfg.n = 10000;
    cfg.delta = 1.0;
    cfg.theta_true = 0.0;
    cfg.master_seed = 77;
    Sample s = draw_sample(cfg, 0);
    JointPseudoValue beta = misspec_fit(m, s, scalar(0.0));
    MisspecLaw law = misspec_sandwich(m, s, beta);
    SandwichBlocks b = sandwich_blocks(m, s, beta.theta);
    CHECK(law.sigma_theta(0, 0) ==
          doctest::Approx(b.v(0, 0)).epsilon(0.15));
}

TEST_CASE("misspecified power approximation") {
    MomentModel m = mean_variance_normal_model(1.0);
    ExperimentConfig cfg;
    cfg.n = 20000;
    cfg.delta = 0.7;
    cfg.theta_true = 0.0;
    cfg.master_seed = 12;
    Sample s = draw_sample(cfg, 0);
    JointPseudoValue beta = misspec_fit(m, s, scalar(0.0));
    VectorXd theta0 = scalar(0.0);

    MisspecLaw g2 =
        misspec_power(TestFamily::G2, m, s, theta0, beta, kullback_phi(),
                      1000, 0.05);
    MisspecLaw t_kull =
        misspec_power(TestFamily::T, m, s, theta0, beta, kullback_phi(),
                      1000, 0.05);
    // The likelihood-ratio branch is the Kullback instance of the T branch.
    CHECK(std::abs(g2.mu_star - t_kull.mu_star) <= 1e-8);
    CHECK((g2.r_or_q - t_kull.r_or_q).lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(std::abs(g2.beta_star - t_kull.beta_star) <= 1e-8);

    for (TestFamily fam : {TestFamily::T, TestFamily::S, TestFamily::G2}) {
        MisspecLaw law = misspec_power(fam, m, s, theta0, beta,
                                       power_divergence_phi(-1.0), 1000, 0.05);
        CHECK(law.beta_star >= 0.0);
        CHECK(law.beta_star <= 1.0);
        CHECK(std::isfinite(law.nu));
    }

    // At the hypothesized value itself the centering term of the S family is
    // a divergence between identical weight systems, hence zero.
    MisspecLaw at_null = misspec_power(
        TestFamily::S, m, s, beta.theta, beta, power_divergence_phi(-1.0),
        1000, 0.05);
    CHECK(std::abs(at_null.mu_star) <= 1e-10);
}

TEST_CASE("closed-form power for the builtin model") {
    ClosedFormPower cf = builtin_power_closed_form_t(-1.0, 0.3, 100, 0.05);
    CHECK(cf.mu == doctest::Approx(0.5 * std::log(1.09)).epsilon(1e-12));
    CHECK(cf.sms > 0.0);
    CHECK(cf.beta_star > 0.5);
    CHECK(cf.beta_star < 0.99);

    // Kullback branch reduces to theta*^2 - log(1 + theta*^2)/2.
    ClosedFormPower k = builtin_power_closed_form_t(0.0, 0.5, 100, 0.05);
    CHECK(k.mu == doctest::Approx(0.25 - 0.5 * std::log(1.25)).epsilon(1e-12));

    // Outside the validity region of the formula.
    CHECK_THROWS_AS(builtin_power_closed_form_t(2.0, 1.0, 100, 0.05),
                    DomainError);
}

TEST_CASE("solve_tau is deterministic") {
    MomentModel m = mean_variance_normal_model(1.0);
    ExperimentConfig cfg;
    cfg.n = 500;
    cfg.delta = 0.7;
    Sample s = draw_sample(cfg, 3);
    MomentMatrix mm = evaluate_moments(m, s, scalar(0.0));
    VectorXd a = solve_tau(mm);
    VectorXd b = solve_tau(mm);
    CHECK(a[0] == b[0]);
    CHECK(a[1] == b[1]);
}

} // TEST_SUITE
