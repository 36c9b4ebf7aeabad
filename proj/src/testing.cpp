// testing.cpp -- divergence test statistics and distribution helpers.

#include "eltest/testing.hpp"

#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

namespace eltest {

// --- distribution helpers --------------------------------------------------

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Wichura's algorithm AS 241 (PPND16): rational approximations to the
// standard normal quantile accurate to about 1e-16 relative error.
double normal_quantile(double q) {
    if (!(q > 0.0 && q < 1.0)) {
        if (q == 0.0) return -std::numeric_limits<double>::infinity();
        if (q == 1.0) return std::numeric_limits<double>::infinity();
        throw DomainError("normal_quantile: argument outside [0, 1]");
    }
    const double p = q - 0.5;
    double r, num, den;
    if (std::abs(p) <= 0.425) {
        r = 0.180625 - p * p;
        num = (((((((2.5090809287301226727e3 * r +
                     3.3430575583588128105e4) * r +
                    6.7265770927008700853e4) * r +
                   4.5921953931549871457e4) * r +
                  1.3731693765509461125e4) * r +
                 1.9715909503065514427e3) * r +
                1.3314166789178437745e2) * r +
               3.3871328727963666080e0);
        den = (((((((5.2264952788528545610e3 * r +
                     2.8729085735721942674e4) * r +
                    3.9307895800092710610e4) * r +
                   2.1213794301586595867e4) * r +
                  5.3941960214247511077e3) * r +
                 6.8718700749205790830e2) * r +
                4.2313330701600911252e1) * r + 1.0);
        return p * num / den;
    }
    r = p < 0.0 ? q : 1.0 - q;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
        r -= 1.6;
        num = (((((((7.74545014278341407640e-4 * r +
                     2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r +
                   1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r +
                 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r +
               1.42343711074968357734e0);
        den = (((((((1.05075007164441684324e-9 * r +
                     5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r +
                   1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r +
                 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        num = (((((((2.01033439929228813265e-7 * r +
                     2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r +
                   2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r +
                 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r +
               6.65790464350110377720e0);
        den = (((((((2.04426310338993978564e-15 * r +
                     1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r +
                   7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r +
                 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    const double val = num / den;
    return p < 0.0 ? -val : val;
}

double chi2_cdf(double x, double k) {
    if (x <= 0.0) return 0.0;
    return boost::math::gamma_p(k / 2.0, x / 2.0);
}

namespace {

double chi2_pdf(double x, double k) {
    if (x <= 0.0) return 0.0;
    return std::exp((k / 2.0 - 1.0) * std::log(x) - x / 2.0 -
                    (k / 2.0) * std::log(2.0) -
                    std::lgamma(k / 2.0));
}

} // namespace

double chi2_quantile(double q, double k) {
    if (!(q >= 0.0 && q < 1.0)) {
        throw DomainError("chi2_quantile: probability outside [0, 1)");
    }
    if (q == 0.0) return 0.0;

    // Wilson-Hilferty starting value, then Newton safeguarded by bisection.
    const double z = normal_quantile(q);
    const double c = 2.0 / (9.0 * k);
    double x = k * std::pow(1.0 - c + z * std::sqrt(c), 3.0);
    if (!(x > 0.0)) x = k;

    double lo = 0.0, hi = x;
    while (chi2_cdf(hi, k) < q) {
        lo = hi;
        hi *= 2.0;
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double f = chi2_cdf(x, k) - q;
        if (std::abs(f) <= 1e-10) return x;
        if (f > 0.0) hi = x; else lo = x;
        const double d = chi2_pdf(x, k);
        double next = d > 0.0 ? x - f / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x = next;
    }
    return x;
}

double noncentral_chi2_cdf(double x, double k, double ncp) {
    if (x <= 0.0) return 0.0;
    if (ncp <= 0.0) return chi2_cdf(x, k);
    const double half = ncp / 2.0;
    double weight = std::exp(-half); // Poisson(j = 0) mass
    double mass_used = weight;
    double acc = weight * chi2_cdf(x, k);
    for (int j = 1; j < 100000; ++j) {
        weight *= half / static_cast<double>(j);
        mass_used += weight;
        acc += weight * chi2_cdf(x, k + 2.0 * j);
        if (1.0 - mass_used < 1e-12) break;
    }
    return acc;
}

// --- statistics ------------------------------------------------------------

TiltSolution null_tilt(EstMethod method, const MomentModel& model,
                       const Sample& sample, const VectorXd& theta) {
    MomentMatrix mm = evaluate_moments(model, sample, theta);
    try {
        return method == EstMethod::EL ? solve_el_multiplier(mm)
                                       : solve_et_multiplier(mm);
    } catch (const HullFailure& e) {
        throw NullInfeasible(
            std::string("null_tilt: infeasible at the hypothesized "
                        "parameter: ") + e.what());
    }
}

namespace {

VectorXd uniform_weights(int n) {
    return VectorXd::Constant(n, 1.0 / static_cast<double>(n));
}

} // namespace

double t_statistic(const MomentModel& model, const Sample& sample,
                   const VectorXd& theta0, const PhiFunction& f,
                   const EstimatorResult& est) {
    TiltSolution w0 = null_tilt(est.method, model, sample, theta0);
    const VectorXd u = uniform_weights(sample.n());
    const double n = static_cast<double>(sample.n());
    return (2.0 * n / f.dd1) *
           (d_phi(u, w0.weights, f) - d_phi(u, est.tilt.weights, f));
}

double s_statistic(const MomentModel& model, const Sample& sample,
                   const VectorXd& theta0, const PhiFunction& f,
                   const EstimatorResult& est) {
    TiltSolution w0 = null_tilt(est.method, model, sample, theta0);
    const double n = static_cast<double>(sample.n());
    return (2.0 * n / f.dd1) * d_phi(est.tilt.weights, w0.weights, f);
}

double likelihood_ratio(const MomentModel& model, const Sample& sample,
                        const VectorXd& theta0, const EstimatorResult& est) {
    TiltSolution w0 = null_tilt(est.method, model, sample, theta0);
    return 2.0 * (est.tilt.weights.array().log().sum() -
                  w0.weights.array().log().sum());
}

double hphi_t_statistic(const MomentModel& model, const Sample& sample,
                        const VectorXd& theta0, const PhiFunction& f,
                        const HFunction& h, const EstimatorResult& est) {
    TiltSolution w0 = null_tilt(est.method, model, sample, theta0);
    const VectorXd u = uniform_weights(sample.n());
    const double n = static_cast<double>(sample.n());
    return (2.0 * n / (f.dd1 * h.dh0)) *
           (hphi_divergence(u, w0.weights, f, h) -
            hphi_divergence(u, est.tilt.weights, f, h));
}

double hphi_s_statistic(const MomentModel& model, const Sample& sample,
                        const VectorXd& theta0, const PhiFunction& f,
                        const HFunction& h, const EstimatorResult& est) {
    TiltSolution w0 = null_tilt(est.method, model, sample, theta0);
    const double n = static_cast<double>(sample.n());
    return (2.0 * n / (f.dd1 * h.dh0)) *
           hphi_divergence(est.tilt.weights, w0.weights, f, h);
}

TestResult run_simple_test(TestFamily family, const MomentModel& model,
                           const Sample& sample, const VectorXd& theta0,
                           const PhiFunction& f, const HFunction* h,
                           EstMethod est_method, const VectorXd& init,
                           double alpha) {
    EstimatorResult est = estimate(est_method, model, sample, init);

    TestResult res;
    res.family = family;
    res.estimator = est_method;
    res.alpha = alpha;
    res.df = model.p;
    res.lambda_or_phi = f.label;
    switch (family) {
    case TestFamily::T:
        res.statistic = t_statistic(model, sample, theta0, f, est);
        break;
    case TestFamily::S:
        res.statistic = s_statistic(model, sample, theta0, f, est);
        break;
    case TestFamily::G2:
        res.statistic = likelihood_ratio(model, sample, theta0, est);
        res.lambda_or_phi = "kullback";
        break;
    case TestFamily::T_h:
        if (!h) throw ConfigError("run_simple_test: missing h transform");
        res.statistic = hphi_t_statistic(model, sample, theta0, f, *h, est);
        res.lambda_or_phi = f.label + "/" + h->label;
        break;
    case TestFamily::S_h:
        if (!h) throw ConfigError("run_simple_test: missing h transform");
        res.statistic = hphi_s_statistic(model, sample, theta0, f, *h, est);
        res.lambda_or_phi = f.label + "/" + h->label;
        break;
    }
    res.critical_value = chi2_quantile(1.0 - alpha, res.df);
    res.p_value =
        res.statistic >= 0.0 ? 1.0 - chi2_cdf(res.statistic, res.df) : 1.0;
    res.reject = res.statistic > res.critical_value;
    return res;
}

std::string to_string(TestFamily f) {
    switch (f) {
    case TestFamily::T: return "T";
    case TestFamily::S: return "S";
    case TestFamily::G2: return "G2";
    case TestFamily::T_h: return "T_h";
    case TestFamily::S_h: return "S_h";
    }
    return "?";
}

TestFamily test_family_from_string(const std::string& name) {
    if (name == "T" || name == "t") return TestFamily::T;
    if (name == "S" || name == "s") return TestFamily::S;
    if (name == "G2" || name == "g2") return TestFamily::G2;
    if (name == "T_h" || name == "t_h") return TestFamily::T_h;
    if (name == "S_h" || name == "s_h") return TestFamily::S_h;
    throw ConfigError("unknown test family: " + name);
}

} // namespace eltest
