// Acceptance gate: one pass/fail line per criterion, nonzero exit when any
// criterion fails.  argv[1] is the path to the command-line binary (used by
// the determinism criterion).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "eltest/asymptotics.hpp"
#include "eltest/divergence.hpp"
#include "eltest/estimators.hpp"
#include "eltest/model.hpp"
#include "eltest/montecarlo.hpp"
#include "eltest/testing.hpp"
#include "eltest/tilting.hpp"

using namespace eltest;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s%s%s\n", criterion,
                pass ? "PASS" : "FAIL", detail.empty() ? "" : " -- ",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

VectorXd scalar(double v) {
    VectorXd out(1);
    out[0] = v;
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

SummaryTable size_experiment(double delta, int n, int R,
                             const std::vector<double>& lambdas) {
    ExperimentConfig cfg;
    cfg.delta = delta;
    cfg.theta_true = 0.0;
    cfg.theta0 = 0.0;
    cfg.n = n;
    cfg.R = R;
    cfg.lambdas = lambdas;
    cfg.estimators = {EstMethod::ETEL};
    cfg.families = {TestFamily::T, TestFamily::S};
    return run_experiment(cfg);
}

// --- criteria --------------------------------------------------------------

void criterion_1() {
    SummaryTable table = size_experiment(1.0, 100, 2000, {-1.0});
    const double t = table.size.at({TestFamily::T, -1.0, EstMethod::ETEL});
    const double s = table.size.at({TestFamily::S, -1.0, EstMethod::ETEL});
    const bool pass = std::abs(t - 0.058) <= 0.02 &&
                      std::abs(s - 0.052) <= 0.02;
    report(1, pass, "T size " + fmt(t) + " (target 0.058±0.02), S size " +
                        fmt(s) + " (target 0.052±0.02)");
}

void criterion_2() {
    const std::vector<double> lambdas = {-1.0, -0.5, 0.0, 2.0 / 3.0};
    const double targets[4] = {0.048, 0.036, 0.031, 0.025};
    SummaryTable table = size_experiment(1.3, 1000, 2000, lambdas);
    bool pass = true;
    std::string detail;
    for (int i = 0; i < 4; ++i) {
        const double t =
            table.size.at({TestFamily::T, lambdas[i], EstMethod::ETEL});
        const double s =
            table.size.at({TestFamily::S, lambdas[i], EstMethod::ETEL});
        if (std::abs(t - targets[i]) > 0.015) pass = false;
        if (std::abs(s - 0.017) > 0.01) pass = false;
        detail += "T" + fmt(t) + "/S" + fmt(s) + " ";
    }
    report(2, pass, detail + "(T targets 0.048/0.036/0.031/0.025 ±0.015, "
                             "S target 0.017±0.01)");
}

void criterion_3() {
    const std::vector<double> lambdas = {-1.0, -0.5, 0.0, 2.0 / 3.0};
    const double targets[4] = {0.176, 0.208, 0.258, 0.391};
    SummaryTable table = size_experiment(0.7, 1000, 2000, lambdas);
    bool pass = true;
    std::string detail;
    for (int i = 0; i < 4; ++i) {
        const double t =
            table.size.at({TestFamily::T, lambdas[i], EstMethod::ETEL});
        const double s =
            table.size.at({TestFamily::S, lambdas[i], EstMethod::ETEL});
        if (std::abs(t - targets[i]) > 0.03) pass = false;
        if (s < 0.417 - 0.03 || s > 0.419 + 0.03) pass = false;
        detail += "T" + fmt(t) + "/S" + fmt(s) + " ";
    }
    report(3, pass, detail + "(T targets 0.176/0.208/0.258/0.391 ±0.03, "
                             "S target 0.417-0.419 ±0.03)");
}

void criterion_4() {
    ExperimentConfig cfg;
    cfg.delta = 0.7;
    cfg.theta_true = 0.0;
    cfg.n = 10000;
    cfg.master_seed = 20240915;
    Sample s = draw_sample(cfg, 0);
    MomentModel m = mean_variance_normal_model(1.0);
    MomentMatrix mm = evaluate_moments(m, s, scalar(0.0));
    VectorXd t = solve_tau(mm);
    const double target = (1.0 - 0.7) / (2.0 * 0.7);
    const bool pass = std::abs(t[1] - target) <= 0.03;
    report(4, pass, "tilt component " + fmt(t[1]) + " (target " +
                        fmt(target) + "±0.03)");
}

void criterion_5() {
    MomentModel m = mean_variance_normal_model(1.0);
    PhiFunction kull = kullback_phi();
    double worst = 0.0;
    int checked = 0;
    for (int i = 0; i < 100; ++i) {
        ExperimentConfig cfg;
        cfg.n = 200;
        cfg.theta_true = 0.1;
        cfg.master_seed = 500 + i;
        Sample s = draw_sample(cfg, 0);
        try {
            EstimatorResult est = estimate_etel(m, s, scalar(0.0));
            const double g2 = likelihood_ratio(m, s, scalar(0.0), est);
            const double t = t_statistic(m, s, scalar(0.0), kull, est);
            worst = std::max(worst, std::abs(g2 - t));
            ++checked;
        } catch (const Error&) {
        }
    }
    const bool pass = checked >= 95 && worst <= 1e-10;
    std::ostringstream os;
    os << "max |G2 - T| = " << worst << " over " << checked << " samples";
    report(5, pass, os.str());
}

void criterion_6() {
    MomentModel m = mean_variance_normal_model(1.0);
    const double lambdas[4] = {-1.0, -0.5, 0.0, 2.0 / 3.0};
    const double deltas[3] = {0.7, 1.0, 1.3};
    double worst = 0.0;
    bool pass = true;
    auto et_probs = [&](const Sample& s, double theta) {
        return solve_et_multiplier(evaluate_moments(m, s, scalar(theta)))
            .weights;
    };
    for (int rep = 0; rep < 20; ++rep) {
        ExperimentConfig cfg;
        cfg.n = 300;
        cfg.delta = deltas[rep % 3];
        cfg.theta_true = -0.4 + 0.06 * rep;
        cfg.master_seed = 2000 + rep;
        Sample s = draw_sample(cfg, 0);
        const double theta = cfg.theta_true + 0.05;
        const double theta0 = cfg.theta_true - 0.05;
        PhiFunction f = power_divergence_phi(lambdas[rep % 4]);
        const double h = 1e-5 * std::max(1.0, std::abs(theta));
        const double dn = static_cast<double>(cfg.n);
        VectorXd u = VectorXd::Constant(cfg.n, 1.0 / dn);

        MatrixXd grad = weight_gradient(m, s, scalar(theta));
        VectorXd fd = (et_probs(s, theta + h) - et_probs(s, theta - h)) /
                      (2.0 * h);
        double err = (grad.col(0) - fd).lpNorm<Eigen::Infinity>() /
                     std::max(1e-10, fd.lpNorm<Eigen::Infinity>());
        worst = std::max(worst, err);

        VectorXd gu = dphi_u_gradient(m, s, scalar(theta), f);
        const double fdu = (d_phi(u, et_probs(s, theta + h), f) -
                            d_phi(u, et_probs(s, theta - h), f)) /
                           (2.0 * h);
        err = std::abs(gu[0] - fdu) / std::max(1e-10, std::abs(fdu));
        worst = std::max(worst, err);

        VectorXd p0 = et_probs(s, theta0);
        VectorXd gp = dphi_pp_gradient(m, s, scalar(theta), scalar(theta0), f);
        const double fdp = (d_phi(et_probs(s, theta + h), p0, f) -
                            d_phi(et_probs(s, theta - h), p0, f)) /
                           (2.0 * h);
        err = std::abs(gp[0] - fdp) / std::max(1e-10, std::abs(fdp));
        worst = std::max(worst, err);
    }
    pass = worst < 1e-4;
    std::ostringstream os;
    os << "max FD relative error " << worst;
    report(6, pass, os.str());
}

void criterion_7() {
    bool pass = true;
    std::string detail;

    auto rows1 = [](std::vector<double> gs) {
        MomentMatrix mm;
        mm.values.resize(static_cast<int>(gs.size()), 1);
        for (std::size_t i = 0; i < gs.size(); ++i) {
            mm.values(static_cast<int>(i), 0) = gs[i];
        }
        mm.theta = VectorXd::Zero(1);
        return mm;
    };
    auto bisect = [](auto f, double lo, double hi) {
        for (int k = 0; k < 200; ++k) {
            const double mid = 0.5 * (lo + hi);
            if (f(lo) * f(mid) <= 0.0) hi = mid; else lo = mid;
        }
        return 0.5 * (lo + hi);
    };

    // two-point example with exact values
    MomentMatrix two = rows1({-1.0, 2.0});
    TiltSolution et = solve_et_multiplier(two);
    TiltSolution el = solve_el_multiplier(two);
    if (std::abs(et.t[0] + std::log(2.0) / 3.0) > 1e-8) pass = false;
    if (std::abs(el.t[0] - 0.25) > 1e-8) pass = false;
    if (std::abs(et.weights[0] - 2.0 / 3.0) > 1e-8 ||
        std::abs(et.weights[1] - 1.0 / 3.0) > 1e-8) {
        pass = false;
    }
    if (std::abs(el.weights[0] - 2.0 / 3.0) > 1e-8 ||
        std::abs(el.weights[1] - 1.0 / 3.0) > 1e-8) {
        pass = false;
    }

    // small integer samples against bisection oracles
    const std::vector<std::vector<double>> cases = {
        {-1.0, 2.0}, {-3.0, 1.0, 1.0}, {-2.0, -1.0, 1.0, 3.0},
        {-4.0, -1.0, 0.0, 2.0, 2.0}};
    for (const auto& c : cases) {
        MomentMatrix mm = rows1(c);
        auto et_f = [&](double t) {
            double acc = 0.0;
            for (double g : c) acc += std::exp(t * g) * g;
            return acc;
        };
        const double et_oracle = bisect(et_f, -50.0, 50.0);
        if (std::abs(solve_et_multiplier(mm).t[0] - et_oracle) > 1e-8) {
            pass = false;
        }
        const double n = static_cast<double>(c.size());
        double lo = -1e3, hi = 1e3;
        for (double g : c) {
            if (g > 0.0) lo = std::max(lo, (1.0 / n - 1.0) / g);
            if (g < 0.0) hi = std::min(hi, (1.0 / n - 1.0) / g);
        }
        auto el_f = [&](double t) {
            double acc = 0.0;
            for (double g : c) acc += g / (1.0 + t * g);
            return acc;
        };
        const double el_oracle = bisect(el_f, lo + 1e-9, hi - 1e-9);
        if (std::abs(solve_el_multiplier(mm).t[0] - el_oracle) > 1e-8) {
            pass = false;
        }
    }
    report(7, pass, "multiplier solvers vs bisection oracles, tol 1e-8");
}

void criterion_8() {
    ExperimentConfig cfg;
    cfg.delta = 1.0;
    cfg.theta_true = 0.0;
    cfg.n = 1000;
    cfg.R = 2000;
    cfg.lambdas = {0.0};
    cfg.families = {TestFamily::T};
    cfg.estimators = {EstMethod::ETEL};
    SummaryTable table = run_experiment(cfg);
    std::vector<double> stats;
    SeriesKey key{TestFamily::T, 0.0, EstMethod::ETEL};
    for (const ReplicationRecord& rec : table.records) {
        const double v = rec.statistic.at(key);
        if (!std::isnan(v)) stats.push_back(v);
    }
    std::sort(stats.begin(), stats.end());
    double ks = 0.0;
    const double m = static_cast<double>(stats.size());
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const double f = chi2_cdf(stats[i], 1.0);
        ks = std::max(ks, std::abs((i + 1.0) / m - f));
        ks = std::max(ks, std::abs(f - i / m));
    }
    const bool pass = stats.size() >= 1900 && ks < 0.05;
    report(8, pass, "Kolmogorov distance to chi-square(1): " + fmt(ks));
}

void criterion_9() {
    SandwichBlocks b;
    b.v = MatrixXd::Identity(1, 1);
    const double at_zero = contiguous_power(b, scalar(0.0), 0.05);
    const bool pass_zero = std::abs(at_zero - 0.05) <= 1e-9;

    const double analytic = contiguous_power(b, scalar(2.0), 0.05);
    const double crit = chi2_quantile(0.95, 1.0);
    Rng rng(424242);
    const int draws = 1000000;
    int reject = 0;
    for (int i = 0; i < draws; ++i) {
        const double z = rng.normal() + 2.0;
        if (z * z > crit) ++reject;
    }
    const double simulated = static_cast<double>(reject) / draws;
    const bool pass_sim = std::abs(analytic - simulated) <= 0.002;
    report(9, pass_zero && pass_sim,
           "level " + fmt(at_zero) + ", analytic " + fmt(analytic) +
               " vs simulated " + fmt(simulated));
}

void criterion_10() {
    MomentModel model = mean_variance_normal_model(1.0);
    bool pass = true;
    std::string detail;
    for (double lambda : {-1.0, 0.0}) {
        for (double theta_star : {0.3, 0.5}) {
            ClosedFormPower cf =
                builtin_power_closed_form_t(lambda, theta_star, 100, 0.05);

            ExperimentConfig eval_cfg;
            eval_cfg.theta_true = theta_star;
            eval_cfg.n = 20000;
            eval_cfg.master_seed = 31415;
            Sample eval = draw_sample(eval_cfg, 0);
            FixedAltApprox plug = power_approx_t(
                model, eval, scalar(0.0), scalar(theta_star),
                power_divergence_phi(lambda), 100, 0.05);

            ExperimentConfig sim_cfg;
            sim_cfg.theta_true = theta_star;
            sim_cfg.theta0 = 0.0;
            sim_cfg.n = 100;
            sim_cfg.R = 2000;
            sim_cfg.lambdas = {lambda};
            sim_cfg.families = {TestFamily::T};
            sim_cfg.estimators = {EstMethod::ETEL};
            SummaryTable table = run_experiment(sim_cfg);
            const double rejection =
                table.size.at({TestFamily::T, lambda, EstMethod::ETEL});

            if (std::abs(cf.beta_star - plug.beta_star) > 0.05) pass = false;
            if (std::abs(rejection - cf.beta_star) > 0.08) pass = false;
            detail += fmt(cf.beta_star) + "/" + fmt(plug.beta_star) + "/" +
                      fmt(rejection) + " ";
        }
    }
    report(10, pass, "closed-form/plug-in/simulated: " + detail);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_11(const char* cli) {
    if (!cli) {
        report(11, false, "no CLI path supplied");
        return;
    }
    const std::string dir = "acceptance_work";
    std::system(("rm -rf " + dir + " && mkdir -p " + dir + "/a " + dir +
                 "/b")
                    .c_str());
    {
        std::ofstream cfgf(dir + "/config.json");
        cfgf << R"({"delta": 1.0, "theta_true": 0.0, "theta0": 0.0,
                    "n": 100, "R": 100, "lambdas": [-1.0, 0.0],
                    "estimators": ["etel"], "families": ["t", "s"],
                    "alpha": 0.05, "master_seed": 77})";
    }
    const std::string base = std::string(cli) + " simulate --config " + dir +
                             "/config.json --out-dir ";
    const int rc1 =
        std::system((base + dir + "/a --threads 1 >/dev/null 2>&1").c_str());
    const int rc2 =
        std::system((base + dir + "/b --threads 4 >/dev/null 2>&1").c_str());
    bool pass = rc1 != -1 && rc2 != -1 && WIFEXITED(rc1) &&
                WEXITSTATUS(rc1) == 0 && WIFEXITED(rc2) &&
                WEXITSTATUS(rc2) == 0;
    if (pass) {
        const std::string a = slurp(dir + "/a/sizes.csv");
        const std::string b = slurp(dir + "/b/sizes.csv");
        pass = !a.empty() && a == b;
    }
    report(11, pass, "byte-identical sizes.csv across thread counts");
}

} // namespace

int main(int argc, char** argv) {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11(argc > 1 ? argv[1] : nullptr);
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
