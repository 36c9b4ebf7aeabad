// estimators.cpp -- outer parameter search over the profiled criteria.

#include "eltest/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace eltest {

namespace {

const double kInf = std::numeric_limits<double>::infinity();
constexpr double kOuterTol = 1e-8; // tolerance on |delta theta|_inf
constexpr int kOuterMaxIter = 200;

double criterion_from_weights(EstMethod method, const VectorXd& w) {
    const double n = static_cast<double>(w.size());
    switch (method) {
    case EstMethod::EL:
    case EstMethod::ETEL:
        // -(1/n) sum log(n p_i), the uniform-to-p Kullback divergence.
        return -(n * w.array()).log().sum() / n;
    case EstMethod::ET:
        // sum p_i log(n p_i), the p-to-uniform Kullback divergence.
        return (w.array() * (n * w.array()).log()).sum();
    }
    return kInf;
}

TiltSolution inner_solve(EstMethod method, const MomentMatrix& mm) {
    return method == EstMethod::EL ? solve_el_multiplier(mm)
                                   : solve_et_multiplier(mm);
}

// Criterion evaluation that maps any numerical failure to +inf.
double safe_eval(EstMethod method, const MomentModel& model,
                 const Sample& sample, const VectorXd& theta, int* failures) {
    try {
        return profile_criterion(method, model, sample, theta);
    } catch (const Error&) {
        if (failures) ++*failures;
        return kInf;
    }
}

std::vector<std::pair<double, double>> domain_box(const MomentModel& model,
                                                 const VectorXd& init) {
    if (model.param_domain) return *model.param_domain;
    std::vector<std::pair<double, double>> box;
    for (int j = 0; j < model.p; ++j) {
        box.emplace_back(init[j] - 10.0, init[j] + 10.0);
    }
    return box;
}

// Scalar search: coarse scan, then golden-section refinement of the best
// scan bracket.
void search_1d(EstMethod method, const MomentModel& model,
               const Sample& sample, const VectorXd& init,
               EstimatorResult* res) {
    const auto box = domain_box(model, init);
    const double lo = box[0].first, hi = box[0].second;

    auto eval = [&](double x) {
        VectorXd th(1);
        th[0] = x;
        return safe_eval(method, model, sample, th, &res->failures);
    };

    auto scan = [&](double a, double b, int k, double* best_x,
                    double* best_f, double* step) {
        *best_f = kInf;
        *step = (b - a) / (k - 1);
        for (int i = 0; i < k; ++i) {
            const double x = a + i * *step;
            const double f = eval(x);
            if (f < *best_f) {
                *best_f = f;
                *best_x = x;
            }
        }
    };

    double a = std::max(lo, init[0] - 2.0);
    double b = std::min(hi, init[0] + 2.0);
    double best_x = init[0], best_f = kInf, step = 0.0;
    scan(a, b, 33, &best_x, &best_f, &step);
    if (!std::isfinite(best_f) || best_x <= a + 0.5 * step ||
        best_x >= b - 0.5 * step) {
        // Nothing feasible nearby, or the minimum sits on the window edge:
        // rescan the whole domain.
        scan(lo, hi, 81, &best_x, &best_f, &step);
        if (!std::isfinite(best_f)) {
            throw AllStartsFailed(
                "estimate: no feasible parameter value found");
        }
    }

    // Golden-section on [best_x - step, best_x + step] clipped to the domain.
    double ga = std::max(lo, best_x - step);
    double gb = std::min(hi, best_x + step);
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = gb - invphi * (gb - ga);
    double x2 = ga + invphi * (gb - ga);
    double f1 = eval(x1), f2 = eval(x2);
    int iter = 0;
    while (gb - ga > kOuterTol && iter < kOuterMaxIter) {
        if (f1 <= f2) {
            gb = x2;
            x2 = x1;
            f2 = f1;
            x1 = gb - invphi * (gb - ga);
            f1 = eval(x1);
        } else {
            ga = x1;
            x1 = x2;
            f1 = f2;
            x2 = ga + invphi * (gb - ga);
            f2 = eval(x2);
        }
        ++iter;
    }
    res->outer_iterations = iter;
    if (gb - ga > kOuterTol) {
        throw OuterNoConvergence("estimate: scalar search did not reach "
                                 "tolerance within the iteration budget");
    }
    res->converged = true;
    res->theta_hat.resize(1);
    res->theta_hat[0] = 0.5 * (ga + gb);
}

// Nelder-Mead simplex for p > 1, with one restart from the best vertex.
void search_nm(EstMethod method, const MomentModel& model,
               const Sample& sample, const VectorXd& init,
               EstimatorResult* res) {
    const int p = model.p;
    const auto box = domain_box(model, init);

    auto eval = [&](const VectorXd& th) {
        for (int j = 0; j < p; ++j) {
            if (th[j] < box[j].first || th[j] > box[j].second) return kInf;
        }
        return safe_eval(method, model, sample, th, &res->failures);
    };

    VectorXd start = init;
    double scale = 0.1;
    int total_iter = 0;
    VectorXd best = init;
    double best_f = kInf;

    for (int round = 0; round < 2; ++round) {
        std::vector<VectorXd> v(p + 1, start);
        std::vector<double> f(p + 1);
        for (int j = 0; j < p; ++j) {
            v[j + 1][j] += scale * std::max(1.0, std::abs(start[j]));
        }
        for (int k = 0; k <= p; ++k) f[k] = eval(v[k]);

        auto order = [&]() {
            for (int i = 0; i <= p; ++i) {
                for (int j = i + 1; j <= p; ++j) {
                    if (f[j] < f[i]) {
                        std::swap(f[i], f[j]);
                        std::swap(v[i], v[j]);
                    }
                }
            }
        };

        double diameter = kInf;
        while (total_iter < kOuterMaxIter) {
            order();
            diameter = 0.0;
            for (int k = 1; k <= p; ++k) {
                diameter = std::max(
                    diameter, (v[k] - v[0]).lpNorm<Eigen::Infinity>());
            }
            if (diameter <= kOuterTol) break;
            ++total_iter;

            VectorXd centroid = VectorXd::Zero(p);
            for (int k = 0; k < p; ++k) centroid += v[k];
            centroid /= static_cast<double>(p);

            VectorXd xr = centroid + (centroid - v[p]);
            double fr = eval(xr);
            if (fr < f[0]) {
                VectorXd xe = centroid + 2.0 * (centroid - v[p]);
                double fe = eval(xe);
                if (fe < fr) {
                    v[p] = xe;
                    f[p] = fe;
                } else {
                    v[p] = xr;
                    f[p] = fr;
                }
            } else if (fr < f[p - 1]) {
                v[p] = xr;
                f[p] = fr;
            } else {
                VectorXd xc = centroid + 0.5 * (v[p] - centroid);
                double fc = eval(xc);
                if (fc < f[p]) {
                    v[p] = xc;
                    f[p] = fc;
                } else {
                    for (int k = 1; k <= p; ++k) {
                        v[k] = v[0] + 0.5 * (v[k] - v[0]);
                        f[k] = eval(v[k]);
                    }
                }
            }
        }
        order();
        if (f[0] < best_f) {
            best_f = f[0];
            best = v[0];
        }
        start = best;
        scale = 0.01; // restart with a tighter simplex around the best point
        if (diameter <= kOuterTol && round == 1) break;
    }

    res->outer_iterations = total_iter;
    if (!std::isfinite(best_f)) {
        throw AllStartsFailed("estimate: no feasible parameter value found");
    }
    if (total_iter >= kOuterMaxIter) {
        throw OuterNoConvergence("estimate: simplex search did not reach "
                                 "tolerance within the iteration budget");
    }
    res->converged = true;
    res->theta_hat = best;
}

} // namespace

double profile_criterion(EstMethod method, const MomentModel& model,
                         const Sample& sample, const VectorXd& theta) {
    MomentMatrix mm = evaluate_moments(model, sample, theta);
    TiltSolution tilt = inner_solve(method, mm);
    return criterion_from_weights(method, tilt.weights);
}

EstimatorResult estimate(EstMethod method, const MomentModel& model,
                         const Sample& sample, const VectorXd& init) {
    if (init.size() != model.p) {
        throw DimensionMismatch("estimate: init has wrong length");
    }
    EstimatorResult res;
    res.method = method;
    if (model.p == 1) {
        search_1d(method, model, sample, init, &res);
    } else {
        search_nm(method, model, sample, init, &res);
    }
    MomentMatrix mm = evaluate_moments(model, sample, res.theta_hat);
    res.tilt = inner_solve(method, mm);
    res.objective = criterion_from_weights(method, res.tilt.weights);
    return res;
}

EstimatorResult estimate_el(const MomentModel& model, const Sample& sample,
                            const VectorXd& init) {
    return estimate(EstMethod::EL, model, sample, init);
}

EstimatorResult estimate_et(const MomentModel& model, const Sample& sample,
                            const VectorXd& init) {
    return estimate(EstMethod::ET, model, sample, init);
}

EstimatorResult estimate_etel(const MomentModel& model, const Sample& sample,
                              const VectorXd& init) {
    return estimate(EstMethod::ETEL, model, sample, init);
}

std::string to_string(EstMethod m) {
    switch (m) {
    case EstMethod::EL: return "EL";
    case EstMethod::ET: return "ET";
    case EstMethod::ETEL: return "ETEL";
    }
    return "?";
}

EstMethod est_method_from_string(const std::string& name) {
    if (name == "EL" || name == "el") return EstMethod::EL;
    if (name == "ET" || name == "et") return EstMethod::ET;
    if (name == "ETEL" || name == "etel") return EstMethod::ETEL;
    throw ConfigError("unknown estimator name: " + name);
}

} // namespace eltest
