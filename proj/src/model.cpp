// model.cpp -- moment-condition model evaluation helpers.

#include "eltest/model.hpp"

#include <cmath>
#include <string>

namespace eltest {

MomentMatrix evaluate_moments(const MomentModel& model, const Sample& sample,
                              const VectorXd& theta) {
    if (theta.size() != model.p) {
        throw DimensionMismatch("evaluate_moments: theta has length " +
                                std::to_string(theta.size()) + ", expected " +
                                std::to_string(model.p));
    }
    const int n = sample.n();
    MomentMatrix mm;
    mm.values.resize(n, model.r);
    mm.theta = theta;
    for (int i = 0; i < n; ++i) {
        VectorXd gi = model.g(sample.data.row(i).transpose(), theta);
        if (gi.size() != model.r) {
            throw DimensionMismatch(
                "evaluate_moments: g returned length " +
                std::to_string(gi.size()) + ", expected " +
                std::to_string(model.r));
        }
        if (!gi.allFinite()) {
            throw NonFiniteModelOutput(
                "evaluate_moments: non-finite moment value at observation " +
                std::to_string(i));
        }
        mm.values.row(i) = gi.transpose();
    }
    return mm;
}

VectorXd mean_moments(const MomentMatrix& mm) {
    return mm.values.colwise().mean().transpose();
}

MatrixXd sample_s11(const MomentMatrix& mm) {
    const double n = static_cast<double>(mm.n());
    return mm.values.transpose() * mm.values / n;
}

MatrixXd sample_s12(const MomentModel& model, const Sample& sample,
                    const VectorXd& theta) {
    if (theta.size() != model.p) {
        throw DimensionMismatch("sample_s12: theta has wrong length");
    }
    const int n = sample.n();
    MatrixXd acc = MatrixXd::Zero(model.r, model.p);
    for (int i = 0; i < n; ++i) {
        MatrixXd ji = model.jacobian(sample.data.row(i).transpose(), theta);
        if (ji.rows() != model.r || ji.cols() != model.p) {
            throw DimensionMismatch("sample_s12: jacobian has wrong shape");
        }
        if (!ji.allFinite()) {
            throw NonFiniteModelOutput(
                "sample_s12: non-finite jacobian at observation " +
                std::to_string(i));
        }
        acc += ji;
    }
    return acc / static_cast<double>(n);
}

MomentModel with_fd_jacobian(
    int p, int r,
    std::function<VectorXd(const VectorXd&, const VectorXd&)> g,
    std::optional<std::vector<std::pair<double, double>>> domain) {
    MomentModel model;
    model.p = p;
    model.r = r;
    model.g = g;
    model.param_domain = std::move(domain);
    model.jacobian = [g, p, r](const VectorXd& x,
                               const VectorXd& theta) -> MatrixXd {
        MatrixXd jac(r, p);
        for (int j = 0; j < p; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(theta[j]));
            VectorXd tp = theta, tm = theta;
            tp[j] += h;
            tm[j] -= h;
            jac.col(j) = (g(x, tp) - g(x, tm)) / (2.0 * h);
        }
        return jac;
    };
    return model;
}

MomentModel mean_variance_normal_model(double delta) {
    if (!(delta > 0.0)) {
        throw InvalidDelta("mean_variance_normal_model: delta must be > 0");
    }
    MomentModel model;
    model.p = 1;
    model.r = 2;
    model.param_domain = std::vector<std::pair<double, double>>{{-10.0, 10.0}};
    model.g = [delta](const VectorXd& x, const VectorXd& theta) -> VectorXd {
        VectorXd out(2);
        const double t = theta[0];
        out[0] = x[0] - t;
        out[1] = x[0] * x[0] - 2.0 * t * t - delta;
        return out;
    };
    model.jacobian = [](const VectorXd& /*x*/,
                        const VectorXd& theta) -> MatrixXd {
        MatrixXd jac(2, 1);
        jac(0, 0) = -1.0;
        jac(1, 0) = -4.0 * theta[0];
        return jac;
    };
    return model;
}

} // namespace eltest
