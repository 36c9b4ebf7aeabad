// model.hpp
//
// Moment-condition models.  A model supplies an r-dimensional estimating
// function g(x, theta) with r >= p = dim(theta), together with its jacobian
// d g / d theta' (r x p).  Evaluating the moment function over a sample
// yields a MomentMatrix, the basic input of the tilting and testing layers.

#ifndef ELTEST_MODEL_HPP_INCLUDED
#define ELTEST_MODEL_HPP_INCLUDED

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eltest/errors.hpp"

namespace eltest {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Observations, one row per observation.
struct Sample {
    MatrixXd data; // n x d

    int n() const { return static_cast<int>(data.rows()); }
    int d() const { return static_cast<int>(data.cols()); }
};

// Moment function evaluated over a sample at a fixed parameter value.
struct MomentMatrix {
    MatrixXd values; // n x r, row i = g(x_i, theta)'
    VectorXd theta;  // parameter the rows were evaluated at

    int n() const { return static_cast<int>(values.rows()); }
    int r() const { return static_cast<int>(values.cols()); }
};

// A moment-condition model.  The callables receive one observation (as a
// row vector of length d) and the parameter vector.
struct MomentModel {
    int p = 0; // parameter dimension
    int r = 0; // number of moment conditions, r >= p

    std::function<VectorXd(const VectorXd& x, const VectorXd& theta)> g;
    std::function<MatrixXd(const VectorXd& x, const VectorXd& theta)> jacobian;

    // Optional box domain for the parameter, one (lo, hi) pair per component.
    std::optional<std::vector<std::pair<double, double>>> param_domain;
};

// Evaluate g over every observation.  Throws DimensionMismatch if theta has
// the wrong length or g returns the wrong dimension, NonFiniteModelOutput if
// any entry is NaN/Inf.
MomentMatrix evaluate_moments(const MomentModel& model, const Sample& sample,
                              const VectorXd& theta);

// Column means of the moment matrix: (1/n) sum_i g_i.
VectorXd mean_moments(const MomentMatrix& mm);

// (1/n) sum_i g_i g_i'  (r x r).
MatrixXd sample_s11(const MomentMatrix& mm);

// (1/n) sum_i d g(x_i, theta) / d theta'  (r x p).
MatrixXd sample_s12(const MomentModel& model, const Sample& sample,
                    const VectorXd& theta);

// Wrap a moment function with a central finite-difference jacobian,
// step h_j = 1e-6 * max(1, |theta_j|).
MomentModel with_fd_jacobian(
    int p, int r,
    std::function<VectorXd(const VectorXd&, const VectorXd&)> g,
    std::optional<std::vector<std::pair<double, double>>> domain = std::nullopt);

// Builtin mean/variance model for a normal family: scalar parameter theta,
// moment conditions
//   g1(x, theta) = x - theta
//   g2(x, theta) = x^2 - 2 theta^2 - delta
// with analytic jacobian (-1, -4 theta)'.  delta must be positive; the
// parameter domain is (-10, 10).
MomentModel mean_variance_normal_model(double delta);

} // namespace eltest

#endif
