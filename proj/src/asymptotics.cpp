// asymptotics.cpp -- sandwich blocks, gradients, and power approximations.

#include "eltest/asymptotics.hpp"

#include <cmath>
#include <vector>

#include "eltest/testing.hpp"

namespace eltest {

namespace {

MatrixXd robust_inverse(const MatrixXd& a, const char* what, bool rank_error) {
    Eigen::FullPivLU<MatrixXd> lu(a);
    if (!lu.isInvertible()) {
        if (rank_error) throw RankDeficient(what);
        throw SingularMoments(what);
    }
    return lu.inverse();
}

// Exponential tilt of the moments at theta together with the jacobians and
// the derived mean matrices shared by the gradient formulas.  All means are
// taken with the normalized factors w_i = exp(t'g_i) / mean_j exp(t'g_j),
// which leaves every expression below unchanged while avoiding large
// exponentials.
struct TiltParts {
    MomentMatrix mm;
    VectorXd t;       // ET multiplier at theta
    VectorXd w;       // normalized exponential factors, mean 1
    std::vector<MatrixXd> jac; // per-observation G_i (r x p)
    MatrixXd eg;      // (1/n) sum w_i G_i'          (p x r)
    MatrixXd khat;    // [(1/n) sum w_i G_i' t g_i' + eg] * Aw^{-1}  (p x r)
    MatrixXd aw;      // (1/n) sum w_i g_i g_i'      (r x r)
};

TiltParts tilt_parts(const MomentModel& model, const Sample& sample,
                     const VectorXd& theta) {
    TiltParts tp;
    tp.mm = evaluate_moments(model, sample, theta);
    TiltSolution sol = solve_et_multiplier(tp.mm);
    tp.t = sol.t;
    const int n = tp.mm.n();
    tp.w = static_cast<double>(n) * sol.weights; // exp(t'g_i) / mean exp

    tp.jac.reserve(n);
    MatrixXd num = MatrixXd::Zero(model.p, model.r);
    tp.eg = MatrixXd::Zero(model.p, model.r);
    tp.aw = MatrixXd::Zero(model.r, model.r);
    for (int i = 0; i < n; ++i) {
        tp.jac.push_back(
            model.jacobian(sample.data.row(i).transpose(), theta));
        const MatrixXd& gi = tp.jac.back();
        VectorXd g = tp.mm.values.row(i).transpose();
        tp.eg += tp.w[i] * gi.transpose();
        num += tp.w[i] * (gi.transpose() * tp.t) * g.transpose();
        tp.aw += tp.w[i] * g * g.transpose();
    }
    const double dn = static_cast<double>(n);
    tp.eg /= dn;
    num /= dn;
    tp.aw /= dn;
    tp.khat = (num + tp.eg) *
              robust_inverse(tp.aw, "tilted second-moment matrix is singular",
                             false);
    return tp;
}

} // namespace

SandwichBlocks sandwich_blocks(const MomentModel& model, const Sample& sample,
                               const VectorXd& theta) {
    MomentMatrix mm = evaluate_moments(model, sample, theta);
    SandwichBlocks b;
    b.s11 = sample_s11(mm);
    b.s12 = sample_s12(model, sample, theta);
    MatrixXd s11inv =
        robust_inverse(b.s11, "sandwich_blocks: S11 is singular", false);
    MatrixXd a = s11inv * b.s12; // r x p
    MatrixXd core = b.s12.transpose() * a;
    b.v = robust_inverse(core, "sandwich_blocks: moment jacobian is rank "
                               "deficient", true);
    b.r = s11inv - a * b.v * a.transpose();
    return b;
}

VectorXd solve_tau(const MomentMatrix& mm_theta0) {
    return solve_et_multiplier(mm_theta0).t;
}

FixedAltApprox power_approx_t(const MomentModel& model, const Sample& sample,
                              const VectorXd& theta0,
                              const VectorXd& theta_star,
                              const PhiFunction& f, int n_eval, double alpha) {
    (void)theta_star; // the sample itself is drawn under the alternative
    MomentMatrix mm0 = evaluate_moments(model, sample, theta0);
    TiltSolution sol = solve_et_multiplier(mm0);
    const int n = mm0.n();
    const double dn = static_cast<double>(n);
    VectorXd w = dn * sol.weights; // exp(tau'g_i) / mean exp, mean one

    FixedAltApprox out;
    out.tau = sol.t;
    VectorXd s = VectorXd::Zero(mm0.r());
    MatrixXd a = MatrixXd::Zero(mm0.r(), mm0.r());
    MatrixXd b = MatrixXd::Zero(mm0.r(), mm0.r());
    double mu = 0.0;
    for (int i = 0; i < n; ++i) {
        VectorXd g = mm0.values.row(i).transpose();
        const double arg = 1.0 / w[i]; // mean exp / exp(tau'g_i)
        s += w[i] * f.psi(arg) * g;
        mu += w[i] * f.phi(arg);
        a += w[i] * g * g.transpose();
        b += w[i] * w[i] * g * g.transpose();
    }
    s /= dn;
    mu /= dn;
    a /= dn;
    b /= dn;
    MatrixXd ainv =
        robust_inverse(a, "power_approx_t: tilted second-moment matrix is "
                          "singular", false);
    out.s = s;
    out.m = ainv * b * ainv;
    out.mu = mu;
    const double crit = chi2_quantile(1.0 - alpha, model.p);
    const double sms = out.s.dot(out.m * out.s);
    out.nu = std::sqrt(static_cast<double>(n_eval)) *
             (f.dd1 * crit / (2.0 * n_eval) - out.mu) / std::sqrt(sms);
    out.beta_star = 1.0 - normal_cdf(out.nu);
    return out;
}

FixedAltApprox power_approx_s(const MomentModel& model, const Sample& sample,
                              const VectorXd& theta0,
                              const VectorXd& theta_star,
                              const PhiFunction& f, int n_eval, double alpha) {
    MomentMatrix mm0 = evaluate_moments(model, sample, theta0);
    MomentMatrix mms = evaluate_moments(model, sample, theta_star);
    TiltSolution sol = solve_et_multiplier(mm0);
    SandwichBlocks blocks = sandwich_blocks(model, sample, theta_star);
    const int n = mm0.n();
    const double dn = static_cast<double>(n);
    const int r = mm0.r();

    // Raw exponential factors: the stacked covariance blocks are not
    // invariant to rescaling them, so the mean ebar enters explicitly.
    VectorXd e(n);
    for (int i = 0; i < n; ++i) {
        e[i] = std::exp(sol.t.dot(mm0.values.row(i).transpose()));
    }
    const double ebar = e.mean();

    FixedAltApprox out;
    out.tau = sol.t;
    VectorXd s1 = VectorXd::Zero(r); // E[phi'(mean exp / exp) g(X, theta*)]
    VectorXd s2 = VectorXd::Zero(r); // E[exp psi(mean exp / exp) g(X, theta0)]
    MatrixXd aw = MatrixXd::Zero(r, r);    // E[exp g0 g0']
    MatrixXd sig12 = MatrixXd::Zero(r, r); // E[exp g* g0']
    MatrixXd sig22 = MatrixXd::Zero(r, r); // E[exp^2 g0 g0']
    double mu = 0.0;
    for (int i = 0; i < n; ++i) {
        VectorXd g0 = mm0.values.row(i).transpose();
        VectorXd gs = mms.values.row(i).transpose();
        const double arg = ebar / e[i];
        s1 += f.dphi(arg) * gs;
        s2 += e[i] * f.psi(arg) * g0;
        mu += e[i] * f.phi(arg);
        aw += e[i] * g0 * g0.transpose();
        sig12 += e[i] * gs * g0.transpose();
        sig22 += e[i] * e[i] * g0 * g0.transpose();
    }
    s1 /= dn;
    s2 /= dn;
    mu /= dn * ebar;
    aw /= dn;
    sig12 /= dn;
    sig22 /= dn;

    MatrixXd awinv = robust_inverse(
        aw, "power_approx_s: tilted second-moment matrix is singular", false);

    out.s.resize(2 * r);
    out.s.head(r) = -blocks.r * s1;
    out.s.tail(r) = -(awinv * s2) / ebar;
    out.m = MatrixXd::Zero(2 * r, 2 * r);
    out.m.topLeftCorner(r, r) = blocks.s11;
    out.m.topRightCorner(r, r) = sig12;
    out.m.bottomLeftCorner(r, r) = sig12.transpose();
    out.m.bottomRightCorner(r, r) = sig22;
    out.mu = mu;
    const double crit = chi2_quantile(1.0 - alpha, model.p);
    const double sms = out.s.dot(out.m * out.s);
    out.nu = std::sqrt(static_cast<double>(n_eval)) *
             (f.dd1 * crit / (2.0 * n_eval) - out.mu) / std::sqrt(sms);
    out.beta_star = 1.0 - normal_cdf(out.nu);
    return out;
}

double contiguous_power(const SandwichBlocks& blocks, const VectorXd& delta,
                        double alpha) {
    const int p = static_cast<int>(delta.size());
    MatrixXd vinv =
        robust_inverse(blocks.v, "contiguous_power: V is singular", false);
    const double ncp = delta.dot(vinv * delta);
    const double crit = chi2_quantile(1.0 - alpha, p);
    return 1.0 - noncentral_chi2_cdf(crit, p, ncp);
}

VectorXd influence_rho(EstMethod method, const MomentModel& model,
                       const VectorXd& x_row, const VectorXd& theta,
                       const VectorXd& t, double mean_exp) {
    VectorXd g = model.g(x_row, theta);
    MatrixXd jac = model.jacobian(x_row, theta);
    VectorXd base = jac.transpose() * t; // (t' G_x)'
    const double tg = t.dot(g);
    switch (method) {
    case EstMethod::EL: {
        const double denom = 1.0 + tg;
        if (std::abs(denom) < 1e-12) {
            throw PoleEncountered("influence_rho: 1 + t'g(x) vanished");
        }
        return base / denom;
    }
    case EstMethod::ET:
        return base * std::exp(tg);
    case EstMethod::ETEL:
        return base * (std::exp(tg) - mean_exp);
    }
    return base;
}

double if2_s(const SandwichBlocks& blocks, const VectorXd& g) {
    MatrixXd s11inv =
        robust_inverse(blocks.s11, "if2_s: S11 is singular", false);
    VectorXd a = blocks.s12.transpose() * (s11inv * g); // S12' S11^{-1} g
    return a.dot(blocks.v * a);
}

double if2_s_via_if(const SandwichBlocks& blocks, const VectorXd& g) {
    MatrixXd s11inv =
        robust_inverse(blocks.s11, "if2_s_via_if: S11 is singular", false);
    VectorXd infl = blocks.v * (blocks.s12.transpose() * (s11inv * g));
    MatrixXd vinv =
        robust_inverse(blocks.v, "if2_s_via_if: V is singular", false);
    return infl.dot(vinv * infl);
}

MatrixXd weight_gradient(const MomentModel& model, const Sample& sample,
                         const VectorXd& theta) {
    TiltParts tp = tilt_parts(model, sample, theta);
    const int n = tp.mm.n();
    const double dn = static_cast<double>(n);
    MatrixXd out(n, model.p);
    VectorXd egt = tp.eg * tp.t; // (p)
    for (int i = 0; i < n; ++i) {
        VectorXd g = tp.mm.values.row(i).transpose();
        VectorXd row = tp.jac[i].transpose() * tp.t - egt - tp.khat * g;
        out.row(i) = (tp.w[i] / dn) * row.transpose(); // p_i * [...]
    }
    return out;
}

VectorXd dphi_u_gradient(const MomentModel& model, const Sample& sample,
                         const VectorXd& theta, const PhiFunction& f) {
    TiltParts tp = tilt_parts(model, sample, theta);
    const int n = tp.mm.n();
    const double dn = static_cast<double>(n);
    VectorXd term1 = VectorXd::Zero(model.p);
    double wpsi = 0.0;
    VectorXd gpsi = VectorXd::Zero(model.r);
    for (int i = 0; i < n; ++i) {
        const double psi = f.psi(1.0 / tp.w[i]);
        term1 += tp.w[i] * psi * (tp.jac[i].transpose() * tp.t);
        wpsi += tp.w[i] * psi;
        gpsi += tp.w[i] * psi * tp.mm.values.row(i).transpose();
    }
    term1 /= dn;
    wpsi /= dn;
    gpsi /= dn;
    return term1 - wpsi * (tp.eg * tp.t) - tp.khat * gpsi;
}

VectorXd dphi_pp_gradient(const MomentModel& model, const Sample& sample,
                          const VectorXd& theta, const VectorXd& theta0,
                          const PhiFunction& f) {
    TiltParts tp = tilt_parts(model, sample, theta);
    MomentMatrix mm0 = evaluate_moments(model, sample, theta0);
    TiltSolution sol0 = solve_et_multiplier(mm0);
    const int n = tp.mm.n();
    const double dn = static_cast<double>(n);
    VectorXd w0 = dn * sol0.weights;

    // chain rule through d p_i / d theta = p_i [G_i' t - EG t - Khat g_i]:
    //   d D / d theta = sum_i phi'(p_i / p0_i) d p_i / d theta.
    double dsum = 0.0;
    VectorXd gsum = VectorXd::Zero(model.r);
    VectorXd jsum = VectorXd::Zero(model.p);
    for (int i = 0; i < n; ++i) {
        const double ratio = tp.w[i] / w0[i]; // p_i(theta) / p_i(theta0)
        const double c = tp.w[i] * f.dphi(ratio);
        dsum += c;
        gsum += c * tp.mm.values.row(i).transpose();
        jsum += c * (tp.jac[i].transpose() * tp.t);
    }
    dsum /= dn;
    gsum /= dn;
    jsum /= dn;
    return jsum - dsum * (tp.eg * tp.t) - tp.khat * gsum;
}

JointPseudoValue misspec_fit(const MomentModel& model, const Sample& sample,
                             const VectorXd& init) {
    EstimatorResult est = estimate_etel(model, sample, init);
    MomentMatrix mm = evaluate_moments(model, sample, est.theta_hat);
    const int n = mm.n();
    const double dn = static_cast<double>(n);

    JointPseudoValue beta;
    beta.theta = est.theta_hat;
    beta.t = est.tilt.t;

    VectorXd e(n);
    for (int i = 0; i < n; ++i) {
        e[i] = std::exp(beta.t.dot(mm.values.row(i).transpose()));
    }
    beta.tau_scalar = e.mean();

    // kappa solves the averaged second block:
    //   tau gbar - (1/n) sum e_i g_i + [(1/n) sum e_i g_i g_i'] kappa = 0.
    MatrixXd a = MatrixXd::Zero(model.r, model.r);
    VectorXd eg = VectorXd::Zero(model.r);
    VectorXd gbar = mean_moments(mm);
    for (int i = 0; i < n; ++i) {
        VectorXd g = mm.values.row(i).transpose();
        a += e[i] * g * g.transpose();
        eg += e[i] * g;
    }
    a /= dn;
    eg /= dn;
    MatrixXd ainv = robust_inverse(
        a, "misspec_fit: singular tilted second-moment matrix", false);
    beta.kappa = ainv * (eg - beta.tau_scalar * gbar);
    return beta;
}

namespace {

// Stacked per-observation estimating function phi(x, beta), length p+2r+1.
VectorXd misspec_phi_obs(const MomentModel& model, const VectorXd& x,
                         const JointPseudoValue& beta) {
    VectorXd g = model.g(x, beta.theta);
    MatrixXd jac = model.jacobian(x, beta.theta);
    const double e = std::exp(beta.t.dot(g));
    const int p = model.p, r = model.r;
    VectorXd out(p + 2 * r + 1);
    out.head(p) = e * (jac.transpose() *
                       (beta.kappa + beta.t * g.dot(beta.kappa) - beta.t)) +
                  beta.tau_scalar * (jac.transpose() * beta.t);
    out.segment(p, r) =
        (beta.tau_scalar - e) * g + e * g * (g.dot(beta.kappa));
    out.segment(p + r, r) = e * g;
    out[p + 2 * r] = e - beta.tau_scalar;
    return out;
}

JointPseudoValue unpack_beta(const VectorXd& v, int p, int r) {
    JointPseudoValue beta;
    beta.theta = v.head(p);
    beta.t = v.segment(p, r);
    beta.kappa = v.segment(p + r, r);
    beta.tau_scalar = v[p + 2 * r];
    return beta;
}

VectorXd pack_beta(const JointPseudoValue& beta) {
    const int p = static_cast<int>(beta.theta.size());
    const int r = static_cast<int>(beta.t.size());
    VectorXd v(p + 2 * r + 1);
    v.head(p) = beta.theta;
    v.segment(p, r) = beta.t;
    v.segment(p + r, r) = beta.kappa;
    v[p + 2 * r] = beta.tau_scalar;
    return v;
}

} // namespace

VectorXd misspec_system_mean(const MomentModel& model, const Sample& sample,
                             const JointPseudoValue& beta) {
    const int n = sample.n();
    VectorXd acc = VectorXd::Zero(model.p + 2 * model.r + 1);
    for (int i = 0; i < n; ++i) {
        acc += misspec_phi_obs(model, sample.data.row(i).transpose(), beta);
    }
    return acc / static_cast<double>(n);
}

MisspecLaw misspec_sandwich(const MomentModel& model, const Sample& sample,
                            const JointPseudoValue& beta) {
    const int p = model.p, r = model.r;
    const int dim = p + 2 * r + 1;
    const int n = sample.n();

    MisspecLaw law;
    law.phi = MatrixXd::Zero(dim, dim);
    for (int i = 0; i < n; ++i) {
        VectorXd f =
            misspec_phi_obs(model, sample.data.row(i).transpose(), beta);
        law.phi += f * f.transpose();
    }
    law.phi /= static_cast<double>(n);

    VectorXd b0 = pack_beta(beta);
    law.gamma.resize(dim, dim);
    for (int j = 0; j < dim; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(b0[j]));
        VectorXd bp = b0, bm = b0;
        bp[j] += h;
        bm[j] -= h;
        law.gamma.col(j) =
            (misspec_system_mean(model, sample, unpack_beta(bp, p, r)) -
             misspec_system_mean(model, sample, unpack_beta(bm, p, r))) /
            (2.0 * h);
    }

    Eigen::FullPivLU<MatrixXd> lu(law.gamma);
    if (!lu.isInvertible()) {
        throw SingularGamma("misspec_sandwich: singular system jacobian");
    }
    MatrixXd ginv = lu.inverse();
    law.sigma_theta =
        (ginv * law.phi * ginv.transpose()).topLeftCorner(p, p);
    return law;
}

MisspecLaw misspec_power(TestFamily family, const MomentModel& model,
                         const Sample& sample, const VectorXd& theta0,
                         const JointPseudoValue& beta, const PhiFunction& f,
                         int n_eval, double alpha) {
    MisspecLaw law = misspec_sandwich(model, sample, beta);

    MomentMatrix mm0 = evaluate_moments(model, sample, theta0);
    MomentMatrix mms = evaluate_moments(model, sample, beta.theta);
    TiltSolution sol0 = solve_et_multiplier(mm0);
    TiltSolution sols = solve_et_multiplier(mms);
    const int n = mm0.n();
    const double dn = static_cast<double>(n);
    VectorXd w0 = dn * sol0.weights; // exp(t0'g0) / mean exp at theta0
    VectorXd ws = dn * sols.weights; // same at the pseudo-true value

    const PhiFunction kull = kullback_phi();
    double mu = 0.0;
    switch (family) {
    case TestFamily::T:
    case TestFamily::T_h: {
        law.r_or_q = dphi_u_gradient(model, sample, beta.theta, f);
        // mu_T: divergence limit at the pseudo-true value minus the limit at
        // the hypothesized value, each E^{-1}[e] E[e phi(E[e]/e)].
        double at_star = 0.0, at_null = 0.0;
        for (int i = 0; i < n; ++i) {
            at_star += ws[i] * f.phi(1.0 / ws[i]);
            at_null += w0[i] * f.phi(1.0 / w0[i]);
        }
        mu = (at_star - at_null) / dn;
        break;
    }
    case TestFamily::S:
    case TestFamily::S_h: {
        law.r_or_q = dphi_pp_gradient(model, sample, beta.theta, theta0, f);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            acc += w0[i] * f.phi(ws[i] / w0[i]);
        }
        mu = acc / dn;
        break;
    }
    case TestFamily::G2: {
        // The likelihood-ratio case is the Kullback instance of the T slope
        // and centering.
        law.r_or_q = dphi_u_gradient(model, sample, beta.theta, kull);
        double at_star = 0.0, at_null = 0.0;
        for (int i = 0; i < n; ++i) {
            at_star += ws[i] * kull.phi(1.0 / ws[i]);
            at_null += w0[i] * kull.phi(1.0 / w0[i]);
        }
        mu = (at_star - at_null) / dn;
        break;
    }
    }
    law.mu_star = mu;

    const double dd1 = family == TestFamily::G2 ? 1.0 : f.dd1;
    const double crit = chi2_quantile(1.0 - alpha, model.p);
    const double denom =
        std::sqrt(law.r_or_q.dot(law.sigma_theta * law.r_or_q));
    law.nu = std::sqrt(static_cast<double>(n_eval)) *
             (dd1 * crit / (2.0 * n_eval) - law.mu_star) / denom;
    law.beta_star = 1.0 - normal_cdf(law.nu);
    return law;
}

ClosedFormPower builtin_power_closed_form_t(double lambda, double theta_star,
                                            int n, double alpha) {
    const double t2 = theta_star * theta_star;
    ClosedFormPower out;

    if (std::abs(lambda) < 1e-8) {
        out.mu = t2 - 0.5 * std::log(1.0 + t2);
    } else if (std::abs(lambda + 1.0) < 1e-8) {
        out.mu = 0.5 * std::log(1.0 + t2);
    } else {
        const double c = lambda * (lambda + 1.0);
        const double den = 1.0 - lambda * t2;
        if (!(den > 0.0)) {
            throw DomainError("builtin_power_closed_form_t: formula requires "
                              "1 - lambda theta*^2 > 0");
        }
        out.mu = (std::exp(c * t2 / (2.0 * den)) /
                      std::sqrt(den * std::pow(t2 + 1.0, lambda)) -
                  1.0) / c;
    }

    const double den = 1.0 - lambda * t2;
    if (!(den > 0.0)) {
        throw DomainError("builtin_power_closed_form_t: formula requires "
                          "1 - lambda theta*^2 > 0");
    }
    const double c = lambda * (lambda + 1.0);
    const double q = 2.0 * t2 + 1.0;
    const double pref =
        t2 * std::exp(t2 * (c / den + 1.0 / q)) /
        (std::sqrt(std::pow(q, 5.0)) * std::pow(den, 3.0) *
         std::pow(t2 + 1.0, lambda - 1.0));
    const double m11 = 2.0 * t2 * t2 + 4.0 * t2 + 1.0;
    const double m12 = -(theta_star / q) * (t2 * t2 + 3.0 * t2 + 1.0);
    const double m22 = (6.0 * std::pow(t2, 4.0) + 16.0 * std::pow(t2, 3.0) +
                        19.0 * t2 * t2 + 8.0 * t2 + 1.0) /
                       (2.0 * q * q);
    const double v2 = (lambda + 2.0) * theta_star;
    out.sms = pref * (m11 + 2.0 * v2 * m12 + v2 * v2 * m22);

    const double crit = chi2_quantile(1.0 - alpha, 1);
    const double dn = static_cast<double>(n);
    out.nu = (crit / (2.0 * dn) - out.mu) / std::sqrt(out.sms / dn);
    out.beta_star = 1.0 - normal_cdf(out.nu);
    return out;
}

} // namespace eltest
