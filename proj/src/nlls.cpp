#include "xduct/nlls.hpp"

#include <cmath>
#include <limits>

#include "xduct/errors.hpp"

namespace xduct::fit {

namespace {

Eigen::VectorXd clamp_to_bounds(Eigen::VectorXd p, const NllsOptions& opt) {
    if (opt.lower) {
        p = p.cwiseMax(*opt.lower);
    }
    if (opt.upper) {
        p = p.cwiseMin(*opt.upper);
    }
    return p;
}

// Column scaling d = sqrt(diag(J^T J)); dead columns get unit scale so the
// damped system stays solvable.
Eigen::VectorXd column_scale(const Eigen::MatrixXd& jtj) {
    Eigen::VectorXd d = jtj.diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        d(i) = d(i) > 0.0 ? std::sqrt(d(i)) : 1.0;
    }
    return d;
}

} // namespace

Eigen::MatrixXd forward_jacobian(const ResidualFn& residual, const Eigen::VectorXd& p,
                                 double rel_step) {
    const Eigen::VectorXd r0 = residual(p);
    Eigen::MatrixXd jac(r0.size(), p.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        // Relative step; absolute fallback for parameters at exactly zero.
        const double h = p(j) != 0.0 ? rel_step * std::abs(p(j)) : rel_step;
        Eigen::VectorXd pj = p;
        pj(j) += h;
        jac.col(j) = (residual(pj) - r0) / h;
    }
    return jac;
}

NllsResult nlls(const ResidualFn& residual, const Eigen::VectorXd& init,
                const NllsOptions& opt) {
    Eigen::VectorXd p = clamp_to_bounds(init, opt);
    Eigen::VectorXd r = residual(p);
    if (!r.allFinite()) {
        throw validation_error("nlls: residual not finite at the initial point");
    }
    double cost = r.squaredNorm();
    double lambda = 1e-10;  // near-Gauss-Newton start; inflated on rejection
    int iter = 0;
    bool converged = false;

    Eigen::MatrixXd jac = forward_jacobian(residual, p, opt.jacobian_step);
    for (; iter < opt.max_iterations && !converged; ++iter) {
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * r;
        if (!jtj.allFinite()) {
            throw singular_matrix_error("nlls: non-finite Jacobian");
        }
        const Eigen::VectorXd d = column_scale(jtj);
        // scaled normal equations: S = D^-1 JtJ D^-1 is correlation-like
        const Eigen::MatrixXd s =
            d.cwiseInverse().asDiagonal() * jtj * d.cwiseInverse().asDiagonal();
        const Eigen::VectorXd g = -(jtr.array() / d.array()).matrix();

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd damped = s;
            damped.diagonal().array() += lambda;
            const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
            const Eigen::VectorXd step = (ldlt.solve(g).array() / d.array()).matrix();
            if (ldlt.info() != Eigen::Success || !step.allFinite()) {
                throw singular_matrix_error("nlls: singular normal equations");
            }
            const Eigen::VectorXd p_try = clamp_to_bounds(p + step, opt);
            const Eigen::VectorXd r_try = residual(p_try);
            const double cost_try = r_try.allFinite()
                                        ? r_try.squaredNorm()
                                        : std::numeric_limits<double>::infinity();
            // tolerate non-decrease at the floating-point noise floor
            if (cost_try <= cost * (1.0 + 1e-14)) {
                const double rel_step =
                    (p_try - p).norm() / std::max(p.norm(), 1e-300);
                const double rel_drop =
                    (cost - cost_try) / std::max(cost, 1e-300);
                p = p_try;
                r = r_try;
                cost = std::min(cost, cost_try);
                lambda = std::max(lambda * 0.1, 1e-12);
                accepted = true;
                if (rel_step < opt.step_tol || rel_drop < opt.residual_tol) {
                    converged = true;
                }
            } else {
                lambda *= 10.0;
                if (lambda > 1e14) {
                    // no damped direction decreases the cost: stationary
                    converged = true;
                    accepted = true;
                }
            }
        }
        if (!converged) {
            jac = forward_jacobian(residual, p, opt.jacobian_step);
        }
    }
    if (!converged) {
        throw non_convergence_error("nlls: iteration cap reached without convergence");
    }

    // Final polish: the cost is flat at the fp noise floor near the optimum,
    // so take up to two tiny near-Gauss-Newton steps on their own merits.
    for (int polish = 0; polish < 2; ++polish) {
        jac = forward_jacobian(residual, p, opt.jacobian_step);
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd d = column_scale(jtj);
        Eigen::MatrixXd s =
            d.cwiseInverse().asDiagonal() * jtj * d.cwiseInverse().asDiagonal();
        s.diagonal().array() += 1e-12;
        const Eigen::VectorXd g = -((jac.transpose() * r).array() / d.array()).matrix();
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
        if (ldlt.info() != Eigen::Success) {
            break;
        }
        const Eigen::VectorXd step = (ldlt.solve(g).array() / d.array()).matrix();
        const double rel_step = step.norm() / std::max(p.norm(), 1e-300);
        if (!step.allFinite() || rel_step > 1e-6) {
            break;
        }
        const Eigen::VectorXd p_try = clamp_to_bounds(p + step, opt);
        const Eigen::VectorXd r_try = residual(p_try);
        if (!r_try.allFinite() || r_try.squaredNorm() > cost * (1.0 + 1e-12)) {
            break;
        }
        p = p_try;
        r = r_try;
        cost = std::min(cost, r_try.squaredNorm());
    }

    NllsResult out;
    out.params = p;
    out.iterations = iter;
    out.residual_norm = std::sqrt(cost);

    jac = forward_jacobian(residual, p, opt.jacobian_step);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const auto dof = static_cast<double>(r.size() - p.size());
    out.chi2_reduced = dof > 0.0 ? cost / dof : 0.0;
    // covariance through the same column scaling: cov = D^-1 S^-1 D^-1
    const Eigen::VectorXd d = column_scale(jtj);
    const Eigen::MatrixXd s =
        d.cwiseInverse().asDiagonal() * jtj * d.cwiseInverse().asDiagonal();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
    if (lu.isInvertible()) {
        out.covariance = d.cwiseInverse().asDiagonal() * lu.inverse() *
                         d.cwiseInverse().asDiagonal() * (dof > 0.0 ? out.chi2_reduced : 1.0);
        out.stderrs = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    } else {
        // Unconstrained parameter directions: the honest standard error is
        // infinite, not a number.
        out.covariance = Eigen::MatrixXd::Constant(p.size(), p.size(),
                                                   std::numeric_limits<double>::infinity());
        out.stderrs = Eigen::VectorXd::Constant(p.size(),
                                                std::numeric_limits<double>::infinity());
    }
    return out;
}

} // namespace xduct::fit
