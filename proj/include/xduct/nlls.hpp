#ifndef XDUCT_NLLS_HPP
#define XDUCT_NLLS_HPP

#include <functional>
#include <optional>

#include <Eigen/Dense>

namespace xduct::fit {

// Residual vector r(p); the solver minimizes |r(p)|^2.
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct NllsOptions {
    int max_iterations = 200;
    double step_tol = 1e-10;      // relative parameter step
    double residual_tol = 1e-12;  // relative change of |r|^2
    double jacobian_step = 1e-6;  // relative forward-difference step
    std::optional<Eigen::VectorXd> lower;
    std::optional<Eigen::VectorXd> upper;
};

struct NllsResult {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;   // (J^T J)^-1 scaled by reduced chi-square
    Eigen::VectorXd stderrs;
    double residual_norm = 0.0;   // |r| at the optimum
    double chi2_reduced = 0.0;
    int iterations = 0;
};

// Damped Gauss-Newton with a Levenberg-Marquardt lambda schedule and
// forward-difference Jacobians. Throws non_convergence_error at the
// iteration cap and singular_matrix_error on a rank-deficient Jacobian.
NllsResult nlls(const ResidualFn& residual, const Eigen::VectorXd& init,
                const NllsOptions& options = {});

// Forward-difference Jacobian used by the solver, exposed for testing
// against central differences.
Eigen::MatrixXd forward_jacobian(const ResidualFn& residual, const Eigen::VectorXd& p,
                                 double rel_step = 1e-6);

} // namespace xduct::fit

#endif // XDUCT_NLLS_HPP
