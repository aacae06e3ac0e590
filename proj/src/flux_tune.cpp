#include "xduct/flux_tune.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "xduct/errors.hpp"

namespace xduct::flux {

void FluxTuneModel::validate() const {
    if (f0_hz <= 0.0) {
        throw validation_error("flux model: f0 must be > 0");
    }
    if (k_per_mt2 < 0.0) {
        throw validation_error("flux model: k must be >= 0 (tuning is downward only)");
    }
    if (b_max_mt <= 0.0) {
        throw validation_error("flux model: b_max must be > 0");
    }
    if (max_fractional_shift() >= 1.0) {
        throw validation_error("flux model: k*b_max^2 must be < 1 (resonance stays positive)");
    }
}

double kinetic_inductance(const KineticInductanceLaw& law, double current_a) {
    const double x = current_a / law.i_star_a;
    return law.l_k0_h * (1.0 + x * x);
}

double frequency_at_bias(const FluxTuneModel& model, double b_mt) {
    model.validate();
    if (b_mt < 0.0 || b_mt > model.b_max_mt) {
        std::ostringstream os;
        os << "frequency_at_bias: b = " << b_mt << " mT outside [0, " << model.b_max_mt << "]";
        throw validation_error(os.str());
    }
    return model.f0_hz * (1.0 - model.k_per_mt2 * b_mt * b_mt);
}

std::optional<double> solve_bias(const FluxTuneModel& model, double f_target_hz) {
    model.validate();
    if (f_target_hz > model.f0_hz || f_target_hz < model.floor_hz()) {
        return std::nullopt;
    }
    if (f_target_hz == model.f0_hz) {
        return 0.0;
    }
    return std::sqrt((model.f0_hz - f_target_hz) / (model.k_per_mt2 * model.f0_hz));
}

FluxFitResult fit_flux_quadratic(const std::vector<std::pair<double, double>>& points,
                                 double b_max_mt) {
    const auto n = static_cast<Eigen::Index>(points.size());
    if (n < 2) {
        throw validation_error("fit_flux_quadratic: need at least 2 points");
    }
    std::set<double> distinct;
    for (const auto& [b, f] : points) {
        distinct.insert(b);
    }
    if (distinct.size() < 2) {
        throw validation_error("fit_flux_quadratic: degenerate design, need >= 2 distinct b values");
    }

    // f = p0 - p1*b^2 with p0 = f0, p1 = f0*k: ordinary linear least squares.
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = -points[i].first * points[i].first;
        y(i) = points[i].second;
    }
    const Eigen::Vector2d p = design.colPivHouseholderQr().solve(y);
    const double f0 = p(0);
    if (f0 <= 0.0) {
        throw validation_error("fit_flux_quadratic: fitted f0 <= 0");
    }
    const double k = p(1) / f0;

    // Residual covariance sigma^2 (X^T X)^-1, then the delta method for
    // k = p1/p0. No degrees of freedom -> NaN standard errors.
    const double rss = (y - design * p).squaredNorm();
    double f0_err = std::numeric_limits<double>::quiet_NaN();
    double k_err = std::numeric_limits<double>::quiet_NaN();
    if (n > 2) {
        const double sigma2 = rss / static_cast<double>(n - 2);
        const Eigen::Matrix2d cov = sigma2 * (design.transpose() * design).inverse();
        const double dk_dp0 = -p(1) / (f0 * f0);
        const double dk_dp1 = 1.0 / f0;
        const double var_k = dk_dp0 * dk_dp0 * cov(0, 0) + dk_dp1 * dk_dp1 * cov(1, 1) +
                             2.0 * dk_dp0 * dk_dp1 * cov(0, 1);
        f0_err = std::sqrt(std::max(cov(0, 0), 0.0));
        k_err = std::sqrt(std::max(var_k, 0.0));
    }

    double b_hi = b_max_mt;
    if (b_hi <= 0.0) {
        for (const auto& [b, f] : points) {
            b_hi = std::max(b_hi, std::abs(b));
        }
    }
    return FluxFitResult{FluxTuneModel{f0, k, b_hi}, f0_err, k_err};
}

FluxTuneModel load_flux_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw validation_error("flux model: cannot open '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error(std::string("flux model: parse error: ") + e.what());
    }
    for (const char* key : {"f0_hz", "k_per_mT2", "b_max_mT"}) {
        if (!j.contains(key)) {
            throw validation_error(std::string("flux model: missing field '") + key + "'");
        }
    }
    FluxTuneModel m{j.at("f0_hz").get<double>(), j.at("k_per_mT2").get<double>(),
                    j.at("b_max_mT").get<double>()};
    m.validate();
    return m;
}

std::string serialize_flux_fit(const FluxFitResult& fit) {
    nlohmann::json j{{"f0_hz", fit.model.f0_hz},
                     {"k_per_mT2", fit.model.k_per_mt2},
                     {"b_max_mT", fit.model.b_max_mt},
                     {"f0_stderr", fit.f0_stderr},
                     {"k_stderr", fit.k_stderr}};
    return j.dump(2) + "\n";
}

} // namespace xduct::flux
