#include "xduct/mm_converter.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "xduct/errors.hpp"
#include "xduct/nlls.hpp"

namespace xduct::mm {

namespace {

using cd = std::complex<double>;
constexpr cd kI{0.0, 1.0};

Eigen::Matrix<cd, 4, 8> assemble_full(const DoubledSystem& sys, double omega_hz) {
    // (-i w I - M) v = sqrt(K) v_in; a_out = sqrt(k_ex) a - a_in.
    Eigen::Matrix4cd lhs = -kI * omega_hz * Eigen::Matrix4cd::Identity() - sys.m;
    Eigen::FullPivLU<Eigen::Matrix4cd> lu(lhs);
    if (!lu.isInvertible()) {
        throw singular_matrix_error("scattering_matrix: (-i w I - M) is singular");
    }
    const Eigen::Vector4d sq_ext = sys.k_ext.cwiseSqrt();
    const Eigen::Vector4d sq_in = sys.k_in.cwiseSqrt();

    Eigen::Matrix<cd, 4, 8> drive = Eigen::Matrix<cd, 4, 8>::Zero();
    drive.leftCols<4>() = sq_ext.asDiagonal();
    drive.rightCols<4>() = sq_in.asDiagonal();

    Eigen::Matrix<cd, 4, 8> s = sq_ext.cast<cd>().asDiagonal() * lu.solve(drive);
    s.leftCols<4>() -= Eigen::Matrix4cd::Identity();
    return s;
}

void require_stable(const MmParams& params, const char* who) {
    const StabilityResult st = stability(params);
    if (!st.stable) {
        std::ostringstream os;
        os << who << ": system unstable (max Re eigenvalue = " << st.max_real_part_hz << " Hz)";
        throw instability_error(os.str());
    }
}

double max_real_eigenvalue(const Eigen::Matrix4cd& m) {
    const Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(m, false);
    return es.eigenvalues().real().maxCoeff();
}

} // namespace

void MmParams::validate() const {
    if (kappa_a_in_hz < 0.0 || kappa_a_ex_hz < 0.0 || kappa_b_in_hz < 0.0 ||
        kappa_b_ex_hz < 0.0) {
        throw validation_error("mm params: coupling rates must be >= 0");
    }
    if (kappa_a() <= 0.0 || kappa_b() <= 0.0) {
        throw validation_error("mm params: total decay rates must be > 0");
    }
    if (g_hz < 0.0 || eps_hz < 0.0) {
        throw validation_error("mm params: g and eps must be >= 0 (phases carry the sign)");
    }
}

DoubledSystem build_doubled_system(const MmParams& p) {
    p.validate();
    const cd g = p.g_hz * std::exp(kI * p.phi_g_rad);
    const cd eps = p.eps_hz * std::exp(kI * p.phi_eps_rad);
    const cd da = kI * p.delta_a_hz - cd(p.kappa_a() / 2.0, 0.0);
    const cd db = kI * p.delta_b_hz - cd(p.kappa_b() / 2.0, 0.0);

    DoubledSystem sys;
    sys.m.setZero();
    // rows/cols ordered (a, b, a^dag, b^dag)
    sys.m(0, 0) = da;
    sys.m(0, 1) = -kI * g;
    sys.m(1, 0) = -kI * std::conj(g);
    sys.m(1, 1) = db;
    sys.m(1, 3) = -kI * eps;
    sys.m(2, 2) = std::conj(da);
    sys.m(2, 3) = std::conj(-kI * g);
    sys.m(3, 2) = std::conj(-kI * std::conj(g));
    sys.m(3, 3) = std::conj(db);
    sys.m(3, 1) = std::conj(-kI * eps);

    sys.k_ext << p.kappa_a_ex_hz, p.kappa_b_ex_hz, p.kappa_a_ex_hz, p.kappa_b_ex_hz;
    sys.k_in << p.kappa_a_in_hz, p.kappa_b_in_hz, p.kappa_a_in_hz, p.kappa_b_in_hz;
    return sys;
}

StabilityResult stability(const MmParams& params) {
    const DoubledSystem sys = build_doubled_system(params);
    const double max_re = max_real_eigenvalue(sys.m);
    return StabilityResult{max_re < 0.0, max_re};
}

Eigen::Matrix4cd scattering_matrix(const DoubledSystem& sys, double omega_hz) {
    if (max_real_eigenvalue(sys.m) >= 0.0) {
        throw instability_error("scattering_matrix: system at or beyond the parametric threshold");
    }
    return assemble_full(sys, omega_hz).leftCols<4>();
}

Eigen::Matrix<cd, 4, 8> full_scattering_matrix(const DoubledSystem& sys, double omega_hz) {
    if (max_real_eigenvalue(sys.m) >= 0.0) {
        throw instability_error("scattering_matrix: system at or beyond the parametric threshold");
    }
    return assemble_full(sys, omega_hz);
}

ConversionEfficiency conversion_efficiency(const MmParams& params) {
    if (params.eps_hz != 0.0) {
        throw validation_error("conversion_efficiency: requires eps = 0");
    }
    if (params.delta_a_hz != 0.0 || params.delta_b_hz != 0.0) {
        throw validation_error("conversion_efficiency: requires zero detunings");
    }
    const Eigen::Matrix4cd s = scattering_matrix(build_doubled_system(params), 0.0);
    const double c = params.cooperativity();
    return ConversionEfficiency{std::norm(s(1, 0)), 4.0 * c / ((1.0 + c) * (1.0 + c))};
}

std::pair<double, double> cooperativity_roots(double eta_internal) {
    if (eta_internal <= 0.0 || eta_internal > 1.0) {
        throw validation_error("cooperativity_roots: internal efficiency must be in (0, 1]");
    }
    // eta*C^2 + (2 eta - 4) C + eta = 0; roots are reciprocal.
    const double b = 2.0 * eta_internal - 4.0;
    const double disc = b * b - 4.0 * eta_internal * eta_internal;
    const double root = (-b + std::sqrt(std::max(disc, 0.0))) / (2.0 * eta_internal);
    return {1.0 / root, root};
}

PhaseSensitiveGain phase_sensitive_gain(const MmParams& params, double input_phase_rad) {
    require_stable(params, "phase_sensitive_gain");
    const Eigen::Matrix4cd s = scattering_matrix(build_doubled_system(params), 0.0);
    const cd s_bb = s(1, 1);
    const cd s_bbdag = s(1, 3);
    const double gain = std::norm(s_bb + std::exp(-2.0 * kI * input_phase_rad) * s_bbdag);
    const double hi = std::abs(s_bb) + std::abs(s_bbdag);
    const double lo = std::abs(std::abs(s_bb) - std::abs(s_bbdag));
    return PhaseSensitiveGain{gain, hi * hi, lo * lo};
}

Eigen::Vector2d output_occupancy(const DoubledSystem& sys, const NoiseInputs& noise,
                                 double omega_hz) {
    if (noise.a_ext < 0.0 || noise.b_ext < 0.0 || noise.a_loss < 0.0 || noise.b_loss < 0.0) {
        throw validation_error("output_occupancy: occupancies must be >= 0");
    }
    const Eigen::Matrix<cd, 4, 8> s = full_scattering_matrix(sys, omega_hz);
    Eigen::Matrix<double, 8, 1> v_in;
    v_in << noise.a_ext + 0.5, noise.b_ext + 0.5, noise.a_ext + 0.5, noise.b_ext + 0.5,
        noise.a_loss + 0.5, noise.b_loss + 0.5, noise.a_loss + 0.5, noise.b_loss + 0.5;
    const Eigen::Matrix4cd v_out = s * v_in.asDiagonal() * s.adjoint();
    return Eigen::Vector2d(v_out(0, 0).real() - 0.5, v_out(1, 1).real() - 0.5);
}

double snr_enhancement(double gain, double eta_chain, double n_add, double n_hemt) {
    if (gain < 1.0 || eta_chain < 0.0 || n_add < 0.0 || n_hemt < 0.0) {
        throw validation_error("snr_enhancement: gain must be >= 1 and noise terms >= 0");
    }
    return gain * (0.5 + n_hemt) / (eta_chain * gain * (0.5 + n_add) + n_hemt);
}

SnrFitResult fit_snr_curve(const std::vector<std::pair<double, double>>& points,
                           double n_hemt, double eta_min) {
    if (points.size() < 3) {
        throw validation_error("fit_snr_curve: need >= 3 points");
    }
    double g_lo = points.front().first;
    double g_hi = g_lo;
    for (const auto& [g, snr] : points) {
        if (g <= 0.0) {
            throw validation_error("fit_snr_curve: gains must be > 0");
        }
        g_lo = std::min(g_lo, g);
        g_hi = std::max(g_hi, g);
    }
    if (g_hi / g_lo < 10.0) {  // 10 dB of power gain
        throw validation_error("fit_snr_curve: degenerate span, need >= 10 dB of gain");
    }

    auto residual = [&](const Eigen::VectorXd& q) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(points.size()));
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            const auto& [g, snr] = points[static_cast<size_t>(i)];
            r(i) = g * (0.5 + n_hemt) / (q(0) * g + n_hemt) - snr;
        }
        return r;
    };
    // Init from the largest-gain point: p ~ ((0.5+n_hemt) - snr*n_hemt/G)/snr.
    const auto& top = *std::max_element(points.begin(), points.end(),
                                        [](const auto& x, const auto& y) { return x.first < y.first; });
    double p0 = ((0.5 + n_hemt) - top.second * n_hemt / top.first) / top.second;
    if (!(p0 > 0.0) || !std::isfinite(p0)) {
        p0 = 0.1;
    }
    fit::NllsOptions opt;
    opt.lower = Eigen::VectorXd::Constant(1, 1e-12);
    const fit::NllsResult res = fit::nlls(residual, Eigen::VectorXd::Constant(1, p0), opt);

    SnrFitResult out;
    out.p = res.params(0);
    out.p_stderr = res.stderrs(0);
    if (eta_min > 0.0) {
        out.n_add_bound = out.p / eta_min - 0.5;
        out.has_bound = true;
    }
    return out;
}

} // namespace xduct::mm
