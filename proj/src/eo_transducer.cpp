#include "xduct/eo_transducer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "xduct/constants.hpp"
#include "xduct/errors.hpp"

namespace xduct::eo {

namespace {

constexpr PhysicalConstants kConst{};

double angular(double f_hz) { return two_pi * f_hz; }

} // namespace

double pump_photon_number(const EoOperatingPoint& point) {
    if (point.pump_power_onchip_w < 0.0) {
        throw validation_error("pump_photon_number: pump power must be >= 0");
    }
    const ModeSpec& m = point.card.optical_minus;
    const double w = angular(m.frequency_hz);
    const double kex = angular(m.kappa_ex_hz);
    const double ktot = angular(m.total());
    return 4.0 * point.pump_power_onchip_w * kex / (kConst.hbar * w * ktot * ktot);
}

double cooperativity(const EoOperatingPoint& point) {
    const double np = pump_photon_number(point);
    const double g = angular(point.card.g_eo_hz);
    const double km = angular(point.card.microwave.total());
    const double kp = angular(point.card.optical_plus.total());
    return 4.0 * np * g * g / (km * kp);
}

double on_chip_efficiency(const EoOperatingPoint& point) {
    const double c = cooperativity(point);
    const double ext = (point.card.optical_plus.kappa_ex_hz / point.card.optical_plus.total()) *
                       (point.card.microwave.kappa_ex_hz / point.card.microwave.total());
    return ext * 4.0 * c / ((1.0 + c) * (1.0 + c));
}

double matched_pump_power(const DeviceCard& card) {
    EoOperatingPoint unit{card, 1.0, 0.0, {}};
    const double c1 = cooperativity(unit);
    if (c1 <= 0.0) {
        throw validation_error("matched_pump_power: cooperativity vanishes (g_eo = 0?)");
    }
    return 1.0 / c1;  // C is linear in power
}

Eigen::ArrayXcd transduction_spectrum(const EoOperatingPoint& point) {
    if (point.probe_detuning_hz.size() == 0) {
        throw validation_error("transduction_spectrum: empty probe grid");
    }
    const double km = angular(point.card.microwave.total());
    const double kp = angular(point.card.optical_plus.total());
    const double km_ex = angular(point.card.microwave.kappa_ex_hz);
    const double kp_ex = angular(point.card.optical_plus.kappa_ex_hz);
    const double g = angular(point.card.g_eo_hz);
    const double np = pump_photon_number(point);
    const double c = cooperativity(point);
    const double delta = angular(point.microwave_detuning_hz);

    // Normalization: the delta = 0 peak reproduces on_chip_efficiency.
    const double amp = std::sqrt(km_ex * kp_ex) * g * std::sqrt(np) / (1.0 + c);

    Eigen::ArrayXcd out(point.probe_detuning_hz.size());
    const std::complex<double> i1(0.0, 1.0);
    for (Eigen::Index k = 0; k < out.size(); ++k) {
        const double d = angular(point.probe_detuning_hz(k));
        const std::complex<double> chi_m = 1.0 / (km / 2.0 - i1 * d);
        const std::complex<double> chi_p = 1.0 / (kp / 2.0 - i1 * (d - delta));
        out(k) = amp * chi_m * chi_p;
    }
    return out;
}

double bandwidth_3db(const Eigen::ArrayXd& detuning_hz, const Eigen::ArrayXd& mag2) {
    const Eigen::Index n = mag2.size();
    if (n != detuning_hz.size() || n < 3) {
        throw validation_error("bandwidth_3db: need >= 3 matched samples");
    }
    Eigen::Index ipk = 0;
    mag2.maxCoeff(&ipk);
    if (ipk == 0 || ipk == n - 1) {
        throw numeric_error("bandwidth_3db: peak at grid edge, no half-power crossing");
    }
    const double half = mag2(ipk) / 2.0;

    auto cross = [&](Eigen::Index from, Eigen::Index step) -> double {
        for (Eigen::Index i = from; i + step >= 0 && i + step < n; i += step) {
            const double a = mag2(i);
            const double b = mag2(i + step);
            if ((a - half) * (b - half) <= 0.0 && a != b) {
                const double t = (half - a) / (b - a);
                return detuning_hz(i) + t * (detuning_hz(i + step) - detuning_hz(i));
            }
        }
        throw numeric_error("bandwidth_3db: half-power crossing outside the grid");
    };
    const double left = cross(ipk, -1);
    const double right = cross(ipk, +1);
    return std::abs(right - left);
}

void FieldProfiles::validate() const {
    if (nr < 2 || nz < 2) {
        throw validation_error("field profiles: grid must be at least 2x2");
    }
    if (dr_m <= 0.0 || dz_m <= 0.0) {
        throw validation_error("field profiles: grid spacings must be > 0");
    }
    const Eigen::Index npts = nr * nz;
    for (const auto* a : {&eps_ozz, &eps_mrr, &eps_mzz}) {
        if (a->size() != npts) {
            throw validation_error("field profiles: permittivity array size != nr*nz");
        }
        if ((*a < 0.0).any()) {
            throw validation_error("field profiles: permittivities must be >= 0");
        }
    }
    for (const auto* a : {&u_oz, &u_mr, &u_mz}) {
        if (a->size() != npts) {
            throw validation_error("field profiles: field array size != nr*nz");
        }
    }
    if (ring_radius_m <= 0.0) {
        throw validation_error("field profiles: ring radius must be > 0");
    }
    if (omega_minus_hz <= 0.0 || omega_plus_hz <= 0.0 || omega_m_hz <= 0.0) {
        throw validation_error("field profiles: mode frequencies must be > 0");
    }
}

double compute_geo(const FieldProfiles& p) {
    p.validate();

    // Trapezoid weights on the rectangular grid, row-major (r slow, z fast).
    Eigen::ArrayXd weight(p.nr * p.nz);
    for (Eigen::Index ir = 0; ir < p.nr; ++ir) {
        const double wr = (ir == 0 || ir == p.nr - 1) ? 0.5 : 1.0;
        for (Eigen::Index iz = 0; iz < p.nz; ++iz) {
            const double wz = (iz == 0 || iz == p.nz - 1) ? 0.5 : 1.0;
            weight(ir * p.nz + iz) = wr * wz * p.dr_m * p.dz_m;
        }
    }

    const double r33 = p.r33_pm_per_v * 1e-12;  // pm/V -> m/V
    const Eigen::ArrayXd oz2 = p.u_oz.abs2();
    const std::complex<double> numerator =
        (weight * p.eps_ozz.square() * r33 * oz2 * p.u_mz).sum();
    const double optical_norm = (weight * p.eps_ozz * oz2).sum();
    const double microwave_norm =
        (weight * (p.eps_mrr * p.u_mr.abs2() + p.eps_mzz * p.u_mz.abs2())).sum();
    if (optical_norm <= 0.0) {
        throw numeric_error("compute_geo: optical field norm vanishes");
    }
    if (microwave_norm <= 0.0) {
        throw numeric_error("compute_geo: microwave field norm vanishes");
    }

    const double wm = angular(p.omega_minus_hz);
    const double wp = angular(p.omega_plus_hz);
    const double wu = angular(p.omega_m_hz);
    const double prefactor =
        std::sqrt(kConst.hbar * wm * wp * wu / (8.0 * M_PI * kConst.eps0 * p.ring_radius_m));
    const double g_angular = prefactor * std::abs(numerator) / (optical_norm * std::sqrt(microwave_norm));
    return g_angular / two_pi;
}

FieldProfiles load_field_profiles(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw validation_error("field profiles: cannot open '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error(std::string("field profiles: parse error: ") + e.what());
    }

    auto real_array = [&](const std::string& key, Eigen::Index n) {
        if (!j.contains(key)) {
            throw validation_error("field profiles: missing array '" + key + "'");
        }
        const auto v = j.at(key).get<std::vector<double>>();
        if (static_cast<Eigen::Index>(v.size()) != n) {
            throw validation_error("field profiles: array '" + key + "' size != nr*nz");
        }
        return Eigen::Map<const Eigen::ArrayXd>(v.data(), n).eval();
    };
    auto complex_array = [&](const std::string& key, Eigen::Index n) {
        const Eigen::ArrayXd re = real_array(key + "_re", n);
        Eigen::ArrayXd im = Eigen::ArrayXd::Zero(n);
        if (j.contains(key + "_im")) {
            im = real_array(key + "_im", n);
        }
        Eigen::ArrayXcd out(n);
        out.real() = re;
        out.imag() = im;
        return out;
    };

    FieldProfiles p;
    for (const char* key : {"nr", "nz", "dr_m", "dz_m", "r33_pm_per_v", "ring_radius_m",
                            "omega_minus_hz", "omega_plus_hz", "omega_m_hz"}) {
        if (!j.contains(key)) {
            throw validation_error(std::string("field profiles: missing field '") + key + "'");
        }
    }
    p.nr = j.at("nr").get<Eigen::Index>();
    p.nz = j.at("nz").get<Eigen::Index>();
    if (p.nr < 2 || p.nz < 2) {
        throw validation_error("field profiles: grid must be at least 2x2");
    }
    p.dr_m = j.at("dr_m").get<double>();
    p.dz_m = j.at("dz_m").get<double>();
    p.r33_pm_per_v = j.at("r33_pm_per_v").get<double>();
    p.ring_radius_m = j.at("ring_radius_m").get<double>();
    p.omega_minus_hz = j.at("omega_minus_hz").get<double>();
    p.omega_plus_hz = j.at("omega_plus_hz").get<double>();
    p.omega_m_hz = j.at("omega_m_hz").get<double>();
    const Eigen::Index n = p.nr * p.nz;
    p.u_oz = complex_array("u_oz", n);
    p.u_mr = complex_array("u_mr", n);
    p.u_mz = complex_array("u_mz", n);
    p.eps_ozz = real_array("eps_ozz", n);
    p.eps_mrr = real_array("eps_mrr", n);
    p.eps_mzz = real_array("eps_mzz", n);
    p.validate();
    return p;
}

} // namespace xduct::eo
