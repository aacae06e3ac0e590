#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "xduct/constants.hpp"
#include "xduct/device_card.hpp"
#include "xduct/eo_transducer.hpp"
#include "xduct/errors.hpp"

using namespace xduct;
using namespace xduct::eo;

namespace {

DeviceCard table_s1() {
    return load_device_card(std::string(XDUCT_DATA_DIR) + "/tableS1.json");
}

EoOperatingPoint at_power(double watts) { return EoOperatingPoint{table_s1(), watts, 0.0, {}}; }

// Direct scalar evaluation of the pump-photon / cooperativity / efficiency
// chain from the measured values, independent of the implementation.
struct ChainOracle {
    double n_p;
    double c;
    double eta;
};

ChainOracle oracle(double watts) {
    const PhysicalConstants pc;
    const double w_minus = two_pi * 194.1012e12;
    const double k_minus_ex = two_pi * 135.0e6;
    const double k_minus = two_pi * 260.0e6;
    const double n_p = 4.0 * watts * k_minus_ex / (pc.hbar * w_minus * k_minus * k_minus);
    const double g = two_pi * 272.0;
    const double k_m = two_pi * 63.7e6;
    const double k_p = two_pi * 274.2e6;
    const double c = 4.0 * n_p * g * g / (k_m * k_p);
    const double eta = (108.5 / 274.2) * (31.8 / 63.7) * 4.0 * c / ((1.0 + c) * (1.0 + c));
    return {n_p, c, eta};
}

} // namespace

TEST_CASE("pump photon number at 10 mW matches the scalar oracle") {
    const double n_p = pump_photon_number(at_power(10e-3));
    CHECK(n_p == doctest::Approx(oracle(10e-3).n_p).epsilon(1e-12));
    CHECK(n_p == doctest::Approx(9.9e7).epsilon(0.01));
}

TEST_CASE("pump photon number is linear in power") {
    CHECK(pump_photon_number(at_power(0.0)) == 0.0);
    const double one = pump_photon_number(at_power(1e-3));
    CHECK(pump_photon_number(at_power(2e-3)) == doctest::Approx(2.0 * one).epsilon(1e-15));
}

TEST_CASE("cooperativity at 10 dBm is ~1.7e-3 and scales quadratically in g") {
    CHECK(cooperativity(at_power(10e-3)) == doctest::Approx(oracle(10e-3).c).epsilon(1e-12));
    CHECK(cooperativity(at_power(10e-3)) == doctest::Approx(1.7e-3).epsilon(0.02));
    CHECK(cooperativity(at_power(0.0)) == 0.0);

    EoOperatingPoint doubled = at_power(10e-3);
    doubled.card.g_eo_hz *= 2.0;
    CHECK(cooperativity(doubled) ==
          doctest::Approx(4.0 * cooperativity(at_power(10e-3))).epsilon(1e-15));
}

TEST_CASE("on-chip efficiency at 10 mW and 1 mW") {
    CHECK(on_chip_efficiency(at_power(10e-3)) == doctest::Approx(oracle(10e-3).eta).epsilon(1e-12));
    CHECK(on_chip_efficiency(at_power(10e-3)) == doctest::Approx(1.3e-3).epsilon(0.05));
    // the 0 dBm readout operating point from the measurement
    CHECK(on_chip_efficiency(at_power(1e-3)) == doctest::Approx(1.3e-4).epsilon(0.15));
}

TEST_CASE("efficiency at the matched power equals the extraction bound") {
    const DeviceCard card = table_s1();
    const double p_star = matched_pump_power(card);
    const EoOperatingPoint pt{card, p_star, 0.0, {}};
    CHECK(cooperativity(pt) == doctest::Approx(1.0).epsilon(1e-12));
    const double bound = (card.optical_plus.kappa_ex_hz / card.optical_plus.total()) *
                         (card.microwave.kappa_ex_hz / card.microwave.total());
    CHECK(on_chip_efficiency(pt) == doctest::Approx(bound).epsilon(1e-12));
}

TEST_CASE("efficiency maximum found by golden section sits at C = 1") {
    const DeviceCard card = table_s1();
    const double p_star = matched_pump_power(card);

    double lo = p_star / 50.0;
    double hi = p_star * 50.0;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto eta_at = [&](double p) { return on_chip_efficiency(EoOperatingPoint{card, p, 0.0, {}}); };
    double x1 = hi - phi * (hi - lo);
    double x2 = lo + phi * (hi - lo);
    for (int it = 0; it < 200 && (hi - lo) > 1e-9 * p_star; ++it) {
        if (eta_at(x1) < eta_at(x2)) {
            lo = x1;
            x1 = x2;
            x2 = lo + phi * (hi - lo);
        } else {
            hi = x2;
            x2 = x1;
            x1 = hi - phi * (hi - lo);
        }
    }
    CHECK(0.5 * (lo + hi) == doctest::Approx(p_star).epsilon(1e-6));
}

TEST_CASE("efficiency never exceeds the extraction bound") {
    const DeviceCard card = table_s1();
    const double bound = (card.optical_plus.kappa_ex_hz / card.optical_plus.total()) *
                         (card.microwave.kappa_ex_hz / card.microwave.total());
    for (double p = 1e-6; p < 1e3; p *= 3.0) {
        CHECK(on_chip_efficiency(EoOperatingPoint{card, p, 0.0, {}}) <= bound * (1.0 + 1e-12));
    }
}

TEST_CASE("linear-response regime: eta ~ bound * 4C for small C") {
    const DeviceCard card = table_s1();
    const double bound = (card.optical_plus.kappa_ex_hz / card.optical_plus.total()) *
                         (card.microwave.kappa_ex_hz / card.microwave.total());
    for (double p = 1e-6; p < 3e-2; p *= 10.0) {
        const EoOperatingPoint pt{card, p, 0.0, {}};
        const double c = cooperativity(pt);
        if (c >= 1e-2) {
            continue;
        }
        const double eta = on_chip_efficiency(pt);
        CHECK(std::abs(eta - bound * 4.0 * c) / (bound * 4.0 * c) < 2.0 * c);
    }
}

TEST_CASE("matched spectrum peak reproduces the on-chip efficiency") {
    EoOperatingPoint pt = at_power(10e-3);
    pt.probe_detuning_hz = Eigen::ArrayXd::LinSpaced(2001, -100e6, 100e6);
    const Eigen::ArrayXcd s = transduction_spectrum(pt);
    const Eigen::ArrayXd mag2 = s.abs2();
    // the matched (delta = 0) lineshape peaks at zero probe detuning
    CHECK(mag2(1000) == doctest::Approx(on_chip_efficiency(pt)).epsilon(1e-9));
    CHECK(mag2.maxCoeff() == doctest::Approx(on_chip_efficiency(pt)).epsilon(1e-9));
}

TEST_CASE("mismatched spectrum peaks strictly below the matched peak") {
    EoOperatingPoint pt = at_power(10e-3);
    pt.probe_detuning_hz = Eigen::ArrayXd::LinSpaced(4001, -300e6, 300e6);
    const double matched_peak = transduction_spectrum(pt).abs2().maxCoeff();
    pt.microwave_detuning_hz = pt.card.microwave.total();  // delta = kappa_m
    const double detuned_peak = transduction_spectrum(pt).abs2().maxCoeff();
    CHECK(detuned_peak < matched_peak);
}

TEST_CASE("spectrum rejects an empty probe grid") {
    EoOperatingPoint pt = at_power(1e-3);
    CHECK_THROWS_AS(transduction_spectrum(pt), validation_error);
}

TEST_CASE("bandwidth of an exact 20 MHz Lorentzian") {
    const double fwhm = 20e6;
    const Eigen::ArrayXd f = Eigen::ArrayXd::LinSpaced(1201, -60e6, 60e6);  // 0.1 MHz spacing
    const Eigen::ArrayXd mag2 = 1.0 / (1.0 + (2.0 * f / fwhm).square());
    CHECK(bandwidth_3db(f, mag2) == doctest::Approx(fwhm).epsilon(0.1e6 / fwhm));
}

TEST_CASE("bandwidth crossings of a symmetric spectrum are equidistant") {
    EoOperatingPoint pt = at_power(10e-3);
    pt.probe_detuning_hz = Eigen::ArrayXd::LinSpaced(8001, -200e6, 200e6);
    const Eigen::ArrayXd mag2 = transduction_spectrum(pt).abs2();
    const double width = bandwidth_3db(pt.probe_detuning_hz, mag2);

    // bisection on the closed-form product of susceptibilities
    const double km = two_pi * 63.7e6;
    const double kp = two_pi * 274.2e6;
    auto shape = [&](double d_hz) {
        const double d = two_pi * d_hz;
        return 1.0 / ((km * km / 4.0 + d * d) * (kp * kp / 4.0 + d * d));
    };
    const double half = shape(0.0) / 2.0;
    double lo = 0.0;
    double hi = 200e6;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (shape(mid) > half ? lo : hi) = mid;
    }
    CHECK(width == doctest::Approx(2.0 * lo).epsilon(1e-3));
}

TEST_CASE("bandwidth of a monotone spectrum is an error") {
    const Eigen::ArrayXd f = Eigen::ArrayXd::LinSpaced(101, 0.0, 1e6);
    const Eigen::ArrayXd rising = f / 1e6;
    CHECK_THROWS_AS(bandwidth_3db(f, rising), numeric_error);
}

namespace {

FieldProfiles uniform_profiles(Eigen::Index nr, Eigen::Index nz) {
    FieldProfiles p;
    p.nr = nr;
    p.nz = nz;
    p.dr_m = 1.0 / static_cast<double>(nr - 1);
    p.dz_m = 1.0 / static_cast<double>(nz - 1);
    const Eigen::Index n = nr * nz;
    p.u_oz = Eigen::ArrayXcd::Ones(n);
    p.u_mr = Eigen::ArrayXcd::Zero(n);
    p.u_mz = Eigen::ArrayXcd::Ones(n);
    p.eps_ozz = Eigen::ArrayXd::Ones(n);
    p.eps_mrr = Eigen::ArrayXd::Ones(n);
    p.eps_mzz = Eigen::ArrayXd::Ones(n);
    p.r33_pm_per_v = 1.0;
    p.ring_radius_m = 20e-6;
    p.omega_minus_hz = 194.1012e12;
    p.omega_plus_hz = 194.1069e12;
    p.omega_m_hz = 5.669e9;
    return p;
}

// Gaussian bump profiles for the quadrature-convergence check.
FieldProfiles smooth_profiles(Eigen::Index nr, Eigen::Index nz) {
    FieldProfiles p = uniform_profiles(nr, nz);
    for (Eigen::Index ir = 0; ir < nr; ++ir) {
        for (Eigen::Index iz = 0; iz < nz; ++iz) {
            const double r = static_cast<double>(ir) * p.dr_m;
            const double z = static_cast<double>(iz) * p.dz_m;
            const double go = std::exp(-((r - 0.5) * (r - 0.5) + (z - 0.5) * (z - 0.5)) / 0.08);
            const double gm = std::exp(-((r - 0.4) * (r - 0.4) + (z - 0.6) * (z - 0.6)) / 0.18);
            p.u_oz(ir * nz + iz) = go;
            p.u_mz(ir * nz + iz) = gm;
            p.u_mr(ir * nz + iz) = 0.3 * gm;
            p.eps_ozz(ir * nz + iz) = 1.0 + 3.0 * go;
            p.eps_mzz(ir * nz + iz) = 1.0 + 8.0 * gm;
            p.eps_mrr(ir * nz + iz) = 1.0 + 8.0 * gm;
        }
    }
    return p;
}

} // namespace

TEST_CASE("geo quadrature on unit constant fields matches the hand reduction") {
    const FieldProfiles p = uniform_profiles(21, 21);
    // constant integrands on the unit square: ratio = r33, microwave norm = 1
    const PhysicalConstants pc;
    const double expect = std::sqrt(pc.hbar * two_pi * p.omega_minus_hz * two_pi * p.omega_plus_hz *
                                    two_pi * p.omega_m_hz / (8.0 * M_PI * pc.eps0 * p.ring_radius_m)) *
                          1e-12 / two_pi;
    CHECK(compute_geo(p) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("geo vanishes with the microwave z-field and is linear in r33") {
    FieldProfiles p = uniform_profiles(11, 11);
    p.u_mz.setZero();
    p.u_mr.setOnes();  // keep the microwave norm finite
    CHECK(compute_geo(p) == 0.0);

    FieldProfiles q = smooth_profiles(41, 41);
    const double g1 = compute_geo(q);
    q.r33_pm_per_v *= 2.0;
    CHECK(compute_geo(q) == doctest::Approx(2.0 * g1).epsilon(1e-14));
}

TEST_CASE("geo rejects identically zero fields") {
    FieldProfiles p = uniform_profiles(11, 11);
    p.u_oz.setZero();
    CHECK_THROWS_AS(compute_geo(p), numeric_error);
    FieldProfiles q = uniform_profiles(11, 11);
    q.u_mr.setZero();
    q.u_mz.setZero();
    CHECK_THROWS_AS(compute_geo(q), numeric_error);
}

TEST_CASE("geo quadrature converges under grid refinement") {
    const double coarse = compute_geo(smooth_profiles(41, 41));
    const double fine = compute_geo(smooth_profiles(81, 81));
    CHECK(std::abs(fine - coarse) / fine < 0.01);
}

TEST_CASE("field profiles JSON round trip") {
    const FieldProfiles p = smooth_profiles(9, 7);
    std::string path = "profiles_test.json";
    {
        std::ofstream out(path);
        out << "{\n\"nr\": 9, \"nz\": 7, \"dr_m\": " << p.dr_m << ", \"dz_m\": " << p.dz_m
            << ",\n\"r33_pm_per_v\": 1.0, \"ring_radius_m\": 20e-6,\n"
            << "\"omega_minus_hz\": 194.1012e12, \"omega_plus_hz\": 194.1069e12, "
            << "\"omega_m_hz\": 5.669e9,\n";
        auto arr = [&out](const char* key, const Eigen::ArrayXd& a, bool last = false) {
            out << "\"" << key << "\": [";
            for (Eigen::Index i = 0; i < a.size(); ++i) {
                out << (i ? "," : "") << a(i);
            }
            out << "]" << (last ? "\n" : ",\n");
        };
        arr("u_oz_re", p.u_oz.real());
        arr("u_mr_re", p.u_mr.real());
        arr("u_mz_re", p.u_mz.real());
        arr("eps_ozz", p.eps_ozz);
        arr("eps_mrr", p.eps_mrr);
        arr("eps_mzz", p.eps_mzz, true);
        out << "}\n";
    }
    const FieldProfiles q = load_field_profiles(path);
    std::remove(path.c_str());
    CHECK(q.nr == p.nr);
    CHECK(q.nz == p.nz);
    CHECK(compute_geo(q) == doctest::Approx(compute_geo(p)).epsilon(1e-6));
    CHECK_THROWS_AS(load_field_profiles("no_such_file.json"), validation_error);
}
