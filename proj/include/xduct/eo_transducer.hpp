#ifndef XDUCT_EO_TRANSDUCER_HPP
#define XDUCT_EO_TRANSDUCER_HPP

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xduct/device_card.hpp"

namespace xduct::eo {

// One operating point of the electro-optic stage. The optical pump sits
// exactly on the lower optical resonance; microwave_detuning_hz is the
// triple-resonance mismatch delta = w_m - (w_+ - w_-).
struct EoOperatingPoint {
    DeviceCard card;
    double pump_power_onchip_w = 0.0;
    double microwave_detuning_hz = 0.0;
    Eigen::ArrayXd probe_detuning_hz;  // probe grid relative to the microwave resonance
};

// Mode-solver output sampled on a rectangular (r, z) grid, row-major with
// r as the slow index. Frequencies are ordinary Hz.
struct FieldProfiles {
    Eigen::Index nr = 0;
    Eigen::Index nz = 0;
    double dr_m = 0.0;
    double dz_m = 0.0;
    Eigen::ArrayXcd u_oz;      // optical field z-component
    Eigen::ArrayXcd u_mr;      // microwave field r-component
    Eigen::ArrayXcd u_mz;      // microwave field z-component
    Eigen::ArrayXd eps_ozz;    // relative permittivity, optical z
    Eigen::ArrayXd eps_mrr;    // relative permittivity, microwave r
    Eigen::ArrayXd eps_mzz;    // relative permittivity, microwave z
    double r33_pm_per_v = 0.0;
    double ring_radius_m = 0.0;
    double omega_minus_hz = 0.0;
    double omega_plus_hz = 0.0;
    double omega_m_hz = 0.0;

    void validate() const;
};

// Intra-cavity pump photon number n_p = 4 P k_ex / (hbar w (k_tot)^2),
// evaluated in angular units. Linear in pump power.
double pump_photon_number(const EoOperatingPoint& point);

// Electro-optic cooperativity C = 4 n_p g^2 / (kappa_m kappa_+).
double cooperativity(const EoOperatingPoint& point);

// On-chip efficiency (k+ex/k+)(km_ex/km) * 4C/(1+C)^2, in [0, 1].
double on_chip_efficiency(const EoOperatingPoint& point);

// Pump power at which C = 1 (the efficiency optimum).
double matched_pump_power(const DeviceCard& card);

// Complex transfer on the probe grid: S(D) proportional to
// chi_m(D) * chi_+(D - delta), normalized so the matched peak reproduces
// on_chip_efficiency.
Eigen::ArrayXcd transduction_spectrum(const EoOperatingPoint& point);

// Full width between the half-power crossings of a sampled spectrum,
// linearly interpolated. Throws numeric_error if a crossing is missing
// (peak at an edge, or the width exceeds the grid).
double bandwidth_3db(const Eigen::ArrayXd& detuning_hz, const Eigen::ArrayXd& mag2);

// Overlap-integral coupling rate by 2-D trapezoidal quadrature over the
// (r, z) grid. Returns ordinary Hz.
double compute_geo(const FieldProfiles& profiles);

FieldProfiles load_field_profiles(const std::string& path);

} // namespace xduct::eo

#endif // XDUCT_EO_TRANSDUCER_HPP
