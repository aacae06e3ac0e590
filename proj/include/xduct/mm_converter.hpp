#ifndef XDUCT_MM_CONVERTER_HPP
#define XDUCT_MM_CONVERTER_HPP

#include <array>
#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace xduct::mm {

// Rotating-frame parameters of the two-mode converter. All rates are
// ordinary frequencies in Hz; the scattering matrix is invariant under the
// common 2*pi scaling, so the dynamics are assembled directly in these units.
struct MmParams {
    double delta_a_hz = 0.0;
    double delta_b_hz = 0.0;
    double g_hz = 0.0;        // beam-splitter (conversion) rate
    double phi_g_rad = 0.0;
    double eps_hz = 0.0;      // parametric pump strength on mode b
    double phi_eps_rad = 0.0;
    double kappa_a_in_hz = 0.0;
    double kappa_a_ex_hz = 0.0;
    double kappa_b_in_hz = 0.0;
    double kappa_b_ex_hz = 0.0;

    double kappa_a() const { return kappa_a_in_hz + kappa_a_ex_hz; }
    double kappa_b() const { return kappa_b_in_hz + kappa_b_ex_hz; }
    double cooperativity() const { return 4.0 * g_hz * g_hz / (kappa_a() * kappa_b()); }

    void validate() const;
};

// Equations of motion d/dt v = M v + sqrt(K_ext) v_in,ext + sqrt(K_in) v_in,loss
// in the doubled basis v = (a, b, a^dag, b^dag).
struct DoubledSystem {
    Eigen::Matrix4cd m;
    Eigen::Vector4d k_ext;  // diagonal external couplings
    Eigen::Vector4d k_in;   // diagonal internal (loss) couplings
};

// Thermal occupancy of each input port, in quanta.
struct NoiseInputs {
    double a_ext = 0.0;
    double b_ext = 0.0;
    double a_loss = 0.0;
    double b_loss = 0.0;
};

struct StabilityResult {
    bool stable = false;
    double max_real_part_hz = 0.0;  // largest real part of the eigenvalues of M
};

struct ConversionEfficiency {
    double total = 0.0;     // |S_ba(0)|^2 including extraction ratios
    double internal = 0.0;  // 4C/(1+C)^2
};

struct PhaseSensitiveGain {
    double gain = 0.0;   // power gain at the requested input phase
    double g_max = 0.0;  // extremum over phase
    double g_min = 0.0;
};

DoubledSystem build_doubled_system(const MmParams& params);

StabilityResult stability(const MmParams& params);

// 4x4 scattering over the external ports at probe frequency omega (Hz, in
// the rotating frame), with a_out = sqrt(k_ex) a - a_in. Throws
// instability_error at or beyond the parametric threshold.
Eigen::Matrix4cd scattering_matrix(const DoubledSystem& sys, double omega_hz);

// Full 4x8 scattering over (external, loss) input ports.
Eigen::Matrix<std::complex<double>, 4, 8> full_scattering_matrix(const DoubledSystem& sys,
                                                                 double omega_hz);

// |S_ba(0)|^2 plus the internal efficiency 4C/(1+C)^2. Requires the pure
// beam-splitter point (eps = 0, zero detunings).
ConversionEfficiency conversion_efficiency(const MmParams& params);

// The two cooperativity roots of 4C/(1+C)^2 = eta_internal, ascending.
std::pair<double, double> cooperativity_roots(double eta_internal);

// Phase-sensitive power gain at the b external port at omega = 0 for a
// coherent input of phase theta: |S_bb + e^{-2i theta} S_{b,b+}|^2.
PhaseSensitiveGain phase_sensitive_gain(const MmParams& params, double input_phase_rad);

// Output occupancy (quanta) at the a and b external ports from symmetrized
// covariance transport V_out = S V_in S^dag.
Eigen::Vector2d output_occupancy(const DoubledSystem& sys, const NoiseInputs& noise,
                                 double omega_hz);

// SNR enhancement of amplified readout: G(0.5+n_hemt)/(eta G(0.5+n_add)+n_hemt).
double snr_enhancement(double gain, double eta_chain, double n_add, double n_hemt);

struct SnrFitResult {
    double p = 0.0;         // composite eta*(0.5+n_add)
    double p_stderr = 0.0;
    double n_add_bound = 0.0;  // p/eta_min - 0.5; only set when eta_min given
    bool has_bound = false;
};

// One-parameter nonlinear fit of DeltaSNR(G) = G(0.5+n_hemt)/(pG+n_hemt) to
// (gain, DeltaSNR) pairs in linear units. Points must span >= 10 dB of gain.
SnrFitResult fit_snr_curve(const std::vector<std::pair<double, double>>& points,
                           double n_hemt, double eta_min = 0.0);

} // namespace xduct::mm

#endif // XDUCT_MM_CONVERTER_HPP
