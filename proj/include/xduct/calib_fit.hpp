#ifndef XDUCT_CALIB_FIT_HPP
#define XDUCT_CALIB_FIT_HPP

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace xduct::calib {

// One measured power trace (complex traces are reduced to power on load).
struct Trace {
    Eigen::ArrayXd freq_hz;
    Eigen::ArrayXd power;
};

// Four two-port traces sharing one frequency axis, plus the window that
// brackets the conversion peak.
struct TraceSet {
    Trace s_oo;  // optical in, optical out
    Trace s_oe;  // electrical in, optical out
    Trace s_eo;  // optical in, electrical out
    Trace s_ee;  // electrical in, electrical out
    double window_lo_hz = 0.0;
    double window_hi_hz = 0.0;

    void validate() const;
};

struct EfficiencyResult {
    double eta = 0.0;
    double s_oe_pk = 0.0;
    double s_eo_pk = 0.0;
    double s_oo_bg = 0.0;
    double s_ee_bg = 0.0;
};

// Calibrated efficiency (S_oe,pk * S_eo,pk) / (S_oo,bg * S_ee,bg) with
// pk = max inside the window and bg = median outside it.
EfficiencyResult extract_efficiency(const TraceSet& traces);

// VTS calibration sweep: injected occupancy vs measured output noise power.
struct NoiseSweep {
    std::vector<std::pair<double, double>> points;  // (n_ex quanta, s_out)
};

struct VtsFitResult {
    double gain = 0.0;
    double n_amp = 0.0;
    double gain_stderr = 0.0;
    double n_amp_stderr = 0.0;
};

// Linear fit S_out = G (R n_ex + n_amp); R is the reflection at the
// operating point (1 for a fully reflective off-resonance reference).
VtsFitResult vts_fit(const NoiseSweep& sweep, double reflection = 1.0);

// S_dev = R n_ex + (1 - R) n_en, pointwise over a reflection spectrum.
Eigen::ArrayXd device_noise_spectrum(const Eigen::ArrayXd& reflection, double n_en, double n_ex);

// (k_in n_en + k_ex n_ex) / (k_in + k_ex).
double mode_occupancy(double kappa_in_hz, double kappa_ex_hz, double n_en, double n_ex);

enum class CoherenceKind { rabi, t1, ramsey };

struct CoherenceTrace {
    CoherenceKind kind = CoherenceKind::t1;
    std::vector<double> time_s;
    std::vector<double> population;

    void validate() const;
};

struct T1Fit {
    double t1_s = 0.0;
    double amplitude = 0.0;
    double offset = 0.0;
    double t1_stderr = 0.0;
    double amplitude_stderr = 0.0;
    double offset_stderr = 0.0;
    double chi2_reduced = 0.0;
};

struct RabiFit {
    double omega_hz = 0.0;  // Rabi frequency
    double tau_s = 0.0;     // decay constant
    double amplitude = 0.0;
    double phase_rad = 0.0;
    double offset = 0.0;
    double omega_stderr = 0.0;
    double tau_stderr = 0.0;
    double amplitude_stderr = 0.0;
    double phase_stderr = 0.0;
    double offset_stderr = 0.0;
    double chi2_reduced = 0.0;
    double nyquist_hz = 0.0;  // frequencies above this fold back (alias)
};

struct RamseyFit {
    double t2_s = 0.0;
    double detuning_hz = 0.0;
    double amplitude = 0.0;
    double phase_rad = 0.0;
    double offset = 0.0;
    double t2_stderr = 0.0;
    double detuning_stderr = 0.0;
    double amplitude_stderr = 0.0;
    double phase_stderr = 0.0;
    double offset_stderr = 0.0;
    double chi2_reduced = 0.0;
    bool oscillatory = false;  // false when the data reduced to a bare decay
};

inline double t1_model(double t, double t1, double a, double c) {
    return a * std::exp(-t / t1) + c;
}
inline double rabi_model(double t, double omega, double tau, double a, double phi, double c) {
    return a * std::cos(2.0 * M_PI * omega * t + phi) * std::exp(-t / tau) + c;
}
inline double ramsey_model(double t, double t2, double delta, double a, double phi, double c) {
    return a * std::exp(-t / t2) * std::cos(2.0 * M_PI * delta * t + phi) + c;
}

T1Fit fit_t1(const CoherenceTrace& trace);
RabiFit fit_rabi(const CoherenceTrace& trace);
RamseyFit fit_ramsey(const CoherenceTrace& trace);

// CSV loaders for the shared trace formats.
Trace load_trace(const std::string& path);          // freq_hz,mag2 or freq_hz,re,im
CoherenceTrace load_coherence_trace(const std::string& path, CoherenceKind kind);
NoiseSweep load_noise_sweep(const std::string& path);  // n_ex,s_out

} // namespace xduct::calib

#endif // XDUCT_CALIB_FIT_HPP
