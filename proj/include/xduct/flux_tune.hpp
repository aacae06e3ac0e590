#ifndef XDUCT_FLUX_TUNE_HPP
#define XDUCT_FLUX_TUNE_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace xduct::flux {

// Quadratic tuning law f(b) = f0 * (1 - k * b^2), b in mT.
struct FluxTuneModel {
    double f0_hz = 0.0;       // zero-field resonance
    double k_per_mt2 = 0.0;   // quadratic coefficient, 1/mT^2
    double b_max_mt = 0.0;    // maximum usable bias

    // Largest fractional down-shift reachable within [0, b_max].
    double max_fractional_shift() const { return k_per_mt2 * b_max_mt * b_max_mt; }
    double floor_hz() const { return f0_hz * (1.0 - max_fractional_shift()); }

    void validate() const;
};

// L(I) = L_k0 * (1 + (I/I*)^2).
struct KineticInductanceLaw {
    double l_k0_h = 0.0;   // zero-current kinetic inductance, H
    double i_star_a = 0.0; // characteristic current, A
};

struct FluxFitResult {
    FluxTuneModel model;
    double f0_stderr = 0.0;
    double k_stderr = 0.0;
};

double kinetic_inductance(const KineticInductanceLaw& law, double current_a);

// Throws validation_error for b outside [0, b_max].
double frequency_at_bias(const FluxTuneModel& model, double b_mt);

// Inverse of frequency_at_bias. Empty result = target outside the reachable
// window [f0*(1 - k*b_max^2), f0] (a coverage gap, not a fault).
std::optional<double> solve_bias(const FluxTuneModel& model, double f_target_hz);

// Least-squares fit of f = f0*(1 - k*b^2), linear in (f0, f0*k).
// Needs >= 2 points with >= 2 distinct b values; standard errors come from
// the residual covariance and are NaN when there are no degrees of freedom.
FluxFitResult fit_flux_quadratic(const std::vector<std::pair<double, double>>& points_mt_hz,
                                 double b_max_mt = 0.0);

FluxTuneModel load_flux_model(const std::string& path);
std::string serialize_flux_fit(const FluxFitResult& fit);

} // namespace xduct::flux

#endif // XDUCT_FLUX_TUNE_HPP
