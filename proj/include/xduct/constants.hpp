#ifndef XDUCT_CONSTANTS_HPP
#define XDUCT_CONSTANTS_HPP

#include <cmath>

#include "xduct/errors.hpp"

namespace xduct {

// CODATA 2018 (exact SI definitions). hbar = h/(2*pi) to machine precision.
struct PhysicalConstants {
    double h = 6.62607015e-34;           // J s
    double hbar = 6.62607015e-34 / (2.0 * M_PI);
    double k_B = 1.380649e-23;           // J/K
    double eps0 = 8.8541878128e-12;      // F/m
};

inline constexpr double two_pi = 2.0 * M_PI;

// Bose-Einstein occupancy n = 1/(exp(h f / k_B T) - 1), in quanta.
// frequency is an ordinary frequency in Hz. Returns 0 at T = 0.
inline double bose_occupancy(double temperature_k, double frequency_hz) {
    if (frequency_hz <= 0.0) {
        throw validation_error("bose_occupancy: frequency must be > 0");
    }
    if (temperature_k < 0.0) {
        throw validation_error("bose_occupancy: temperature must be >= 0");
    }
    if (temperature_k == 0.0) {
        return 0.0;
    }
    const PhysicalConstants c;
    const double x = c.h * frequency_hz / (c.k_B * temperature_k);
    return 1.0 / std::expm1(x);
}

inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm(double watt) { return 10.0 * std::log10(watt / 1e-3); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

} // namespace xduct

#endif // XDUCT_CONSTANTS_HPP
