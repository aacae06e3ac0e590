#ifndef XDUCT_DEVICE_CARD_HPP
#define XDUCT_DEVICE_CARD_HPP

#include <string>
#include <vector>

#include "xduct/errors.hpp"

namespace xduct {

// One resonant mode. All rates are ordinary frequencies in Hz (the device
// card stores the X of "2*pi*X"); angular factors are applied inside
// formulas, never here.
struct ModeSpec {
    double frequency_hz = 0.0;
    double kappa_in_hz = 0.0;
    double kappa_ex_hz = 0.0;

    double total() const { return kappa_in_hz + kappa_ex_hz; }
};

struct QubitSpec {
    double omega_r_hz = 0.0;  // readout resonator frequency
    double kappa_r_hz = 0.0;  // readout resonator linewidth
    double omega_q_hz = 0.0;  // qubit frequency
};

// Measured frequencies and coupling rates of one device chain.
struct DeviceCard {
    std::string label;
    ModeSpec optical_minus;  // optical pump-side mode (lower of the doublet)
    ModeSpec optical_plus;   // optical sideband mode (upper of the doublet)
    ModeSpec microwave;      // M2O microwave mode
    double g_eo_hz = 0.0;    // electro-optic single-photon coupling, Hz
    ModeSpec mm_signal;
    ModeSpec mm_idler;
    QubitSpec qubit;
    bool matched = false;    // advisory: optical splitting aligned with microwave

    // Throws validation_error on hard violations; returns advisory warnings
    // (e.g. the "matched" splitting check, which the hardware violates by
    // ~300 MHz before dc tuning).
    std::vector<std::string> validate() const;
};

DeviceCard load_device_card(const std::string& path);
DeviceCard parse_device_card(const std::string& json_text);
std::string serialize_device_card(const DeviceCard& card);
void save_device_card(const DeviceCard& card, const std::string& path);

} // namespace xduct

#endif // XDUCT_DEVICE_CARD_HPP
