#include "xduct/device_card.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace xduct {

using nlohmann::json;

namespace {

void check_mode(const std::string& name, const ModeSpec& m, std::string* err) {
    if (m.frequency_hz <= 0.0) {
        *err += name + ": frequency must be > 0; ";
    }
    if (m.kappa_in_hz < 0.0 || m.kappa_ex_hz < 0.0) {
        *err += name + ": coupling rates must be >= 0; ";
    }
}

ModeSpec parse_mode(const json& j, const std::string& name) {
    if (!j.is_object()) {
        throw validation_error("device card: mode '" + name + "' must be an object");
    }
    for (const char* key : {"frequency_hz", "kappa_in_hz", "kappa_ex_hz"}) {
        if (!j.contains(key)) {
            throw validation_error("device card: mode '" + name + "' missing field '" + key + "'");
        }
    }
    ModeSpec m;
    m.frequency_hz = j.at("frequency_hz").get<double>();
    m.kappa_in_hz = j.at("kappa_in_hz").get<double>();
    m.kappa_ex_hz = j.at("kappa_ex_hz").get<double>();
    // Cards may carry the quoted total alongside in/ex; it must agree.
    if (j.contains("kappa_hz")) {
        const double quoted = j.at("kappa_hz").get<double>();
        const double sum = m.total();
        const double scale = std::max(std::abs(quoted), std::abs(sum));
        if (scale > 0.0 && std::abs(quoted - sum) > 1e-9 * scale) {
            throw validation_error("device card: mode '" + name +
                                   "' total kappa_hz inconsistent with kappa_in_hz + kappa_ex_hz");
        }
    }
    return m;
}

json mode_to_json(const ModeSpec& m) {
    return json{{"frequency_hz", m.frequency_hz},
                {"kappa_in_hz", m.kappa_in_hz},
                {"kappa_ex_hz", m.kappa_ex_hz}};
}

} // namespace

std::vector<std::string> DeviceCard::validate() const {
    std::string err;
    check_mode("optical_minus", optical_minus, &err);
    check_mode("optical_plus", optical_plus, &err);
    check_mode("microwave", microwave, &err);
    check_mode("mm_signal", mm_signal, &err);
    check_mode("mm_idler", mm_idler, &err);
    if (g_eo_hz < 0.0) {
        err += "g_eo_hz must be >= 0; ";
    }
    if (qubit.omega_r_hz <= 0.0 || qubit.omega_q_hz <= 0.0) {
        err += "qubit frequencies must be > 0; ";
    }
    if (qubit.kappa_r_hz < 0.0) {
        err += "qubit.kappa_r_hz must be >= 0; ";
    }
    if (!err.empty()) {
        throw validation_error("device card '" + label + "': " + err);
    }

    std::vector<std::string> warnings;
    if (matched) {
        const double splitting = optical_plus.frequency_hz - optical_minus.frequency_hz;
        const double mismatch = std::abs(splitting - microwave.frequency_hz);
        if (mismatch > 2.0 * microwave.total()) {
            std::ostringstream os;
            os << "card flagged matched but |(w+ - w-) - w_m| = " << mismatch
               << " Hz exceeds 2*kappa_m = " << 2.0 * microwave.total() << " Hz";
            warnings.push_back(os.str());
        }
    }
    return warnings;
}

DeviceCard parse_device_card(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw validation_error(std::string("device card: parse error: ") + e.what());
    }
    for (const char* key : {"label", "optical_minus", "optical_plus", "microwave",
                            "g_eo_hz", "mm_signal", "mm_idler", "qubit"}) {
        if (!j.contains(key)) {
            throw validation_error(std::string("device card: missing field '") + key + "'");
        }
    }
    DeviceCard card;
    card.label = j.at("label").get<std::string>();
    card.optical_minus = parse_mode(j.at("optical_minus"), "optical_minus");
    card.optical_plus = parse_mode(j.at("optical_plus"), "optical_plus");
    card.microwave = parse_mode(j.at("microwave"), "microwave");
    card.g_eo_hz = j.at("g_eo_hz").get<double>();
    card.mm_signal = parse_mode(j.at("mm_signal"), "mm_signal");
    card.mm_idler = parse_mode(j.at("mm_idler"), "mm_idler");
    const json& q = j.at("qubit");
    for (const char* key : {"omega_r_hz", "kappa_r_hz", "omega_q_hz"}) {
        if (!q.contains(key)) {
            throw validation_error(std::string("device card: qubit missing field '") + key + "'");
        }
    }
    card.qubit.omega_r_hz = q.at("omega_r_hz").get<double>();
    card.qubit.kappa_r_hz = q.at("kappa_r_hz").get<double>();
    card.qubit.omega_q_hz = q.at("omega_q_hz").get<double>();
    card.matched = j.value("matched", false);
    card.validate();
    return card;
}

DeviceCard load_device_card(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw validation_error("device card: cannot open '" + path + "'");
    }
    std::ostringstream os;
    os << in.rdbuf();
    return parse_device_card(os.str());
}

std::string serialize_device_card(const DeviceCard& card) {
    json j{{"label", card.label},
           {"optical_minus", mode_to_json(card.optical_minus)},
           {"optical_plus", mode_to_json(card.optical_plus)},
           {"microwave", mode_to_json(card.microwave)},
           {"g_eo_hz", card.g_eo_hz},
           {"mm_signal", mode_to_json(card.mm_signal)},
           {"mm_idler", mode_to_json(card.mm_idler)},
           {"qubit", json{{"omega_r_hz", card.qubit.omega_r_hz},
                          {"kappa_r_hz", card.qubit.kappa_r_hz},
                          {"omega_q_hz", card.qubit.omega_q_hz}}},
           {"matched", card.matched}};
    return j.dump(2) + "\n";
}

void save_device_card(const DeviceCard& card, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw validation_error("device card: cannot write '" + path + "'");
    }
    out << serialize_device_card(card);
}

} // namespace xduct
