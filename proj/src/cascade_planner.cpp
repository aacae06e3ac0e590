#include "xduct/cascade_planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "xduct/errors.hpp"

namespace xduct::cascade {

namespace {

using Interval = std::pair<double, double>;

// Union measure of possibly overlapping intervals; fills sorted merge.
std::vector<Interval> merge_intervals(std::vector<Interval> ivs) {
    std::sort(ivs.begin(), ivs.end());
    std::vector<Interval> merged;
    for (const auto& iv : ivs) {
        if (iv.second <= iv.first) {
            continue;
        }
        if (!merged.empty() && iv.first <= merged.back().second) {
            merged.back().second = std::max(merged.back().second, iv.second);
        } else {
            merged.push_back(iv);
        }
    }
    return merged;
}

} // namespace

void CombModel::validate() const {
    if (fsr_hz <= 0.0) {
        throw validation_error("comb model: fsr must be > 0");
    }
    if (n_min > n_max) {
        throw validation_error("comb model: empty index range");
    }
    if (mode_zero_bias(n_min) <= 0.0) {
        throw validation_error("comb model: lowest mode frequency must be > 0");
    }
    if (k_per_mt2 < 0.0 || b_max_mt <= 0.0) {
        throw validation_error("comb model: k must be >= 0 and b_max > 0");
    }
    if (max_fractional_shift() >= 10.0 * fsr_hz / f_ref_hz) {
        throw validation_error("comb model: fractional shift implausibly large vs FSR");
    }
}

std::vector<std::pair<int, double>> comb_frequencies(const CombModel& comb, double b_mt) {
    comb.validate();
    if (b_mt < 0.0 || b_mt > comb.b_max_mt) {
        std::ostringstream os;
        os << "comb_frequencies: b = " << b_mt << " mT outside [0, " << comb.b_max_mt << "]";
        throw validation_error(os.str());
    }
    const double shift = 1.0 - comb.k_per_mt2 * b_mt * b_mt;
    std::vector<std::pair<int, double>> out;
    out.reserve(static_cast<size_t>(comb.n_max - comb.n_min + 1));
    for (int n = comb.n_min; n <= comb.n_max; ++n) {
        out.emplace_back(n, comb.mode_zero_bias(n) * shift);
    }
    return out;
}

int nearest_index(const CombModel& comb, double f_hz) {
    const double raw = (f_hz - comb.f_ref_hz) / comb.fsr_hz;
    const int n = static_cast<int>(std::lround(raw));
    return std::clamp(n, comb.n_min, comb.n_max);
}

Plan plan_match(double f_target_hz, const CombModel& comb, const flux::FluxTuneModel& m2o) {
    comb.validate();
    m2o.validate();
    if (f_target_hz <= 0.0) {
        throw validation_error("plan_match: target frequency must be > 0");
    }

    const double d_max = comb.max_fractional_shift();
    Plan plan;

    // Step 1: signal mode with the smallest required fractional down-tuning.
    int best_n = 0;
    double best_s = std::numeric_limits<double>::infinity();
    double miss = std::numeric_limits<double>::infinity();
    for (int n = comb.n_min; n <= comb.n_max; ++n) {
        const double fn = comb.mode_zero_bias(n);
        if (fn >= f_target_hz && fn * (1.0 - d_max) <= f_target_hz) {
            const double s = 1.0 - f_target_hz / fn;
            if (s < best_s) {
                best_s = s;
                best_n = n;
            }
        } else if (fn < f_target_hz) {
            miss = std::min(miss, f_target_hz - fn);
        } else {
            miss = std::min(miss, fn * (1.0 - d_max) - f_target_hz);
        }
    }
    if (!std::isfinite(best_s)) {
        plan.diagnostic = "no signal mode reaches the target (coverage gap)";
        plan.slack_hz = miss;
        return plan;
    }
    const double b_mm =
        best_s > 0.0 ? std::sqrt(best_s / comb.k_per_mt2) : 0.0;
    const double shift = 1.0 - best_s;

    // Step 2: idler mode inside the M2O window at the same bias; smallest
    // |b_mo| wins, then smallest index.
    int best_j = 0;
    double best_b_mo = std::numeric_limits<double>::infinity();
    double best_fj = 0.0;
    double window_miss = std::numeric_limits<double>::infinity();
    for (int j = comb.n_min; j <= comb.n_max; ++j) {
        if (j == best_n) {
            continue;
        }
        const double fj = comb.mode_zero_bias(j) * shift;
        const auto b_mo = flux::solve_bias(m2o, fj);
        if (b_mo && *b_mo <= m2o.b_max_mt && *b_mo < best_b_mo) {
            best_b_mo = *b_mo;
            best_j = j;
            best_fj = fj;
        } else if (!b_mo) {
            window_miss = std::min(
                window_miss, fj > m2o.f0_hz ? fj - m2o.f0_hz : m2o.floor_hz() - fj);
        }
    }
    if (!std::isfinite(best_b_mo)) {
        plan.signal_index = best_n;
        plan.b_mm_mt = b_mm;
        plan.f_signal_hz = comb.mode_zero_bias(best_n) * shift;
        plan.diagnostic = "no idler mode lands in the M2O window at the matched bias";
        plan.slack_hz = window_miss;
        return plan;
    }

    plan.feasible = true;
    plan.signal_index = best_n;
    plan.idler_index = best_j;
    plan.b_mm_mt = b_mm;
    plan.b_mo_mt = best_b_mo;
    plan.f_signal_hz = comb.mode_zero_bias(best_n) * shift;
    plan.f_idler_hz = best_fj;
    plan.f_pump_conv_hz = std::abs(plan.f_signal_hz - plan.f_idler_hz);
    plan.f_pump_amp_hz = 2.0 * plan.f_idler_hz;
    plan.slack_hz = std::abs(best_fj - flux::frequency_at_bias(m2o, best_b_mo));
    return plan;
}

CoverageResult coverage(double f_lo_hz, double f_hi_hz, const CombModel& comb,
                        const flux::FluxTuneModel& m2o, bool gate_on_idler) {
    comb.validate();
    m2o.validate();
    if (f_lo_hz >= f_hi_hz) {
        throw validation_error("coverage: band must satisfy f_lo < f_hi");
    }

    const double d_max = comb.max_fractional_shift();
    std::vector<Interval> reachable;
    for (int n = comb.n_min; n <= comb.n_max; ++n) {
        const double fn = comb.mode_zero_bias(n);
        if (!gate_on_idler) {
            reachable.emplace_back(std::max(fn * (1.0 - d_max), f_lo_hz),
                                   std::min(fn, f_hi_hz));
            continue;
        }
        // Shift values s where some other mode j sits inside the M2O window.
        for (int j = comb.n_min; j <= comb.n_max; ++j) {
            if (j == n) {
                continue;
            }
            const double fj = comb.mode_zero_bias(j);
            const double s1 = std::max(1.0 - m2o.f0_hz / fj, 0.0);
            const double s2 = std::min(1.0 - m2o.floor_hz() / fj, d_max);
            if (s2 <= s1) {
                continue;
            }
            reachable.emplace_back(std::max(fn * (1.0 - s2), f_lo_hz),
                                   std::min(fn * (1.0 - s1), f_hi_hz));
        }
    }

    const auto merged = merge_intervals(std::move(reachable));
    CoverageResult out;
    double covered = 0.0;
    double cursor = f_lo_hz;
    for (const auto& iv : merged) {
        covered += iv.second - iv.first;
        if (iv.first > cursor) {
            out.gaps.emplace_back(cursor, iv.first);
        }
        cursor = std::max(cursor, iv.second);
    }
    if (cursor < f_hi_hz) {
        out.gaps.emplace_back(cursor, f_hi_hz);
    }
    out.fraction = covered / (f_hi_hz - f_lo_hz);
    return out;
}

double chain_efficiency(double eta_mo, double eta_mm) {
    if (eta_mo < 0.0 || eta_mo > 1.0 || eta_mm < 0.0 || eta_mm > 1.0) {
        throw validation_error("chain_efficiency: stage efficiencies must be in [0, 1]");
    }
    return eta_mo * eta_mm;
}

double chain_added_noise(double n_add_mm_quanta, double n_add_mo_quanta, double eta_mm) {
    if (eta_mm <= 0.0 || eta_mm > 1.0) {
        throw validation_error("chain_added_noise: eta_mm must be in (0, 1]");
    }
    if (n_add_mm_quanta < 0.0 || n_add_mo_quanta < 0.0) {
        throw validation_error("chain_added_noise: occupancies must be >= 0");
    }
    return n_add_mm_quanta + n_add_mo_quanta / eta_mm;
}

void PulseSchedule::validate() const {
    if (period_s <= 0.0) {
        throw validation_error("pulse schedule: period must be > 0");
    }
    for (const auto& e : events) {
        if (e.start_s < 0.0 || e.duration_s < 0.0) {
            throw validation_error("pulse schedule: negative start or duration");
        }
        if (e.start_s + e.duration_s > period_s) {
            std::ostringstream os;
            os << "pulse schedule: event '" << channel_name(e.channel)
               << "' extends past the period (" << e.start_s + e.duration_s << " s > "
               << period_s << " s)";
            throw validation_error(os.str());
        }
    }
}

PulseSchedule pulse_schedule(ScheduleKind kind, const ScheduleOverrides& o) {
    if (o.period_s <= 0.0 || o.window_s <= 0.0 || o.pump_lead_s < 0.0 || o.drive_s < 0.0 ||
        o.delay_s < 0.0) {
        throw validation_error("pulse_schedule: overrides must be non-negative");
    }
    PulseSchedule sched;
    sched.period_s = o.period_s;
    const double pump_len = o.pump_lead_s + o.window_s;
    if (kind == ScheduleKind::transduction) {
        sched.events = {{Channel::mm_pump, 0.0, pump_len},
                        {Channel::laser, o.pump_lead_s, o.window_s},
                        {Channel::probe, o.pump_lead_s, o.window_s}};
    } else {
        // Keep the drive-to-readout gap exactly delay_s and every start >= 0:
        // either the drive or the pump lead pins t = 0.
        double drive_start = 0.0;
        double readout_start = o.drive_s + o.delay_s;
        double pump_start = readout_start - o.pump_lead_s;
        if (pump_start < 0.0) {
            pump_start = 0.0;
            readout_start = o.pump_lead_s;
            drive_start = std::max(readout_start - o.delay_s - o.drive_s, 0.0);
        }
        sched.events = {{Channel::qubit_drive, drive_start, o.drive_s},
                        {Channel::mm_pump, pump_start, pump_len},
                        {Channel::mm_amp_pump, pump_start, pump_len},
                        {Channel::laser, readout_start, o.window_s},
                        {Channel::probe, readout_start, o.window_s}};
    }
    sched.validate();
    return sched;
}

const char* channel_name(Channel c) {
    switch (c) {
        case Channel::mm_pump: return "mm_pump";
        case Channel::mm_amp_pump: return "mm_amp_pump";
        case Channel::laser: return "laser";
        case Channel::probe: return "probe";
        case Channel::qubit_drive: return "qubit_drive";
    }
    return "?";
}

CombModel load_comb_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw validation_error("comb model: cannot open '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error(std::string("comb model: parse error: ") + e.what());
    }
    for (const char* key : {"f_ref_hz", "fsr_hz", "n_min", "n_max", "k_per_mT2", "b_max_mT"}) {
        if (!j.contains(key)) {
            throw validation_error(std::string("comb model: missing field '") + key + "'");
        }
    }
    CombModel comb{j.at("f_ref_hz").get<double>(), j.at("fsr_hz").get<double>(),
                   j.at("n_min").get<int>(),       j.at("n_max").get<int>(),
                   j.at("k_per_mT2").get<double>(), j.at("b_max_mT").get<double>()};
    comb.validate();
    return comb;
}

std::string serialize_plan(const Plan& plan) {
    nlohmann::json j{{"feasible", plan.feasible},
                     {"signal_index", plan.signal_index},
                     {"idler_index", plan.idler_index},
                     {"b_mm_mT", plan.b_mm_mt},
                     {"b_mo_mT", plan.b_mo_mt},
                     {"f_signal_hz", plan.f_signal_hz},
                     {"f_idler_hz", plan.f_idler_hz},
                     {"f_pump_conv_hz", plan.f_pump_conv_hz},
                     {"f_pump_amp_hz", plan.f_pump_amp_hz},
                     {"slack_hz", plan.slack_hz},
                     {"diagnostic", plan.diagnostic}};
    return j.dump(2) + "\n";
}

} // namespace xduct::cascade
