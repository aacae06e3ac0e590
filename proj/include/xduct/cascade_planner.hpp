#ifndef XDUCT_CASCADE_PLANNER_HPP
#define XDUCT_CASCADE_PLANNER_HPP

#include <string>
#include <utility>
#include <vector>

#include "xduct/flux_tune.hpp"

namespace xduct::cascade {

// Multimode comb f_n(b) = (f_ref + n*fsr) * (1 - k*b^2): every mode shares
// the same fractional flux shift.
struct CombModel {
    double f_ref_hz = 0.0;
    double fsr_hz = 0.0;
    int n_min = 0;
    int n_max = 0;
    double k_per_mt2 = 0.0;
    double b_max_mt = 0.0;

    double mode_zero_bias(int n) const { return f_ref_hz + n * fsr_hz; }
    double max_fractional_shift() const { return k_per_mt2 * b_max_mt * b_max_mt; }

    void validate() const;
};

// A complete frequency-matching solution. Infeasibility is data, not an
// error; `diagnostic` says which step failed and `slack` how far it missed.
struct Plan {
    bool feasible = false;
    int signal_index = 0;
    int idler_index = 0;
    double b_mm_mt = 0.0;
    double b_mo_mt = 0.0;
    double f_signal_hz = 0.0;
    double f_idler_hz = 0.0;
    double f_pump_conv_hz = 0.0;
    double f_pump_amp_hz = 0.0;
    double slack_hz = 0.0;
    std::string diagnostic;
};

enum class Channel { mm_pump, mm_amp_pump, laser, probe, qubit_drive };

struct PulseEvent {
    Channel channel;
    double start_s = 0.0;
    double duration_s = 0.0;
};

struct PulseSchedule {
    std::vector<PulseEvent> events;
    double period_s = 0.0;

    void validate() const;
};

enum class ScheduleKind { transduction, qubit_readout };

struct ScheduleOverrides {
    double period_s = 1e-3;      // repetition period
    double pump_lead_s = 2e-6;   // pump on this long before the window
    double window_s = 4e-6;      // laser + probe measurement window
    double drive_s = 5e-7;       // qubit drive pulse length
    double delay_s = 0.0;        // gap between drive end and readout start
};

struct CoverageResult {
    double fraction = 0.0;
    std::vector<std::pair<double, double>> gaps;  // sorted uncovered intervals
};

// All comb modes at bias b, as (index, frequency) pairs.
std::vector<std::pair<int, double>> comb_frequencies(const CombModel& comb, double b_mt);

// Zero-bias comb index closest to f.
int nearest_index(const CombModel& comb, double f_hz);

// Deterministic matching: tune the minimal-shift signal mode onto f_target,
// then tune the M2O resonance onto the best reachable idler mode.
Plan plan_match(double f_target_hz, const CombModel& comb, const flux::FluxTuneModel& m2o);

// Fraction of [f_lo, f_hi] reachable as a signal frequency. With
// gate_on_idler, a point only counts if some other comb mode lands inside
// the M2O window at the same bias.
CoverageResult coverage(double f_lo_hz, double f_hi_hz, const CombModel& comb,
                        const flux::FluxTuneModel& m2o, bool gate_on_idler = true);

double chain_efficiency(double eta_mo, double eta_mm);

// Friis-style cascade n_mm + n_mo/eta_mm referred to the M2M input. This is
// a model extension beyond the measured stage noise figures; outputs carry
// a metadata note saying so.
double chain_added_noise(double n_add_mm_quanta, double n_add_mo_quanta, double eta_mm);

PulseSchedule pulse_schedule(ScheduleKind kind, const ScheduleOverrides& overrides = {});

const char* channel_name(Channel c);

CombModel load_comb_model(const std::string& path);
std::string serialize_plan(const Plan& plan);

} // namespace xduct::cascade

#endif // XDUCT_CASCADE_PLANNER_HPP
