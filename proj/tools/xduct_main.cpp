#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xduct/calib_fit.hpp"
#include "xduct/cascade_planner.hpp"
#include "xduct/constants.hpp"
#include "xduct/csv.hpp"
#include "xduct/device_card.hpp"
#include "xduct/eo_transducer.hpp"
#include "xduct/errors.hpp"
#include "xduct/flux_tune.hpp"
#include "xduct/mm_converter.hpp"
#include "xduct/nlls.hpp"

namespace {

using nlohmann::json;

struct Sweep {
    double start = 0.0;
    double stop = 0.0;
    double step = 0.0;

    std::vector<double> grid() const {
        std::vector<double> out;
        for (double v = start; v <= stop + 1e-9 * step; v += step) {
            out.push_back(std::min(v, stop));
        }
        return out;
    }
};

Sweep parse_sweep(const std::string& text) {
    Sweep s;
    char c1 = 0;
    char c2 = 0;
    std::istringstream is(text);
    if (!(is >> s.start >> c1 >> s.stop >> c2 >> s.step) || c1 != ':' || c2 != ':' ||
        !is.eof()) {
        throw xduct::validation_error("sweep must be start:stop:step, got '" + text + "'");
    }
    if (s.step <= 0.0 || s.start >= s.stop) {
        throw xduct::validation_error("sweep requires step > 0 and start < stop");
    }
    return s;
}

int num_workers() {
    const char* env = std::getenv("XDUCT_NUM_WORKERS");
    if (env == nullptr) {
        return 1;
    }
    const int n = std::atoi(env);
    return n >= 1 ? n : 1;
}

// Evaluate fn(i) for i in [0, n) across the worker pool; results land in
// index order regardless of completion order.
template <typename Fn>
void parallel_for(size_t n, const Fn& fn) {
    const int workers = std::min<int>(num_workers(), static_cast<int>(n));
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                fn(i);
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
}

void write_text(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) {
        throw xduct::validation_error("cannot write '" + out_path + "'");
    }
    out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

xduct::mm::MmParams load_mm_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw xduct::validation_error("mm params: cannot open '" + path + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw xduct::validation_error(std::string("mm params: parse error: ") + e.what());
    }
    xduct::mm::MmParams p;
    p.delta_a_hz = j.value("delta_a_hz", 0.0);
    p.delta_b_hz = j.value("delta_b_hz", 0.0);
    p.g_hz = j.value("g_hz", 0.0);
    p.phi_g_rad = j.value("phi_g_rad", 0.0);
    p.eps_hz = j.value("eps_hz", 0.0);
    p.phi_eps_rad = j.value("phi_eps_rad", 0.0);
    for (const char* key :
         {"kappa_a_in_hz", "kappa_a_ex_hz", "kappa_b_in_hz", "kappa_b_ex_hz"}) {
        if (!j.contains(key)) {
            throw xduct::validation_error(std::string("mm params: missing field '") + key + "'");
        }
    }
    p.kappa_a_in_hz = j.at("kappa_a_in_hz").get<double>();
    p.kappa_a_ex_hz = j.at("kappa_a_ex_hz").get<double>();
    p.kappa_b_in_hz = j.at("kappa_b_in_hz").get<double>();
    p.kappa_b_ex_hz = j.at("kappa_b_ex_hz").get<double>();
    p.validate();
    return p;
}

struct CommonOpts {
    std::string out = "-";
    std::string format;
    long seed = 0;  // reserved for Monte-Carlo subcommands
};

void add_common(CLI::App* cmd, CommonOpts* opts) {
    cmd->add_option("--out", opts->out, "Output file path ('-' for stdout)");
    cmd->add_option("--format", opts->format, "Output format (csv or json)")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--seed", opts->seed, "Deterministic seed for Monte-Carlo subcommands");
}

// ---- subcommand bodies -------------------------------------------------

int run_m2o_efficiency(const std::string& card_path, double power_dbm, double power_w,
                       bool have_dbm, bool have_w, const std::string& power_sweep,
                       double detuning_hz, const std::string& probe_sweep,
                       const CommonOpts& opts) {
    const xduct::DeviceCard card = xduct::load_device_card(card_path);
    const int specs = int(have_dbm) + int(have_w) + int(!power_sweep.empty());
    if (specs != 1) {
        throw xduct::validation_error(
            "m2o-efficiency: give exactly one of --power-dbm, --power-w, --power-sweep");
    }

    if (!power_sweep.empty()) {
        const auto grid = parse_sweep(power_sweep).grid();
        std::vector<std::vector<double>> rows(grid.size());
        parallel_for(grid.size(), [&](size_t i) {
            xduct::eo::EoOperatingPoint pt{card, grid[i], detuning_hz, {}};
            rows[i] = {grid[i], xduct::eo::pump_photon_number(pt),
                       xduct::eo::cooperativity(pt), xduct::eo::on_chip_efficiency(pt)};
        });
        if (opts.format == "json") {
            json arr = json::array();
            for (const auto& r : rows) {
                arr.push_back(json{{"power_w", r[0]}, {"n_p", r[1]}, {"c_eo", r[2]},
                                   {"eta_eo", r[3]}});
            }
            write_text(opts.out, dump(arr));
        } else {
            write_text(opts.out,
                       xduct::format_csv({"power_w", "n_p", "c_eo", "eta_eo"}, rows));
        }
        return 0;
    }

    const double p_w = have_w ? power_w : xduct::dbm_to_watt(power_dbm);
    xduct::eo::EoOperatingPoint pt{card, p_w, detuning_hz, {}};

    if (!probe_sweep.empty()) {
        const auto grid = parse_sweep(probe_sweep).grid();
        pt.probe_detuning_hz =
            Eigen::Map<const Eigen::ArrayXd>(grid.data(), static_cast<Eigen::Index>(grid.size()));
        const Eigen::ArrayXcd s = xduct::eo::transduction_spectrum(pt);
        std::vector<std::vector<double>> rows(grid.size());
        for (size_t i = 0; i < grid.size(); ++i) {
            rows[i] = {grid[i], std::norm(s(static_cast<Eigen::Index>(i)))};
        }
        write_text(opts.out, xduct::format_csv({"detuning_hz", "mag2"}, rows));
        return 0;
    }

    json j{{"card", card.label},
           {"power_w", p_w},
           {"power_dbm", xduct::watt_to_dbm(p_w)},
           {"microwave_detuning_hz", detuning_hz},
           {"n_p", xduct::eo::pump_photon_number(pt)},
           {"c_eo", xduct::eo::cooperativity(pt)},
           {"eta_eo", xduct::eo::on_chip_efficiency(pt)},
           {"matched_pump_power_w", xduct::eo::matched_pump_power(card)}};
    write_text(opts.out, dump(j));
    return 0;
}

int run_m2m_scatter(const std::string& params_path, const std::string& omega_sweep,
                    double g_override, double eps_override, bool have_g, bool have_eps,
                    double set_c, bool have_c, const CommonOpts& opts) {
    xduct::mm::MmParams params = load_mm_params(params_path);
    if (have_g) {
        params.g_hz = g_override;
    }
    if (have_c) {
        params.g_hz = std::sqrt(set_c * params.kappa_a() * params.kappa_b()) / 2.0;
    }
    if (have_eps) {
        params.eps_hz = eps_override;
    }
    params.validate();

    const auto st = xduct::mm::stability(params);
    const auto grid = parse_sweep(omega_sweep).grid();
    std::vector<std::vector<double>> rows(grid.size());
    if (st.stable) {
        const xduct::mm::DoubledSystem sys = xduct::mm::build_doubled_system(params);
        parallel_for(grid.size(), [&](size_t i) {
            const Eigen::Matrix4cd s = xduct::mm::scattering_matrix(sys, grid[i]);
            const double hi = std::abs(s(1, 1)) + std::abs(s(1, 3));
            const double lo = std::abs(std::abs(s(1, 1)) - std::abs(s(1, 3)));
            rows[i] = {grid[i], std::norm(s(1, 0)), hi * hi, lo * lo, 1.0};
        });
    } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (size_t i = 0; i < grid.size(); ++i) {
            rows[i] = {grid[i], nan, nan, nan, 0.0};
        }
    }
    write_text(opts.out,
               xduct::format_csv(
                   {"omega_hz", "s_ba_mag2", "s_bb_gain_max", "s_bb_gain_min", "stable"}, rows));
    if (!st.stable) {
        std::cerr << "m2m-scatter: system unstable (max Re eigenvalue = " << st.max_real_part_hz
                  << " Hz)\n";
        return 2;
    }
    return 0;
}

int run_plan(double target_hz, const std::string& comb_path, const std::string& m2o_path,
             const CommonOpts& opts) {
    const auto comb = xduct::cascade::load_comb_model(comb_path);
    const auto m2o = xduct::flux::load_flux_model(m2o_path);
    const auto plan = xduct::cascade::plan_match(target_hz, comb, m2o);
    write_text(opts.out, xduct::cascade::serialize_plan(plan));
    return 0;
}

int run_coverage(const std::string& band, const std::string& comb_path,
                 const std::string& m2o_path, bool signal_only, const CommonOpts& opts) {
    double lo = 0.0;
    double hi = 0.0;
    char sep = 0;
    std::istringstream is(band);
    if (!(is >> lo >> sep >> hi) || sep != ':' || !is.eof()) {
        throw xduct::validation_error("coverage: --band must be lo:hi, got '" + band + "'");
    }
    const auto comb = xduct::cascade::load_comb_model(comb_path);
    const auto m2o = xduct::flux::load_flux_model(m2o_path);
    const auto cov = xduct::cascade::coverage(lo, hi, comb, m2o, !signal_only);
    json gaps = json::array();
    for (const auto& g : cov.gaps) {
        gaps.push_back(json::array({g.first, g.second}));
    }
    write_text(opts.out, dump(json{{"band_lo_hz", lo},
                                   {"band_hi_hz", hi},
                                   {"fraction", cov.fraction},
                                   {"idler_gated", !signal_only},
                                   {"gaps", gaps}}));
    return 0;
}

int run_schedule(const std::string& kind, double delay_us, double period_us, double window_us,
                 double lead_us, double drive_us, const CommonOpts& opts) {
    xduct::cascade::ScheduleOverrides o;
    o.delay_s = delay_us * 1e-6;
    o.period_s = period_us * 1e-6;
    o.window_s = window_us * 1e-6;
    o.pump_lead_s = lead_us * 1e-6;
    o.drive_s = drive_us * 1e-6;
    const auto k = kind == "transduction" ? xduct::cascade::ScheduleKind::transduction
                                          : xduct::cascade::ScheduleKind::qubit_readout;
    const auto sched = xduct::cascade::pulse_schedule(k, o);
    std::ostringstream os;
    os << "channel,start_s,duration_s\n";
    char buf[64];
    for (const auto& e : sched.events) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g", e.start_s, e.duration_s);
        os << xduct::cascade::channel_name(e.channel) << "," << buf << "\n";
    }
    write_text(opts.out, os.str());
    return 0;
}

int run_fit_flux(const std::string& in_path, double b_max_mt, const CommonOpts& opts) {
    const xduct::CsvTable table = xduct::read_csv(in_path);
    const auto b = table.col("b_mT");
    const auto f = table.col("f_hz");
    std::vector<std::pair<double, double>> points;
    for (size_t i = 0; i < b.size(); ++i) {
        points.emplace_back(b[i], f[i]);
    }
    const auto fit = xduct::flux::fit_flux_quadratic(points, b_max_mt);
    write_text(opts.out, xduct::flux::serialize_flux_fit(fit));
    return 0;
}

int run_fit_snr(const std::string& in_path, double n_hemt, double eta_min,
                const CommonOpts& opts) {
    const xduct::CsvTable table = xduct::read_csv(in_path);
    const auto g_db = table.col("gain_db");
    const auto s_db = table.col("delta_snr_db");
    std::vector<std::pair<double, double>> points;
    for (size_t i = 0; i < g_db.size(); ++i) {
        points.emplace_back(xduct::db_to_linear(g_db[i]), xduct::db_to_linear(s_db[i]));
    }
    const auto fit = xduct::mm::fit_snr_curve(points, n_hemt, eta_min);
    json j{{"p", fit.p},
           {"p_stderr", fit.p_stderr},
           {"n_hemt", n_hemt},
           {"asymptotic_delta_snr", (0.5 + n_hemt) / fit.p},
           {"asymptotic_delta_snr_db", xduct::linear_to_db((0.5 + n_hemt) / fit.p)}};
    if (fit.has_bound) {
        j["eta_min"] = eta_min;
        j["n_add_bound"] = fit.n_add_bound;
    }
    write_text(opts.out, dump(j));
    return 0;
}

int run_fit_noise(const std::string& in_path, double reflection, const CommonOpts& opts) {
    const auto sweep = xduct::calib::load_noise_sweep(in_path);
    const auto fit = xduct::calib::vts_fit(sweep, reflection);
    write_text(opts.out, dump(json{{"gain", fit.gain},
                                   {"gain_db", xduct::linear_to_db(fit.gain)},
                                   {"n_amp", fit.n_amp},
                                   {"gain_stderr", fit.gain_stderr},
                                   {"n_amp_stderr", fit.n_amp_stderr}}));
    return 0;
}

int run_fit_qubit(const std::string& kind, const std::string& in_path, const CommonOpts& opts) {
    json j;
    if (kind == "t1") {
        const auto tr = xduct::calib::load_coherence_trace(in_path, xduct::calib::CoherenceKind::t1);
        const auto fit = xduct::calib::fit_t1(tr);
        j = json{{"kind", "t1"},
                 {"params", {{"t1_s", fit.t1_s}, {"amplitude", fit.amplitude}, {"offset", fit.offset}}},
                 {"stderr",
                  {{"t1_s", fit.t1_stderr},
                   {"amplitude", fit.amplitude_stderr},
                   {"offset", fit.offset_stderr}}},
                 {"chi2_reduced", fit.chi2_reduced}};
    } else if (kind == "rabi") {
        const auto tr =
            xduct::calib::load_coherence_trace(in_path, xduct::calib::CoherenceKind::rabi);
        const auto fit = xduct::calib::fit_rabi(tr);
        j = json{{"kind", "rabi"},
                 {"params",
                  {{"omega_hz", fit.omega_hz},
                   {"tau_s", fit.tau_s},
                   {"amplitude", fit.amplitude},
                   {"phase_rad", fit.phase_rad},
                   {"offset", fit.offset}}},
                 {"stderr",
                  {{"omega_hz", fit.omega_stderr},
                   {"tau_s", fit.tau_stderr},
                   {"amplitude", fit.amplitude_stderr},
                   {"phase_rad", fit.phase_stderr},
                   {"offset", fit.offset_stderr}}},
                 {"chi2_reduced", fit.chi2_reduced},
                 {"nyquist_hz", fit.nyquist_hz}};
    } else if (kind == "ramsey") {
        const auto tr =
            xduct::calib::load_coherence_trace(in_path, xduct::calib::CoherenceKind::ramsey);
        const auto fit = xduct::calib::fit_ramsey(tr);
        j = json{{"kind", "ramsey"},
                 {"params",
                  {{"t2_s", fit.t2_s},
                   {"detuning_hz", fit.detuning_hz},
                   {"amplitude", fit.amplitude},
                   {"phase_rad", fit.phase_rad},
                   {"offset", fit.offset}}},
                 {"stderr",
                  {{"t2_s", fit.t2_stderr},
                   {"detuning_hz", fit.detuning_stderr},
                   {"amplitude", fit.amplitude_stderr},
                   {"phase_rad", fit.phase_stderr},
                   {"offset", fit.offset_stderr}}},
                 {"chi2_reduced", fit.chi2_reduced},
                 {"oscillatory", fit.oscillatory}};
    } else {
        throw xduct::validation_error("fit-qubit: --kind must be rabi, t1, or ramsey");
    }
    write_text(opts.out, dump(j));
    return 0;
}

int run_chain(double eta_mo, double eta_mm, double n_add_mm, double n_add_mo, bool have_noise,
              const CommonOpts& opts) {
    json j{{"eta_mo", eta_mo},
           {"eta_mm", eta_mm},
           {"eta", xduct::cascade::chain_efficiency(eta_mo, eta_mm)}};
    if (have_noise) {
        j["n_add_mm"] = n_add_mm;
        j["n_add_mo"] = n_add_mo;
        j["n_added_input_referred"] =
            xduct::cascade::chain_added_noise(n_add_mm, n_add_mo, eta_mm);
        j["note"] = "input-referred cascade noise is a model extension beyond the "
                    "independently measured stage efficiencies";
    }
    write_text(opts.out, dump(j));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"xduct: cascaded microwave-to-microwave / microwave-to-optical "
                 "transduction chain simulator and calibration toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;

    // m2o-efficiency
    auto* m2o_cmd = app.add_subcommand("m2o-efficiency",
                                       "Electro-optic stage efficiency vs pump power or probe detuning");
    std::string card_path;
    double power_dbm = 0.0;
    double power_w = 0.0;
    std::string power_sweep;
    std::string probe_sweep;
    double detuning_hz = 0.0;
    m2o_cmd->add_option("--card", card_path, "Device card JSON")->required();
    auto* opt_dbm = m2o_cmd->add_option("--power-dbm", power_dbm, "On-chip pump power, dBm");
    auto* opt_w = m2o_cmd->add_option("--power-w", power_w, "On-chip pump power, W");
    m2o_cmd->add_option("--power-sweep", power_sweep, "Power sweep start:stop:step in W");
    m2o_cmd->add_option("--detuning-hz", detuning_hz,
                        "Triple-resonance mismatch w_m - (w+ - w-), Hz");
    m2o_cmd->add_option("--probe-sweep", probe_sweep,
                        "Probe detuning sweep start:stop:step in Hz (emits a spectrum)");
    add_common(m2o_cmd, &opts);

    // m2m-scatter
    auto* mm_cmd = app.add_subcommand("m2m-scatter",
                                      "Two-mode converter scattering, gain, and stability vs probe frequency");
    std::string mm_params_path;
    std::string omega_sweep;
    double g_override = 0.0;
    double eps_override = 0.0;
    double set_c = 0.0;
    mm_cmd->add_option("--params", mm_params_path, "MM parameter JSON")->required();
    mm_cmd->add_option("--sweep", omega_sweep, "Probe sweep start:stop:step in Hz")->required();
    auto* opt_g = mm_cmd->add_option("--g-hz", g_override, "Override conversion rate g, Hz");
    auto* opt_eps = mm_cmd->add_option("--eps-hz", eps_override, "Override parametric strength, Hz");
    auto* opt_c = mm_cmd->add_option("--set-c", set_c, "Choose g for a target cooperativity");
    opt_c->excludes(opt_g);
    add_common(mm_cmd, &opts);

    // plan
    auto* plan_cmd = app.add_subcommand("plan", "Deterministic frequency-matching plan");
    double target_hz = 0.0;
    std::string comb_path;
    std::string m2o_path;
    plan_cmd->add_option("--target-hz", target_hz, "Target signal frequency, Hz")->required();
    plan_cmd->add_option("--comb", comb_path, "Comb model JSON")->required();
    plan_cmd->add_option("--m2o", m2o_path, "M2O flux-tune model JSON")->required();
    add_common(plan_cmd, &opts);

    // coverage
    auto* cov_cmd = app.add_subcommand("coverage", "Spectral coverage of a band");
    std::string band;
    bool signal_only = false;
    cov_cmd->add_option("--band", band, "Band lo:hi in Hz")->required();
    cov_cmd->add_option("--comb", comb_path, "Comb model JSON")->required();
    cov_cmd->add_option("--m2o", m2o_path, "M2O flux-tune model JSON")->required();
    cov_cmd->add_flag("--signal-only", signal_only,
                      "Ignore the idler gate (signal-interval arithmetic only)");
    add_common(cov_cmd, &opts);

    // schedule
    auto* sched_cmd = app.add_subcommand("schedule", "Pulse schedule presets");
    std::string kind = "transduction";
    double delay_us = 0.0;
    double period_us = 1000.0;
    double window_us = 4.0;
    double lead_us = 2.0;
    double drive_us = 0.5;
    sched_cmd->add_option("--kind", kind, "transduction or qubit-readout")
        ->check(CLI::IsMember({"transduction", "qubit-readout"}));
    sched_cmd->add_option("--delay-us", delay_us, "Gap between drive end and readout start, us");
    sched_cmd->add_option("--period-us", period_us, "Repetition period, us");
    sched_cmd->add_option("--window-us", window_us, "Measurement window, us");
    sched_cmd->add_option("--lead-us", lead_us, "Pump lead before the window, us");
    sched_cmd->add_option("--drive-us", drive_us, "Qubit drive length, us");
    add_common(sched_cmd, &opts);

    // fit-flux
    auto* fflux_cmd = app.add_subcommand("fit-flux", "Quadratic flux-tuning fit from b_mT,f_hz CSV");
    std::string in_path;
    double b_max_mt = 0.0;
    fflux_cmd->add_option("--in", in_path, "Input CSV with header b_mT,f_hz")->required();
    fflux_cmd->add_option("--b-max-mt", b_max_mt, "Usable bias limit for the fitted model, mT");
    add_common(fflux_cmd, &opts);

    // fit-snr
    auto* fsnr_cmd = app.add_subcommand("fit-snr", "SNR-enhancement fit from gain_db,delta_snr_db CSV");
    double n_hemt = 10.9;
    double eta_min = 0.0;
    fsnr_cmd->add_option("--in", in_path, "Input CSV with header gain_db,delta_snr_db")->required();
    fsnr_cmd->add_option("--n-hemt", n_hemt, "Receiver added noise in quanta")->required();
    fsnr_cmd->add_option("--eta-min", eta_min, "Lower bound on chain transmission for the n_add bound");
    add_common(fsnr_cmd, &opts);

    // fit-noise
    auto* fnoise_cmd = app.add_subcommand("fit-noise", "VTS gain/added-noise fit from n_ex,s_out CSV");
    double reflection = 1.0;
    fnoise_cmd->add_option("--in", in_path, "Input CSV with header n_ex,s_out")->required();
    fnoise_cmd->add_option("--reflection", reflection, "Reflection at the operating point, (0, 1]");
    add_common(fnoise_cmd, &opts);

    // fit-qubit
    auto* fq_cmd = app.add_subcommand("fit-qubit", "Coherence-curve fits from time_s,population CSV");
    std::string fq_kind;
    fq_cmd->add_option("--kind", fq_kind, "rabi, t1, or ramsey")
        ->required()
        ->check(CLI::IsMember({"rabi", "t1", "ramsey"}));
    fq_cmd->add_option("--in", in_path, "Input CSV with header time_s,population")->required();
    add_common(fq_cmd, &opts);

    // chain
    auto* chain_cmd = app.add_subcommand("chain", "Compose cascaded efficiency and added noise");
    double eta_mo = 0.0;
    double eta_mm = 0.0;
    double n_add_mm = 0.0;
    double n_add_mo = 0.0;
    chain_cmd->add_option("--eta-mo", eta_mo, "M2O stage efficiency")->required();
    chain_cmd->add_option("--eta-mm", eta_mm, "M2M stage efficiency")->required();
    auto* opt_nmm = chain_cmd->add_option("--n-add-mm", n_add_mm, "M2M added noise, quanta");
    auto* opt_nmo = chain_cmd->add_option("--n-add-mo", n_add_mo, "M2O added noise, quanta");
    opt_nmm->needs(opt_nmo);
    opt_nmo->needs(opt_nmm);
    add_common(chain_cmd, &opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // help goes to stdout, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (m2o_cmd->parsed()) {
            return run_m2o_efficiency(card_path, power_dbm, power_w, opt_dbm->count() > 0,
                                      opt_w->count() > 0, power_sweep, detuning_hz, probe_sweep,
                                      opts);
        }
        if (mm_cmd->parsed()) {
            return run_m2m_scatter(mm_params_path, omega_sweep, g_override, eps_override,
                                   opt_g->count() > 0, opt_eps->count() > 0, set_c,
                                   opt_c->count() > 0, opts);
        }
        if (plan_cmd->parsed()) {
            return run_plan(target_hz, comb_path, m2o_path, opts);
        }
        if (cov_cmd->parsed()) {
            return run_coverage(band, comb_path, m2o_path, signal_only, opts);
        }
        if (sched_cmd->parsed()) {
            return run_schedule(kind, delay_us, period_us, window_us, lead_us, drive_us, opts);
        }
        if (fflux_cmd->parsed()) {
            return run_fit_flux(in_path, b_max_mt, opts);
        }
        if (fsnr_cmd->parsed()) {
            return run_fit_snr(in_path, n_hemt, eta_min, opts);
        }
        if (fnoise_cmd->parsed()) {
            return run_fit_noise(in_path, reflection, opts);
        }
        if (fq_cmd->parsed()) {
            return run_fit_qubit(fq_kind, in_path, opts);
        }
        if (chain_cmd->parsed()) {
            return run_chain(eta_mo, eta_mm, n_add_mm, n_add_mo, opt_nmm->count() > 0, opts);
        }
    } catch (const xduct::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const xduct::validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
