#include "xduct/calib_fit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "xduct/csv.hpp"
#include "xduct/errors.hpp"
#include "xduct/nlls.hpp"

namespace xduct::calib {

namespace {

double median(std::vector<double> v) {
    const size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double hi = v[n / 2];
    if (n % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
        return 0.5 * (hi + v[n / 2 - 1]);
    }
    return hi;
}

// Peak inside the window from the cross traces, background outside it.
double window_peak(const Trace& t, double lo, double hi) {
    double pk = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < t.freq_hz.size(); ++i) {
        if (t.freq_hz(i) >= lo && t.freq_hz(i) <= hi) {
            pk = std::max(pk, t.power(i));
        }
    }
    if (!std::isfinite(pk)) {
        throw validation_error("extract_efficiency: no samples inside the resonance window");
    }
    return pk;
}

double background(const Trace& t, double lo, double hi) {
    std::vector<double> out;
    for (Eigen::Index i = 0; i < t.freq_hz.size(); ++i) {
        if (t.freq_hz(i) < lo || t.freq_hz(i) > hi) {
            out.push_back(t.power(i));
        }
    }
    if (out.empty()) {
        throw validation_error("extract_efficiency: no samples outside the resonance window");
    }
    return median(std::move(out));
}

struct Periodogram {
    double freq_hz = 0.0;
    double amplitude = 0.0;
    double phase_rad = 0.0;
    double power = 0.0;
};

// Discrete-spectrum peak of mean-subtracted data on the actual time stamps;
// frequency resolution 1/span up to the median-spacing Nyquist limit.
Periodogram spectral_peak(const std::vector<double>& t, const std::vector<double>& y_ms) {
    const size_t n = t.size();
    const double span = t.back() - t.front();
    std::vector<double> dt(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
        dt[i] = t[i + 1] - t[i];
    }
    const double nyquist = 0.5 / median(dt);
    Periodogram best;
    for (int k = 1;; ++k) {
        const double f = k / span;
        if (f > nyquist) {
            break;
        }
        std::complex<double> acc = 0.0;
        for (size_t i = 0; i < n; ++i) {
            acc += y_ms[i] * std::exp(std::complex<double>(0.0, -2.0 * M_PI * f * t[i]));
        }
        const double p = std::norm(acc);
        if (p > best.power) {
            best = Periodogram{f, 2.0 * std::abs(acc) / static_cast<double>(n),
                               std::arg(acc), p};
        }
    }
    return best;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

void TraceSet::validate() const {
    const Eigen::ArrayXd& axis = s_oo.freq_hz;
    for (const Trace* t : {&s_oo, &s_oe, &s_eo, &s_ee}) {
        if (t->freq_hz.size() != t->power.size() || t->freq_hz.size() == 0) {
            throw validation_error("trace set: empty or ragged trace");
        }
        if (t->freq_hz.size() != axis.size() || (t->freq_hz != axis).any()) {
            throw validation_error("trace set: traces must share one frequency axis");
        }
    }
    if (window_lo_hz >= window_hi_hz) {
        throw validation_error("trace set: empty resonance window");
    }
    if (window_lo_hz < axis.minCoeff() || window_hi_hz > axis.maxCoeff()) {
        throw validation_error("trace set: window outside the frequency axis span");
    }
}

EfficiencyResult extract_efficiency(const TraceSet& traces) {
    traces.validate();
    EfficiencyResult r;
    r.s_oe_pk = window_peak(traces.s_oe, traces.window_lo_hz, traces.window_hi_hz);
    r.s_eo_pk = window_peak(traces.s_eo, traces.window_lo_hz, traces.window_hi_hz);
    r.s_oo_bg = background(traces.s_oo, traces.window_lo_hz, traces.window_hi_hz);
    r.s_ee_bg = background(traces.s_ee, traces.window_lo_hz, traces.window_hi_hz);
    if (r.s_oo_bg <= 0.0 || r.s_ee_bg <= 0.0) {
        throw validation_error("extract_efficiency: zero through-trace background");
    }
    r.eta = (r.s_oe_pk * r.s_eo_pk) / (r.s_oo_bg * r.s_ee_bg);
    return r;
}

VtsFitResult vts_fit(const NoiseSweep& sweep, double reflection) {
    if (reflection <= 0.0 || reflection > 1.0) {
        throw validation_error("vts_fit: reflection must be in (0, 1]");
    }
    const auto n = static_cast<Eigen::Index>(sweep.points.size());
    if (n < 2) {
        throw validation_error("vts_fit: need >= 2 points");
    }
    double lo = sweep.points.front().first;
    double hi = lo;
    for (const auto& [x, y] : sweep.points) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (lo == hi) {
        throw validation_error("vts_fit: rank-deficient sweep, need >= 2 distinct n_ex values");
    }

    // OLS for s_out = alpha + beta n_ex, then G = beta/R, n_amp = alpha/G.
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = sweep.points[static_cast<size_t>(i)].first;
        y(i) = sweep.points[static_cast<size_t>(i)].second;
    }
    const Eigen::Vector2d p = design.colPivHouseholderQr().solve(y);
    const double alpha = p(0);
    const double beta = p(1);
    const double y_scale = y.cwiseAbs().maxCoeff();
    if (std::abs(beta) * (hi - lo) <= 1e-12 * std::max(y_scale, 1e-300)) {
        throw numeric_error("vts_fit: zero slope, gain degenerate and n_amp undefined");
    }

    VtsFitResult out;
    out.gain = beta / reflection;
    out.n_amp = alpha / out.gain;
    const double dof = static_cast<double>(n) - 2.0;
    if (dof > 0.0) {
        const double sigma2 = (y - design * p).squaredNorm() / dof;
        const Eigen::Matrix2d cov = sigma2 * (design.transpose() * design).inverse();
        out.gain_stderr = std::sqrt(std::max(cov(1, 1), 0.0)) / reflection;
        // n_amp = alpha R / beta
        const double da = reflection / beta;
        const double db = -alpha * reflection / (beta * beta);
        const double var =
            da * da * cov(0, 0) + db * db * cov(1, 1) + 2.0 * da * db * cov(0, 1);
        out.n_amp_stderr = std::sqrt(std::max(var, 0.0));
    }
    return out;
}

Eigen::ArrayXd device_noise_spectrum(const Eigen::ArrayXd& reflection, double n_en,
                                     double n_ex) {
    if ((reflection < 0.0).any() || (reflection > 1.0).any()) {
        throw validation_error("device_noise_spectrum: reflection must be within [0, 1]");
    }
    if (n_en < 0.0 || n_ex < 0.0) {
        throw validation_error("device_noise_spectrum: occupancies must be >= 0");
    }
    return reflection * n_ex + (1.0 - reflection) * n_en;
}

double mode_occupancy(double kappa_in_hz, double kappa_ex_hz, double n_en, double n_ex) {
    const double total = kappa_in_hz + kappa_ex_hz;
    if (total <= 0.0) {
        throw validation_error("mode_occupancy: total coupling rate must be > 0");
    }
    if (kappa_in_hz < 0.0 || kappa_ex_hz < 0.0) {
        throw validation_error("mode_occupancy: rates must be >= 0");
    }
    return (kappa_in_hz * n_en + kappa_ex_hz * n_ex) / total;
}

void CoherenceTrace::validate() const {
    if (time_s.size() != population.size()) {
        throw validation_error("coherence trace: ragged columns");
    }
    for (size_t i = 0; i + 1 < time_s.size(); ++i) {
        if (!(time_s[i + 1] > time_s[i])) {
            throw validation_error("coherence trace: times must be strictly increasing");
        }
    }
    for (const double p : population) {
        if (!std::isfinite(p)) {
            throw validation_error("coherence trace: populations must be finite");
        }
    }
}

T1Fit fit_t1(const CoherenceTrace& trace) {
    trace.validate();
    if (trace.kind != CoherenceKind::t1) {
        throw validation_error("fit_t1: trace kind must be t1");
    }
    const size_t n = trace.time_s.size();
    if (n < 4) {
        throw validation_error("fit_t1: need >= 4 points");
    }
    const auto& t = trace.time_s;
    const auto& y = trace.population;

    // Init: offset from the tail, amplitude from the head, T1 from the
    // 1/e crossing of a lightly smoothed trace.
    const size_t tail = std::max<size_t>(1, n / 10);
    double c0 = 0.0;
    for (size_t i = n - tail; i < n; ++i) {
        c0 += y[i];
    }
    c0 /= static_cast<double>(tail);
    const double a0 = y.front() - c0;
    const double scale = *std::max_element(y.begin(), y.end()) -
                         *std::min_element(y.begin(), y.end());
    if (std::abs(a0) < 1e-12 * std::max(scale, 1e-300) || scale == 0.0) {
        throw numeric_error("fit_t1: amplitude indistinguishable from zero (unidentifiable)");
    }
    const double target = c0 + a0 / M_E;
    double t1_0 = 0.5 * (t.back() - t.front());
    for (size_t i = 1; i + 1 < n; ++i) {
        const double smooth = (y[i - 1] + y[i] + y[i + 1]) / 3.0;
        if ((a0 > 0.0 && smooth <= target) || (a0 < 0.0 && smooth >= target)) {
            t1_0 = t[i] - t.front();
            break;
        }
    }
    if (t1_0 <= 0.0) {
        t1_0 = 0.5 * (t.back() - t.front());
    }

    auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(n));
        for (size_t i = 0; i < n; ++i) {
            r(static_cast<Eigen::Index>(i)) =
                t1_model(t[i], p(0), p(1), p(2)) - y[i];
        }
        return r;
    };
    Eigen::VectorXd init(3);
    init << t1_0, a0, c0;
    fit::NllsOptions opt;
    Eigen::VectorXd lower = Eigen::VectorXd::Constant(3, -std::numeric_limits<double>::infinity());
    lower(0) = 1e-300;  // decay constant stays positive
    opt.lower = lower;
    const fit::NllsResult res = fit::nlls(residual, init, opt);

    T1Fit out;
    out.t1_s = res.params(0);
    out.amplitude = res.params(1);
    out.offset = res.params(2);
    out.t1_stderr = res.stderrs(0);
    out.amplitude_stderr = res.stderrs(1);
    out.offset_stderr = res.stderrs(2);
    out.chi2_reduced = res.chi2_reduced;
    return out;
}

RabiFit fit_rabi(const CoherenceTrace& trace) {
    trace.validate();
    if (trace.kind != CoherenceKind::rabi) {
        throw validation_error("fit_rabi: trace kind must be rabi");
    }
    const size_t n = trace.time_s.size();
    if (n < 8) {
        throw validation_error("fit_rabi: need >= 8 points");
    }
    const auto& t = trace.time_s;
    const auto& y = trace.population;
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    std::vector<double> y_ms(n);
    double energy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        y_ms[i] = y[i] - mean;
        energy += y_ms[i] * y_ms[i];
    }
    if (energy <= 1e-24 * static_cast<double>(n) * std::max(mean * mean, 1.0)) {
        throw numeric_error("fit_rabi: no oscillation (flat trace)");
    }
    const Periodogram pk = spectral_peak(t, y_ms);
    if (pk.power <= 1e-12 * energy) {
        throw numeric_error("fit_rabi: no oscillation (spectral peak at dc)");
    }

    const double span = t.back() - t.front();
    auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(n));
        for (size_t i = 0; i < n; ++i) {
            r(static_cast<Eigen::Index>(i)) =
                rabi_model(t[i], p(0), p(1), p(2), p(3), p(4)) - y[i];
        }
        return r;
    };
    Eigen::VectorXd init(5);
    init << pk.freq_hz, span, pk.amplitude, pk.phase_rad, mean;
    fit::NllsOptions opt;
    Eigen::VectorXd lower = Eigen::VectorXd::Constant(5, -std::numeric_limits<double>::infinity());
    lower(0) = 0.0;
    lower(1) = 1e-300;
    opt.lower = lower;
    const fit::NllsResult res = fit::nlls(residual, init, opt);

    std::vector<double> dt(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
        dt[i] = t[i + 1] - t[i];
    }

    RabiFit out;
    out.omega_hz = res.params(0);
    out.tau_s = res.params(1);
    out.amplitude = res.params(2);
    out.phase_rad = res.params(3);
    out.offset = res.params(4);
    out.omega_stderr = res.stderrs(0);
    out.tau_stderr = res.stderrs(1);
    out.amplitude_stderr = res.stderrs(2);
    out.phase_stderr = res.stderrs(3);
    out.offset_stderr = res.stderrs(4);
    out.chi2_reduced = res.chi2_reduced;
    out.nyquist_hz = 0.5 / median(dt);
    return out;
}

RamseyFit fit_ramsey(const CoherenceTrace& trace) {
    trace.validate();
    if (trace.kind != CoherenceKind::ramsey) {
        throw validation_error("fit_ramsey: trace kind must be ramsey");
    }
    const size_t n = trace.time_s.size();
    if (n < 8) {
        throw validation_error("fit_ramsey: need >= 8 points");
    }
    const auto& t = trace.time_s;
    const auto& y = trace.population;

    // Route A: damped oscillation with the frequency seeded from the
    // discrete spectrum. Route B: bare exponential (delta = 0). Keep the
    // lower-residual route, preferring B on ties so that delta = 0 data
    // reproduces the plain decay fit.
    std::optional<fit::NllsResult> osc;
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    std::vector<double> y_ms(n);
    double energy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        y_ms[i] = y[i] - mean;
        energy += y_ms[i] * y_ms[i];
    }
    if (energy <= 0.0) {
        throw numeric_error("fit_ramsey: flat trace (unidentifiable)");
    }
    auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(n));
        for (size_t i = 0; i < n; ++i) {
            r(static_cast<Eigen::Index>(i)) =
                ramsey_model(t[i], p(0), p(1), p(2), p(3), p(4)) - y[i];
        }
        return r;
    };
    const Periodogram pk = spectral_peak(t, y_ms);
    if (pk.power > 1e-12 * energy) {
        const double span = t.back() - t.front();
        Eigen::VectorXd init(5);
        init << span, pk.freq_hz, pk.amplitude, pk.phase_rad, mean;
        fit::NllsOptions opt;
        Eigen::VectorXd lower =
            Eigen::VectorXd::Constant(5, -std::numeric_limits<double>::infinity());
        lower(0) = 1e-300;
        lower(1) = 0.0;
        opt.lower = lower;
        try {
            osc = fit::nlls(residual, init, opt);
        } catch (const numeric_error&) {
            // fall through to the exponential route
        }
    }

    std::optional<T1Fit> expo;
    try {
        CoherenceTrace as_t1 = trace;
        as_t1.kind = CoherenceKind::t1;
        expo = fit_t1(as_t1);
    } catch (const numeric_error&) {
        if (!osc) {
            throw;
        }
    }

    RamseyFit out;
    double exp_res2 = std::numeric_limits<double>::infinity();
    if (expo) {
        exp_res2 = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double r = t1_model(t[i], expo->t1_s, expo->amplitude, expo->offset) - y[i];
            exp_res2 += r * r;
        }
    }
    const double osc_res2 =
        osc ? osc->residual_norm * osc->residual_norm : std::numeric_limits<double>::infinity();
    if (expo && exp_res2 <= osc_res2 + 1e-9 * energy) {
        out.t2_s = expo->t1_s;
        out.detuning_hz = 0.0;
        out.amplitude = expo->amplitude;
        out.phase_rad = 0.0;
        out.offset = expo->offset;
        out.t2_stderr = expo->t1_stderr;
        out.amplitude_stderr = expo->amplitude_stderr;
        out.offset_stderr = expo->offset_stderr;
        out.chi2_reduced = expo->chi2_reduced;
        out.oscillatory = false;
        return out;
    }
    if (!osc) {
        throw non_convergence_error("fit_ramsey: neither fit route converged");
    }
    out.t2_s = osc->params(0);
    out.detuning_hz = osc->params(1);
    out.amplitude = osc->params(2);
    out.phase_rad = osc->params(3);
    out.offset = osc->params(4);
    out.t2_stderr = osc->stderrs(0);
    out.detuning_stderr = osc->stderrs(1);
    out.amplitude_stderr = osc->stderrs(2);
    out.phase_stderr = osc->stderrs(3);
    out.offset_stderr = osc->stderrs(4);
    out.chi2_reduced = osc->chi2_reduced;
    out.oscillatory = true;
    return out;
}

Trace load_trace(const std::string& path) {
    const CsvTable table = read_csv(path);
    Trace tr;
    const auto f = table.col("freq_hz");
    tr.freq_hz = Eigen::Map<const Eigen::ArrayXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    if (table.column("mag2") >= 0) {
        const auto p = table.col("mag2");
        tr.power = Eigen::Map<const Eigen::ArrayXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    } else if (table.column("re") >= 0 && table.column("im") >= 0) {
        const auto re = table.col("re");
        const auto im = table.col("im");
        tr.power.resize(static_cast<Eigen::Index>(re.size()));
        for (size_t i = 0; i < re.size(); ++i) {
            tr.power(static_cast<Eigen::Index>(i)) = re[i] * re[i] + im[i] * im[i];
        }
    } else {
        throw validation_error("trace csv: need 'mag2' or 're','im' columns in '" + path + "'");
    }
    return tr;
}

CoherenceTrace load_coherence_trace(const std::string& path, CoherenceKind kind) {
    const CsvTable table = read_csv(path);
    CoherenceTrace tr;
    tr.kind = kind;
    tr.time_s = table.col("time_s");
    tr.population = table.col("population");
    tr.validate();
    return tr;
}

NoiseSweep load_noise_sweep(const std::string& path) {
    const CsvTable table = read_csv(path);
    const auto x = table.col("n_ex");
    const auto y = table.col("s_out");
    NoiseSweep sweep;
    for (size_t i = 0; i < x.size(); ++i) {
        sweep.points.emplace_back(x[i], y[i]);
    }
    return sweep;
}

} // namespace xduct::calib
