#ifndef PURCELL_COMMANDS_HPP
#define PURCELL_COMMANDS_HPP

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "counting.hpp"
#include "csv.hpp"
#include "fit.hpp"
#include "liouville.hpp"
#include "protocol.hpp"
#include "qed.hpp"
#include "units.hpp"

namespace purcell {

struct NamedCsv {
    std::string name; // suggested file name
    std::string content;
};

struct CommandResult {
    std::string summary;
    std::vector<NamedCsv> csvs;
};

namespace detail {

inline std::string fmt(double v) { return format_number(v); }

inline double model_emission_rate(const SystemParams& p, const HilbertSpec& spec) {
    auto [model, state] = steady_state_adaptive(p, spec);
    return emission_rate(model, state);
}

} // namespace detail

// Solve for the drive strength that produces the requested steady-state
// emission rate. The rate grows with drive until saturation turns it over,
// so the search stays on the rising branch and reports an unreachable target
// instead of silently landing past the peak.
inline double calibrate_omega(const SystemParams& base, const HilbertSpec& spec, double target) {
    if (!(target > 0.0))
        throw std::invalid_argument("calibrate_omega: target rate must be > 0");
    SystemParams p = base;
    auto rate_at = [&](double om) {
        p.omega = om;
        return detail::model_emission_rate(p, spec);
    };

    double lo = 0.0, rate_lo = 0.0;
    double hi = 0.05 * base.gamma;
    double rate_hi = rate_at(hi);
    while (rate_hi < target) {
        if (rate_hi < rate_lo)
            throw std::runtime_error("calibrate_omega: target rate " + detail::fmt(target) +
                                     " /s exceeds the attainable maximum near " +
                                     detail::fmt(rate_lo) + " /s");
        lo = hi;
        rate_lo = rate_hi;
        hi *= 2.0;
        if (hi > 1e5 * base.gamma)
            throw std::runtime_error("calibrate_omega: search exceeded the drive range");
        rate_hi = rate_at(hi);
    }
    for (int i = 0; i < 60; ++i) {
        double mid = 0.5 * (lo + hi);
        if (rate_at(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Emission-rate table over the configured readout entries: calibrated or
// given drive, the model rate it produces, and the dead-time-corrected
// value of any observed detector rate.
inline CommandResult cmd_rates(const RunConfig& cfg) {
    cfg.system.validate();
    cfg.detector.validate();
    if (cfg.readouts.empty())
        throw std::runtime_error("rates: config defines no [readout.<name>] sections");

    std::ostringstream csv, text;
    csv << "name,duration_ns,omega_mhz,rc_mcps,detected_mcps,corrected_mcps\n";
    for (const ReadoutEntry& r : cfg.readouts) {
        SystemParams p = cfg.system;
        if (r.omega >= 0.0)
            p.omega = r.omega;
        else if (r.rc_target >= 0.0)
            p.omega = calibrate_omega(cfg.system, cfg.hilbert, r.rc_target);
        else
            throw std::runtime_error("rates: readout '" + r.name +
                                     "' sets neither omega nor rc_target");
        double rc = detail::model_emission_rate(p, cfg.hilbert);

        csv << r.name << ',' << detail::fmt(r.duration * 1e9) << ','
            << detail::fmt(rad_to_mhz(p.omega)) << ',' << detail::fmt(rc / 1e6) << ',';
        text << r.name << ": duration " << detail::fmt(r.duration * 1e9) << " ns, omega 2pi x "
             << detail::fmt(rad_to_mhz(p.omega)) << " MHz, emission rate " << detail::fmt(rc / 1e6)
             << " Mcps";
        if (r.detected_rate >= 0.0) {
            double corrected = dead_time_correct(r.detected_rate, cfg.detector.dead_time);
            csv << detail::fmt(r.detected_rate / 1e6) << ',' << detail::fmt(corrected / 1e6) << '\n';
            text << ", detected " << detail::fmt(r.detected_rate / 1e6)
                 << " Mcps -> corrected " << detail::fmt(corrected / 1e6) << " Mcps";
        } else {
            csv << ",\n";
        }
        text << '\n';
    }

    CooperativityReport coop = cooperativity(cfg.system);
    text << "cooperativity " << detail::fmt(coop.c_real) << ", enhancement "
         << detail::fmt(coop.enhancement) << '\n';
    return {text.str(), {{"rates.csv", csv.str()}}};
}

// Cavity output flux after exciting the atom with the drive off, plus a
// single-exponential fit over the post-transient window.
inline CommandResult cmd_decay(const RunConfig& cfg) {
    cfg.system.validate();
    SystemParams p = cfg.system;
    p.omega = 0.0;

    LindbladModel model = build_model(p, cfg.hilbert);
    CompositeState excited = CompositeState::pure(cfg.hilbert, 1, 0);

    const int n = cfg.decay.points;
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i)
        grid[i] = cfg.decay.horizon * i / (n - 1);
    std::vector<FluxPoint> curve = decay_curve(model, excited, grid);

    std::ostringstream csv;
    csv << "time_ns,flux\n";
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
        x[i] = curve[i].t;
        y[i] = curve[i].flux;
        csv << detail::fmt(curve[i].t * 1e9) << ',' << detail::fmt(curve[i].flux) << '\n';
    }

    FitResult fit = fit_exponential(x, y, cfg.decay.effective_window_start());
    CooperativityReport coop = cooperativity(p);

    std::ostringstream text;
    text << "fitted lifetime " << detail::fmt(fit.params[1] * 1e9) << " ns (fit window from "
         << detail::fmt(cfg.decay.effective_window_start() * 1e9) << " ns, converged "
         << (fit.converged ? "yes" : "no") << ")\n";
    text << "enhanced-lifetime estimate " << detail::fmt(coop.lifetime_enhanced * 1e9)
         << " ns, free-space lifetime " << detail::fmt(1e9 / (2.0 * p.gamma)) << " ns\n";
    return {text.str(), {{"decay.csv", csv.str()}}};
}

// Emission rate as the atomic detuning is swept across the drive-resonant
// cavity; the fitted width is compared with the enhanced-linewidth value.
inline CommandResult cmd_scan(const RunConfig& cfg) {
    cfg.system.validate();
    SystemParams p = cfg.system;
    if (!(p.omega > 0.0))
        p.omega = 0.1 * p.gamma; // weak probe when the config leaves the drive unset

    std::vector<double> detunings;
    double span = mhz_to_rad(cfg.scan.span_mhz);
    double step = mhz_to_rad(cfg.scan.step_mhz);
    for (double d = -span; d <= span + 0.5 * step; d += step)
        detunings.push_back(d);
    std::vector<LineshapePoint> pts = lineshape_scan(p, detunings);

    std::ostringstream csv;
    csv << "detuning_mhz,rate\n";
    std::vector<double> x(pts.size()), y(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        x[i] = pts[i].detuning;
        y[i] = pts[i].rate;
        csv << detail::fmt(rad_to_mhz(pts[i].detuning)) << ',' << detail::fmt(pts[i].rate) << '\n';
    }

    FitResult fit = fit_lorentzian(x, y);
    CooperativityReport coop = cooperativity(p);

    std::ostringstream text;
    text << "fitted FWHM 2pi x " << detail::fmt(rad_to_mhz(fit.params[2])) << " MHz (converged "
         << (fit.converged ? "yes" : "no") << ")\n";
    text << "enhanced linewidth 2pi x " << detail::fmt(rad_to_mhz(coop.fwhm_enhanced))
         << " MHz at cooperativity " << detail::fmt(coop.c_real) << '\n';
    return {text.str(), {{"scan.csv", csv.str()}}};
}

// Count histograms for bright and dark preparations of each readout window,
// with the threshold that minimizes the mean discrimination error.
inline CommandResult cmd_readout(const RunConfig& cfg) {
    cfg.system.validate();
    cfg.detector.validate();
    if (cfg.readouts.empty())
        throw std::runtime_error("readout: config defines no [readout.<name>] sections");

    CommandResult out;
    std::ostringstream text;
    for (const ReadoutEntry& r : cfg.readouts) {
        SystemParams p = cfg.system;
        if (r.omega >= 0.0)
            p.omega = r.omega;
        else if (r.rc_target >= 0.0)
            p.omega = calibrate_omega(cfg.system, cfg.hilbert, r.rc_target);
        else
            throw std::runtime_error("readout: readout '" + r.name +
                                     "' sets neither omega nor rc_target");
        double rc = detail::model_emission_rate(p, cfg.hilbert);

        ReadoutConfig rd;
        rd.duration = r.duration;
        rd.bright_rate = rc * cfg.detector.efficiency + cfg.detector.background_rate;
        rd.dark_rate = cfg.detector.background_rate;
        rd.depump_rate = r.depump_rate;

        CountHistogram dark = simulate_counts(rd, cfg.detector, AtomState::dark, cfg.run.n_trials,
                                              cfg.run.seed, cfg.run.workers);
        CountHistogram bright = simulate_counts(rd, cfg.detector, AtomState::bright,
                                                cfg.run.n_trials, cfg.run.seed + 1,
                                                cfg.run.workers);
        DiscriminationResult disc = optimize_threshold(dark, bright);

        out.csvs.push_back({r.name + "_dark.csv", to_csv(dark)});
        out.csvs.push_back({r.name + "_bright.csv", to_csv(bright)});
        text << r.name << ": bright " << detail::fmt(rd.bright_rate / 1e6) << " Mcps, dark "
             << detail::fmt(rd.dark_rate / 1e3) << " kcps, threshold N >= " << disc.threshold
             << ", dark error " << detail::fmt(disc.dark_error) << ", bright error "
             << detail::fmt(disc.bright_error) << ", infidelity " << detail::fmt(disc.infidelity)
             << '\n';
    }
    out.summary = text.str();
    return out;
}

// Mean preparation time against the number of pump/check segments, the best
// segment count, and a Monte Carlo cross-check at that choice.
inline CommandResult cmd_prep(const RunConfig& cfg) {
    PumpModel pump{cfg.pump_tau(), cfg.pump.r};
    pump.validate();
    cfg.protocol.validate();

    std::ostringstream csv;
    csv << "n_segments,mean_time_us,failure_prob\n";
    for (int n = 1; n <= cfg.n_max; ++n) {
        ProtocolConfig c = cfg.protocol;
        c.n_segments = n;
        ProtocolReport rep = protocol_report(pump, c);
        csv << n << ',' << detail::fmt(rep.mean_time * 1e6) << ','
            << detail::fmt(rep.failure_prob) << '\n';
    }

    SegmentChoice best = optimize_segments(pump, cfg.protocol.total_pump_time,
                                           cfg.protocol.readout_time, cfg.n_max,
                                           cfg.protocol.initial_state);
    ProtocolConfig best_cfg = cfg.protocol;
    best_cfg.n_segments = best.n_segments;
    ProtocolSample mc = simulate_protocol(pump, best_cfg, cfg.run.n_trials, cfg.run.seed);

    std::ostringstream text;
    text << "pump tau " << detail::fmt(pump.tau * 1e6) << " us, leakage r " << detail::fmt(pump.r)
         << '\n';
    text << "best n_segments " << best.n_segments << ": mean time "
         << detail::fmt(best.report.mean_time * 1e6) << " us, failure "
         << detail::fmt(best.report.failure_prob) << '\n';
    text << "monte carlo at best n: mean time " << detail::fmt(mc.mean_time * 1e6) << " +/- "
         << detail::fmt(mc.se_mean * 1e6) << " us, failure " << detail::fmt(mc.failure_hat)
         << '\n';
    return {text.str(), {{"prep.csv", csv.str()}}};
}

// Fit a user-supplied two-column CSV with one of the built-in models.
inline CommandResult cmd_fit(const std::string& path, const std::string& model,
                             double window_start) {
    XYData data = read_xy_csv_file(path);
    FitResult fit;
    std::vector<std::string> names;
    if (model == "exponential") {
        fit = fit_exponential(data.x, data.y, window_start);
        names = {"amplitude", "lifetime", "offset"};
    } else if (model == "lorentzian") {
        fit = fit_lorentzian(data.x, data.y);
        names = {"amplitude", "center", "fwhm", "offset"};
    } else {
        throw std::invalid_argument("fit: unknown model '" + model +
                                    "' (use exponential or lorentzian)");
    }

    std::ostringstream text, csv;
    csv << "parameter,value,uncertainty\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
        text << names[i] << " = " << detail::fmt(fit.params[i]) << " +/- "
             << detail::fmt(fit.uncertainties[i]) << '\n';
        csv << names[i] << ',' << detail::fmt(fit.params[i]) << ','
            << detail::fmt(fit.uncertainties[i]) << '\n';
    }
    text << "converged " << (fit.converged ? "yes" : "no") << " in " << fit.iterations
         << " iterations, residual norm " << detail::fmt(fit.residual_norm) << '\n';
    return {text.str(), {{"fit.csv", csv.str()}}};
}

} // namespace purcell

#endif
