#ifndef PURCELL_COUNTING_HPP
#define PURCELL_COUNTING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "csv.hpp"
#include "rng.hpp"

namespace purcell {

// Detection chain: collection/quantum efficiency folded into one number,
// non-paralyzable dead time, and uncorrelated background counts.
struct DetectorModel {
    double efficiency = 1.0;
    double dead_time = 0.0;       // seconds
    double background_rate = 0.0; // counts/s at the detector

    void validate() const {
        if (!(efficiency >= 0.0) || !(efficiency <= 1.0))
            throw std::invalid_argument("DetectorModel: efficiency must lie in [0, 1]");
        if (!(dead_time >= 0.0))
            throw std::invalid_argument("DetectorModel: dead_time must be >= 0");
        if (!(background_rate >= 0.0))
            throw std::invalid_argument("DetectorModel: background_rate must be >= 0");
    }
};

// One readout window. Rates are photon arrival rates at the detector input
// (efficiency already applied by the caller); depump_rate > 0 makes a bright
// atom fall dark at an exponentially distributed time.
struct ReadoutConfig {
    double duration = 0.0;    // seconds
    double bright_rate = 0.0; // counts/s
    double dark_rate = 0.0;   // counts/s
    double depump_rate = 0.0; // 1/s, 0 disables depumping

    void validate() const {
        if (!(duration > 0.0))
            throw std::invalid_argument("ReadoutConfig: duration must be > 0");
        if (!(bright_rate >= 0.0) || !(dark_rate >= 0.0) || !(depump_rate >= 0.0))
            throw std::invalid_argument("ReadoutConfig: rates must be >= 0");
    }
};

enum class AtomState { bright, dark };

struct CountHistogram {
    std::vector<double> p; // p[n] = P(N = n)
    std::uint64_t n_trials = 0;

    int max_count() const { return static_cast<int>(p.size()) - 1; }
};

namespace detail {

// Walk exponential gaps through the window, dropping arrivals inside the
// dead-time shadow of the previous registered count.
inline int count_one_trial(double rate, double duration, double dead_time, Xoshiro256& rng) {
    if (rate <= 0.0) return 0;
    int n = 0;
    double t = 0.0;
    for (;;) {
        t += rng.exponential(rate);
        if (t >= duration) break;
        ++n;
        t += dead_time;
    }
    return n;
}

// Bright trial with depumping: signal photons arrive at (bright - dark) until
// the depump time, background at dark_rate throughout; the merged train then
// passes the dead-time filter. Signal arrivals are generated first, so the
// stream layout is deterministic for a given substream.
inline int count_one_trial_depump(const ReadoutConfig& cfg, double dead_time, Xoshiro256& rng) {
    double t_dark = rng.exponential(cfg.depump_rate);
    double signal_until = std::min(t_dark, cfg.duration);
    double signal_rate = cfg.bright_rate - cfg.dark_rate;

    std::vector<double> arrivals;
    if (signal_rate > 0.0) {
        double t = 0.0;
        for (;;) {
            t += rng.exponential(signal_rate);
            if (t >= signal_until) break;
            arrivals.push_back(t);
        }
    }
    if (cfg.dark_rate > 0.0) {
        double t = 0.0;
        for (;;) {
            t += rng.exponential(cfg.dark_rate);
            if (t >= cfg.duration) break;
            arrivals.push_back(t);
        }
    }
    std::sort(arrivals.begin(), arrivals.end());

    int n = 0;
    double blocked_until = -1.0;
    for (double t : arrivals) {
        if (t < blocked_until) continue;
        ++n;
        blocked_until = t + dead_time;
    }
    return n;
}

inline void tally(std::vector<std::uint64_t>& counts, int n) {
    if (n >= static_cast<int>(counts.size()))
        counts.resize(n + 1, 0);
    ++counts[n];
}

} // namespace detail

// Monte Carlo count histogram. Each trial draws from its own counter-derived
// substream, so the result depends on (seed, n_trials) but not on workers.
inline CountHistogram simulate_counts(const ReadoutConfig& cfg, const DetectorModel& det,
                                      AtomState state, std::uint64_t n_trials,
                                      std::uint64_t seed, int workers = 1) {
    cfg.validate();
    det.validate();
    if (n_trials == 0)
        throw std::invalid_argument("simulate_counts: n_trials must be > 0");
    if (workers < 1)
        throw std::invalid_argument("simulate_counts: workers must be >= 1");

    bool depump = state == AtomState::bright && cfg.depump_rate > 0.0;
    if (depump && cfg.bright_rate < cfg.dark_rate)
        throw std::invalid_argument("simulate_counts: depumping needs bright_rate >= dark_rate");
    double flat_rate = state == AtomState::bright ? cfg.bright_rate : cfg.dark_rate;

    auto run_chunk = [&](std::uint64_t lo, std::uint64_t hi, std::vector<std::uint64_t>& counts) {
        for (std::uint64_t i = lo; i < hi; ++i) {
            Xoshiro256 rng = trial_stream(seed, i);
            int n = depump ? detail::count_one_trial_depump(cfg, det.dead_time, rng)
                           : detail::count_one_trial(flat_rate, cfg.duration, det.dead_time, rng);
            detail::tally(counts, n);
        }
    };

    std::vector<std::vector<std::uint64_t>> partials(workers);
    if (workers == 1) {
        run_chunk(0, n_trials, partials[0]);
    } else {
        std::vector<std::thread> pool;
        std::uint64_t chunk = (n_trials + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            std::uint64_t lo = w * chunk;
            std::uint64_t hi = std::min<std::uint64_t>(lo + chunk, n_trials);
            if (lo >= hi) break;
            pool.emplace_back(run_chunk, lo, hi, std::ref(partials[w]));
        }
        for (auto& th : pool) th.join();
    }

    std::size_t top = 0;
    for (const auto& c : partials) top = std::max(top, c.size());
    CountHistogram h;
    h.n_trials = n_trials;
    h.p.assign(std::max<std::size_t>(top, 1), 0.0);
    for (const auto& c : partials)
        for (std::size_t n = 0; n < c.size(); ++n)
            h.p[n] += static_cast<double>(c[n]);
    for (double& v : h.p) v /= static_cast<double>(n_trials);
    return h;
}

// Dark histogram in closed form. With dark_rate * dead_time small the
// dead-time filter is inert and the counts are Poisson; the residual tail
// past n_max is folded into the top bin.
inline CountHistogram analytic_dark_histogram(const ReadoutConfig& cfg, const DetectorModel& det,
                                              int n_max = 64) {
    cfg.validate();
    det.validate();
    if (n_max < 1)
        throw std::invalid_argument("analytic_dark_histogram: n_max must be >= 1");
    if (cfg.dark_rate * det.dead_time > 0.01)
        throw std::invalid_argument(
            "analytic_dark_histogram: dead time is not negligible at this dark rate");

    double mu = cfg.dark_rate * cfg.duration;
    CountHistogram h;
    h.n_trials = 0;
    h.p.assign(n_max + 1, 0.0);
    double term = std::exp(-mu);
    double cum = 0.0;
    for (int n = 0; n < n_max; ++n) {
        h.p[n] = term;
        cum += term;
        term *= mu / (n + 1);
    }
    h.p[n_max] = std::max(0.0, 1.0 - cum);
    return h;
}

// Invert the non-paralyzable dead-time loss: true = observed/(1 - observed*tau).
inline double dead_time_correct(double observed_rate, double dead_time) {
    if (!(observed_rate >= 0.0) || !(dead_time >= 0.0))
        throw std::invalid_argument("dead_time_correct: rate and dead time must be >= 0");
    double loss = observed_rate * dead_time;
    if (loss >= 1.0)
        throw std::domain_error("dead_time_correct: observed rate saturates the dead time");
    return observed_rate / (1.0 - loss);
}

struct DiscriminationResult {
    int threshold = 0;       // declare bright when N >= threshold
    double dark_error = 0.0; // P(N >= threshold | dark)
    double bright_error = 0.0; // P(N < threshold | bright)
    double infidelity = 0.0; // (dark_error + bright_error) / 2
};

// Scan every cut between the two histograms and keep the one with the
// smallest mean error, preferring the lowest threshold on ties.
inline DiscriminationResult optimize_threshold(const CountHistogram& dark,
                                               const CountHistogram& bright) {
    if (dark.p.empty() || bright.p.empty())
        throw std::invalid_argument("optimize_threshold: empty histogram");
    int top = std::max(dark.max_count(), bright.max_count());

    DiscriminationResult best;
    best.infidelity = 2.0;
    for (int thr = 1; thr <= top + 1; ++thr) {
        double p_dark_ge = 0.0;
        for (int n = thr; n < static_cast<int>(dark.p.size()); ++n) p_dark_ge += dark.p[n];
        double p_bright_lt = 0.0;
        for (int n = 0; n < thr && n < static_cast<int>(bright.p.size()); ++n)
            p_bright_lt += bright.p[n];
        double eps = 0.5 * (p_dark_ge + p_bright_lt);
        if (eps < best.infidelity) {
            best.threshold = thr;
            best.dark_error = p_dark_ge;
            best.bright_error = p_bright_lt;
            best.infidelity = eps;
        }
    }
    return best;
}

// End-to-end readout figure: simulate both preparations and discriminate.
inline DiscriminationResult readout_fidelity(const ReadoutConfig& cfg, const DetectorModel& det,
                                             std::uint64_t n_trials, std::uint64_t seed,
                                             int workers = 1) {
    CountHistogram dark = simulate_counts(cfg, det, AtomState::dark, n_trials, seed, workers);
    CountHistogram bright = simulate_counts(cfg, det, AtomState::bright, n_trials, seed + 1, workers);
    return optimize_threshold(dark, bright);
}

inline std::string to_csv(const CountHistogram& h) {
    std::ostringstream out;
    out << "N,probability,trials\n";
    for (std::size_t n = 0; n < h.p.size(); ++n)
        out << n << ',' << format_number(h.p[n]) << ',' << h.n_trials << '\n';
    return out.str();
}

} // namespace purcell

#endif
