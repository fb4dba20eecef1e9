#ifndef PURCELL_PROTOCOL_HPP
#define PURCELL_PROTOCOL_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rng.hpp"

namespace purcell {

// Optical pumping toward the target state with time constant tau; a fraction
// r of the pumped population leaks back to the starting state.
struct PumpModel {
    double tau = 0.0; // seconds
    double r = 0.0;   // repump leakage fraction

    void validate() const {
        if (!(tau > 0.0))
            throw std::invalid_argument("PumpModel: tau must be > 0");
        if (!(r >= 0.0) || !(r < 1.0))
            throw std::invalid_argument("PumpModel: r must lie in [0, 1)");
    }
};

// The total pump time is split into n_segments equal slices, each followed by
// a readout; the protocol stops at the first readout that confirms success.
struct ProtocolConfig {
    double total_pump_time = 0.0;       // seconds
    int n_segments = 1;
    double readout_time = 0.0;          // seconds per check
    std::array<double, 2> initial_state = {1.0, 0.0}; // {not-pumped, pumped}

    void validate() const {
        if (!(total_pump_time > 0.0))
            throw std::invalid_argument("ProtocolConfig: total_pump_time must be > 0");
        if (n_segments < 1)
            throw std::invalid_argument("ProtocolConfig: n_segments must be >= 1");
        if (!(readout_time >= 0.0))
            throw std::invalid_argument("ProtocolConfig: readout_time must be >= 0");
        if (!(initial_state[0] >= 0.0) || !(initial_state[1] >= 0.0) ||
            std::abs(initial_state[0] + initial_state[1] - 1.0) > 1e-12)
            throw std::invalid_argument(
                "ProtocolConfig: initial_state must be a probability vector");
    }
};

// Column-stochastic transfer matrix over a pump interval t, acting on
// (not-pumped, pumped) probability columns.
inline std::array<std::array<double, 2>, 2> transfer_matrix(const PumpModel& pump, double t) {
    pump.validate();
    if (!(t >= 0.0))
        throw std::invalid_argument("transfer_matrix: t must be >= 0");
    double x = std::exp(-t / pump.tau);
    // M[row][col], column sums are 1
    return {{{pump.r + (1.0 - pump.r) * x, pump.r * (1.0 - x)},
             {(1.0 - pump.r) * (1.0 - x), 1.0 - pump.r * (1.0 - x)}}};
}

struct ProtocolReport {
    std::vector<double> p_end; // p_end[i] = P(stop after segment i+1)
    double mean_time = 0.0;    // seconds, unconditional
    double failure_prob = 0.0; // P(last readout still shows not-pumped)
};

// Exact segment-by-segment account of the interleaved pump/readout protocol.
// After each segment the population is measured; success (pumped) ends the
// run, failure projects the state back to not-pumped and pumping continues.
inline ProtocolReport protocol_report(const PumpModel& pump, const ProtocolConfig& cfg) {
    pump.validate();
    cfg.validate();
    const int n = cfg.n_segments;
    const double t_seg = cfg.total_pump_time / n;
    const double x = std::exp(-t_seg / pump.tau);

    // success probability of one segment from a fresh not-pumped state, and
    // from the configured initial state for the first segment
    const double q = (1.0 - pump.r) * (1.0 - x);
    auto m = transfer_matrix(pump, t_seg);
    const double q1 = m[1][0] * cfg.initial_state[0] + m[1][1] * cfg.initial_state[1];

    ProtocolReport rep;
    rep.p_end.assign(n, 0.0);
    double survive = 1.0; // probability the run is still going
    for (int i = 0; i < n; ++i) {
        double qi = i == 0 ? q1 : q;
        if (i == n - 1) {
            rep.p_end[i] = survive; // the run always stops at the last segment
            rep.failure_prob = survive * (1.0 - qi);
        } else {
            rep.p_end[i] = survive * qi;
            survive *= 1.0 - qi;
        }
    }

    double per_round = t_seg + cfg.readout_time;
    for (int i = 0; i < n; ++i)
        rep.mean_time += rep.p_end[i] * (i + 1) * per_round;
    return rep;
}

struct SegmentChoice {
    int n_segments = 1;
    ProtocolReport report;
};

// Pick the segment count with the smallest mean time; ties go to fewer
// segments (fewer readouts for the same clock).
inline SegmentChoice optimize_segments(const PumpModel& pump, double total_pump_time,
                                       double readout_time, int n_max,
                                       std::array<double, 2> initial_state = {1.0, 0.0}) {
    if (n_max < 1)
        throw std::invalid_argument("optimize_segments: n_max must be >= 1");
    SegmentChoice best;
    bool have = false;
    for (int n = 1; n <= n_max; ++n) {
        ProtocolConfig cfg{total_pump_time, n, readout_time, initial_state};
        ProtocolReport rep = protocol_report(pump, cfg);
        if (!have || rep.mean_time < best.report.mean_time) {
            best = {n, std::move(rep)};
            have = true;
        }
    }
    return best;
}

struct ProtocolSample {
    double mean_time = 0.0;   // seconds
    double se_mean = 0.0;     // standard error of the mean
    std::vector<double> p_end_hat;
    double failure_hat = 0.0;
};

// Monte Carlo of the same protocol: per segment, flip success with the
// transfer-matrix probability; a failed readout re-prepares not-pumped.
inline ProtocolSample simulate_protocol(const PumpModel& pump, const ProtocolConfig& cfg,
                                        std::uint64_t n_trials, std::uint64_t seed) {
    pump.validate();
    cfg.validate();
    if (n_trials == 0)
        throw std::invalid_argument("simulate_protocol: n_trials must be > 0");
    const int n = cfg.n_segments;
    const double t_seg = cfg.total_pump_time / n;
    auto m = transfer_matrix(pump, t_seg);
    const double per_round = t_seg + cfg.readout_time;

    std::vector<std::uint64_t> end_counts(n, 0);
    std::uint64_t failures = 0;
    double sum_t = 0.0, sum_t2 = 0.0;
    for (std::uint64_t trial = 0; trial < n_trials; ++trial) {
        Xoshiro256 rng = trial_stream(seed, trial);
        // resolve the initial mixture, then walk segments
        bool pumped = rng.uniform() < cfg.initial_state[1];
        int stopped_at = n - 1;
        for (int i = 0; i < n; ++i) {
            double qi = pumped ? m[1][1] : m[1][0];
            bool success = rng.uniform() < qi;
            if (success) {
                stopped_at = i;
                break;
            }
            pumped = false; // failed readout projects back to not-pumped
            if (i == n - 1) {
                stopped_at = i;
                ++failures;
            }
        }
        ++end_counts[stopped_at];
        double t = (stopped_at + 1) * per_round;
        sum_t += t;
        sum_t2 += t * t;
    }

    ProtocolSample s;
    s.mean_time = sum_t / static_cast<double>(n_trials);
    double var = sum_t2 / static_cast<double>(n_trials) - s.mean_time * s.mean_time;
    s.se_mean = std::sqrt(std::max(0.0, var) / static_cast<double>(n_trials));
    s.p_end_hat.assign(n, 0.0);
    for (int i = 0; i < n; ++i)
        s.p_end_hat[i] = static_cast<double>(end_counts[i]) / static_cast<double>(n_trials);
    s.failure_hat = static_cast<double>(failures) / static_cast<double>(n_trials);
    return s;
}

} // namespace purcell

#endif
