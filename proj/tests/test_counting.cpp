#include <catch2/catch_amalgamated.hpp>

#include <purcell/counting.hpp>

#include <cmath>
#include <numeric>

using namespace purcell;
using Catch::Approx;

namespace {

const DetectorModel kDetector{0.26, 28e-9, 6500.0};

double mean_count(const CountHistogram& h) {
    double m = 0.0;
    for (std::size_t n = 0; n < h.p.size(); ++n)
        m += static_cast<double>(n) * h.p[n];
    return m;
}

double prob_at_least(const CountHistogram& h, int thr) {
    double p = 0.0;
    for (int n = thr; n < static_cast<int>(h.p.size()); ++n)
        p += h.p[n];
    return p;
}

} // namespace

TEST_CASE("dark counts in a short window follow the Poisson click probability") {
    ReadoutConfig cfg;
    cfg.duration = 200e-9;
    cfg.bright_rate = 36.8e6;
    cfg.dark_rate = 6500.0;

    const std::uint64_t n = 1000000;
    CountHistogram h = simulate_counts(cfg, kDetector, AtomState::dark, n, 11);
    double mu = cfg.dark_rate * cfg.duration; // 1.3e-3
    double expect = 1.0 - std::exp(-mu);
    double sigma = std::sqrt(expect * (1.0 - expect) / static_cast<double>(n));
    REQUIRE(std::abs(prob_at_least(h, 1) - expect) < 4.0 * sigma);
}

TEST_CASE("discrimination error of the short-window example") {
    ReadoutConfig cfg;
    cfg.duration = 200e-9;
    cfg.bright_rate = 36.8e6;
    cfg.dark_rate = 6500.0;

    const std::uint64_t n = 1000000;
    CountHistogram dark = simulate_counts(cfg, kDetector, AtomState::dark, n, 21);
    CountHistogram bright = simulate_counts(cfg, kDetector, AtomState::bright, n, 22);
    DiscriminationResult disc = optimize_threshold(dark, bright);

    // a single click already separates the preparations here: the dead time
    // never suppresses the first arrival, so P(0 | bright) stays exp(-R T)
    REQUIRE(disc.threshold == 1);
    double mu_dark = cfg.dark_rate * cfg.duration;
    double oracle = 0.5 * ((1.0 - std::exp(-mu_dark)) + std::exp(-cfg.bright_rate * cfg.duration));
    REQUIRE(oracle == Approx(9.67e-4).epsilon(0.01));
    double sigma = std::sqrt(oracle / (2.0 * static_cast<double>(n)));
    REQUIRE(std::abs(disc.infidelity - oracle) < 4.0 * sigma);
}

TEST_CASE("dead-time correction inverts the renewal rate saturation") {
    // algebraic round trip at several loads
    for (double load : {0.05, 0.3, 0.5, 0.9}) {
        double tau = 28e-9;
        double true_rate = load / tau;
        double observed = true_rate / (1.0 + true_rate * tau);
        REQUIRE(dead_time_correct(observed, tau) == Approx(true_rate).epsilon(1e-12));
    }
    REQUIRE(dead_time_correct(5.0e6, 0.0) == 5.0e6);
    REQUIRE_THROWS_AS(dead_time_correct(4.0e7, 28e-9), std::domain_error);
    REQUIRE_THROWS_AS(dead_time_correct(-1.0, 28e-9), std::invalid_argument);
}

TEST_CASE("simulated counts at heavy load match the renewal rate") {
    const double tau = 28e-9;
    ReadoutConfig cfg;
    cfg.duration = 200.0 * tau;
    cfg.bright_rate = 0.5 / tau;
    cfg.dark_rate = 100.0;
    DetectorModel det{1.0, tau, 0.0};

    CountHistogram h = simulate_counts(cfg, det, AtomState::bright, 20000, 33);
    double observed_rate = mean_count(h) / cfg.duration;
    double renewal = cfg.bright_rate / (1.0 + cfg.bright_rate * tau);
    REQUIRE(observed_rate == Approx(renewal).epsilon(0.02));
}

TEST_CASE("discrimination improves monotonically with the window length") {
    double prev = 1.0;
    for (double duration : {50e-9, 100e-9, 200e-9, 400e-9}) {
        ReadoutConfig cfg;
        cfg.duration = duration;
        cfg.bright_rate = 36.8e6;
        cfg.dark_rate = 6500.0;
        DiscriminationResult disc = readout_fidelity(cfg, kDetector, 200000, 55);
        REQUIRE(disc.infidelity < prev);
        prev = disc.infidelity;
    }
}

TEST_CASE("analytic dark histogram is normalized and matches the simulation") {
    ReadoutConfig cfg;
    cfg.duration = 9e-6;
    cfg.bright_rate = 2.29e6;
    cfg.dark_rate = 6500.0;

    CountHistogram ana = analytic_dark_histogram(cfg, kDetector, 32);
    double total = std::accumulate(ana.p.begin(), ana.p.end(), 0.0);
    REQUIRE(total == Approx(1.0).margin(1e-12));

    const std::uint64_t n = 500000;
    CountHistogram mc = simulate_counts(cfg, kDetector, AtomState::dark, n, 44);
    for (int k = 0; k <= 3; ++k) {
        double sigma = std::sqrt(std::max(ana.p[k] * (1.0 - ana.p[k]), 1e-12) /
                                 static_cast<double>(n));
        double observed = k < static_cast<int>(mc.p.size()) ? mc.p[k] : 0.0;
        REQUIRE(std::abs(observed - ana.p[k]) < 5.0 * sigma);
    }

    DetectorModel hot = kDetector;
    ReadoutConfig loud = cfg;
    loud.dark_rate = 1e6; // dead time no longer negligible
    REQUIRE_THROWS_AS(analytic_dark_histogram(loud, hot), std::invalid_argument);
}

TEST_CASE("threshold search on hand-built histograms") {
    CountHistogram dark, bright;
    dark.p = {0.9, 0.1};
    bright.p = {0.2, 0.8};
    DiscriminationResult disc = optimize_threshold(dark, bright);
    REQUIRE(disc.threshold == 1);
    REQUIRE(disc.dark_error == Approx(0.1));
    REQUIRE(disc.bright_error == Approx(0.2));
    REQUIRE(disc.infidelity == Approx(0.15));

    // symmetric overlap: every cut is equally bad, the lowest one wins
    CountHistogram flat;
    flat.p = {0.5, 0.5};
    DiscriminationResult tie = optimize_threshold(flat, flat);
    REQUIRE(tie.threshold == 1);
    REQUIRE(tie.infidelity == Approx(0.5));
}

TEST_CASE("depumping during the window suppresses bright counts") {
    ReadoutConfig cfg;
    cfg.duration = 9e-6;
    cfg.bright_rate = 2.29e6;
    cfg.dark_rate = 6500.0;

    CountHistogram steady = simulate_counts(cfg, kDetector, AtomState::bright, 100000, 66);
    ReadoutConfig leaky = cfg;
    leaky.depump_rate = 1.0 / 3e-6; // typical atom falls dark a third through
    CountHistogram depumped = simulate_counts(leaky, kDetector, AtomState::bright, 100000, 66);
    REQUIRE(mean_count(depumped) < 0.6 * mean_count(steady));
    // dark trials ignore the depump channel entirely
    CountHistogram d1 = simulate_counts(cfg, kDetector, AtomState::dark, 50000, 67);
    CountHistogram d2 = simulate_counts(leaky, kDetector, AtomState::dark, 50000, 67);
    REQUIRE(to_csv(d1) == to_csv(d2));
}

TEST_CASE("histograms are byte-identical across repeats and worker counts") {
    ReadoutConfig cfg;
    cfg.duration = 800e-9;
    cfg.bright_rate = 12.3e6;
    cfg.dark_rate = 6500.0;

    CountHistogram a = simulate_counts(cfg, kDetector, AtomState::bright, 40000, 7, 1);
    CountHistogram b = simulate_counts(cfg, kDetector, AtomState::bright, 40000, 7, 1);
    CountHistogram c = simulate_counts(cfg, kDetector, AtomState::bright, 40000, 7, 4);
    REQUIRE(to_csv(a) == to_csv(b));
    REQUIRE(to_csv(a) == to_csv(c));

    CountHistogram other_seed = simulate_counts(cfg, kDetector, AtomState::bright, 40000, 8, 1);
    REQUIRE(to_csv(a) != to_csv(other_seed));
}

TEST_CASE("count simulation rejects malformed inputs") {
    ReadoutConfig cfg;
    cfg.duration = 200e-9;
    cfg.bright_rate = 1e6;
    cfg.dark_rate = 100.0;
    REQUIRE_THROWS_AS(simulate_counts(cfg, kDetector, AtomState::dark, 0, 1),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(simulate_counts(cfg, kDetector, AtomState::dark, 10, 1, 0),
                      std::invalid_argument);
    ReadoutConfig bad = cfg;
    bad.duration = 0.0;
    REQUIRE_THROWS_AS(simulate_counts(bad, kDetector, AtomState::dark, 10, 1),
                      std::invalid_argument);
    DetectorModel broken = kDetector;
    broken.efficiency = 1.5;
    REQUIRE_THROWS_AS(simulate_counts(cfg, broken, AtomState::dark, 10, 1),
                      std::invalid_argument);
    CountHistogram empty;
    REQUIRE_THROWS_AS(optimize_threshold(empty, empty), std::invalid_argument);
}
