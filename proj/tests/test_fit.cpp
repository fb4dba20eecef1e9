#include <catch2/catch_amalgamated.hpp>

#include <purcell/fit.hpp>
#include <purcell/qed.hpp>
#include <purcell/rng.hpp>
#include <purcell/units.hpp>

#include <cmath>
#include <vector>

using namespace purcell;
using Catch::Approx;

namespace {

// lab-scale decay record: amplitude in counts/s, time in seconds
std::vector<double> time_grid(std::size_t n, double horizon) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = horizon * static_cast<double>(i) / static_cast<double>(n - 1);
    return x;
}

} // namespace

TEST_CASE("exponential fit recovers noiseless lab-scale parameters") {
    const double a = 3.7e8, t = 2.5e-9, b = 6.5e3;
    std::vector<double> x = time_grid(151, 15e-9), y;
    for (double xi : x)
        y.push_back(a * std::exp(-xi / t) + b);

    FitResult fit = fit_exponential(x, y);
    REQUIRE(fit.converged);
    REQUIRE(fit.params[0] == Approx(a).epsilon(1e-6));
    REQUIRE(fit.params[1] == Approx(t).epsilon(1e-6));
    REQUIRE(fit.params[2] == Approx(b).epsilon(1e-3));
}

TEST_CASE("exponential fit is equivariant under axis rescaling") {
    const double a = 2.0, t = 0.3, b = 0.1;
    std::vector<double> x = time_grid(120, 2.0), y;
    Xoshiro256 rng(77);
    for (double xi : x)
        y.push_back(a * std::exp(-xi / t) + b + 1e-3 * (rng.uniform() - 0.5));

    FitResult base = fit_exponential(x, y);
    const double cx = 1e-9, cy = 1e8;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xs.push_back(x[i] * cx);
        ys.push_back(y[i] * cy);
    }
    FitResult scaled = fit_exponential(xs, ys);

    REQUIRE(scaled.converged);
    REQUIRE(scaled.params[0] == Approx(base.params[0] * cy).epsilon(1e-9));
    REQUIRE(scaled.params[1] == Approx(base.params[1] * cx).epsilon(1e-9));
    REQUIRE(scaled.params[2] == Approx(base.params[2] * cy).epsilon(1e-9));
    REQUIRE(scaled.uncertainties[1] == Approx(base.uncertainties[1] * cx).epsilon(1e-6));
}

TEST_CASE("exponential fit window drops the early transient") {
    // two-rate record: fast initial transient, then a clean tail
    const double t_slow = 2.5e-9;
    std::vector<double> x = time_grid(151, 15e-9), y;
    for (double xi : x)
        y.push_back(1e8 * std::exp(-xi / t_slow) - 8e7 * std::exp(-xi / 0.25e-9));

    FitResult tail = fit_exponential(x, y, 3e-9);
    REQUIRE(tail.converged);
    REQUIRE(tail.params[1] == Approx(t_slow).epsilon(1e-3));

    FitResult full = fit_exponential(x, y);
    REQUIRE(std::abs(full.params[1] - t_slow) > std::abs(tail.params[1] - t_slow));
}

TEST_CASE("exponential fit rejects degenerate and undersized inputs") {
    std::vector<double> x = time_grid(10, 1.0);
    std::vector<double> flat(10, 3.0);
    REQUIRE_THROWS_AS(fit_exponential(x, flat), std::invalid_argument);

    std::vector<double> y;
    for (double xi : x)
        y.push_back(std::exp(-xi));
    REQUIRE_THROWS_AS(fit_exponential(x, y, 0.95), std::invalid_argument);
    REQUIRE_THROWS_AS(fit_exponential({0.0, 1.0}, {1.0, 0.5}), std::invalid_argument);
    REQUIRE_THROWS_AS(fit_exponential({0.0, 1.0, 2.0}, {1.0, 0.5}), std::invalid_argument);
}

TEST_CASE("lorentzian fit recovers noiseless parameters") {
    const double a = 8.2e3, x0 = 1.7, w = 0.6, b = 120.0;
    std::vector<double> x, y;
    for (int i = -100; i <= 100; ++i) {
        double xi = x0 + 0.03 * i;
        x.push_back(xi);
        double h = 0.25 * w * w;
        y.push_back(a * h / ((xi - x0) * (xi - x0) + h) + b);
    }
    FitResult fit = fit_lorentzian(x, y);
    REQUIRE(fit.converged);
    REQUIRE(fit.params[0] == Approx(a).epsilon(1e-6));
    REQUIRE(fit.params[1] == Approx(x0).epsilon(1e-6));
    REQUIRE(fit.params[2] == Approx(w).epsilon(1e-6));
    REQUIRE(fit.params[3] == Approx(b).epsilon(1e-4));
}

TEST_CASE("lorentzian fit recovers a noisy line with sane uncertainties") {
    const double a = 1.0, x0 = 0.0, w = 2.0, b = 0.05;
    std::vector<double> x, y;
    Xoshiro256 rng(12345);
    for (int i = -150; i <= 150; ++i) {
        double xi = 0.05 * i;
        double h = 0.25 * w * w;
        x.push_back(xi);
        y.push_back(a * h / ((xi - x0) * (xi - x0) + h) + b + 0.01 * (rng.uniform() - 0.5));
    }
    FitResult fit = fit_lorentzian(x, y);
    REQUIRE(fit.converged);
    REQUIRE(fit.params[2] == Approx(w).epsilon(0.02));
    REQUIRE(fit.uncertainties[2] > 0.0);
    REQUIRE(fit.uncertainties[2] < 0.05);
}

TEST_CASE("lorentzian fit refuses a peak on the grid edge") {
    std::vector<double> x, y;
    for (int i = 0; i <= 50; ++i) {
        double xi = 0.1 * i; // peak at x = 0 sits on the first sample
        x.push_back(xi);
        y.push_back(1.0 / (xi * xi + 1.0));
    }
    REQUIRE_THROWS_AS(fit_lorentzian(x, y), std::runtime_error);
}

TEST_CASE("lorentzian fit refuses a grid that misses the half maximum") {
    // peak one sample in from the left edge: the single point to its left
    // never drops to half maximum, so the width seed has no left crossing
    const double x0 = 0.05, h = 0.01; // w = 0.2
    std::vector<double> x, y;
    for (int i = 0; i <= 125; ++i) {
        double xi = 0.04 * i;
        x.push_back(xi);
        y.push_back(h / ((xi - x0) * (xi - x0) + h));
    }
    REQUIRE_THROWS_AS(fit_lorentzian(x, y), std::runtime_error);
}

TEST_CASE("fitted width of a fine emission scan matches the enhanced linewidth") {
    SystemParams p;
    p.kappa = mhz_to_rad(159.0);
    p.gamma = mhz_to_rad(3.03);
    p.g = coupling_for_cooperativity(4.65, p.kappa, p.gamma);
    p.omega = 0.1 * p.gamma;

    // sample spacing a tenth of the atomic linewidth across +/- 3 FWHM
    CooperativityReport coop = cooperativity(p);
    double span = 3.0 * coop.fwhm_enhanced;
    double step = p.gamma / 10.0;
    std::vector<double> grid;
    for (double d = -span; d <= span; d += step)
        grid.push_back(d);
    std::vector<LineshapePoint> pts = lineshape_scan(p, grid);

    std::vector<double> x, y;
    for (const LineshapePoint& pt : pts) {
        x.push_back(pt.detuning);
        y.push_back(pt.rate);
    }
    FitResult fit = fit_lorentzian(x, y);
    REQUIRE(fit.converged);
    REQUIRE(fit.params[2] == Approx(coop.fwhm_enhanced).epsilon(5e-3));
}
