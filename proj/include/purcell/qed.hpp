#ifndef PURCELL_QED_HPP
#define PURCELL_QED_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace purcell {

// One atom coupled to one cavity mode, driven from the side. All rates and
// detunings are angular (rad/s). kappa and gamma are field/dipole decay
// rates: photons leave the cavity at 2*kappa, the free-space excited state
// lives 1/(2*gamma).
struct SystemParams {
    double g = 0.0;       // atom-cavity coupling
    double kappa = 0.0;   // cavity field decay rate
    double gamma = 0.0;   // atomic dipole decay rate
    double delta_a = 0.0; // atom minus drive frequency
    double delta_c = 0.0; // cavity minus drive frequency
    double omega = 0.0;   // drive Rabi frequency

    void validate() const {
        if (!(std::isfinite(g) && std::isfinite(kappa) && std::isfinite(gamma) &&
              std::isfinite(delta_a) && std::isfinite(delta_c) && std::isfinite(omega)))
            throw std::invalid_argument("SystemParams: non-finite value");
        if (g < 0.0) throw std::invalid_argument("SystemParams: g must be >= 0");
        if (kappa <= 0.0) throw std::invalid_argument("SystemParams: kappa must be > 0");
        if (gamma <= 0.0) throw std::invalid_argument("SystemParams: gamma must be > 0");
        if (omega < 0.0) throw std::invalid_argument("SystemParams: omega must be >= 0");
    }
};

// coupling that realizes a requested cooperativity at fixed kappa, gamma
inline double coupling_for_cooperativity(double c, double kappa, double gamma) {
    return std::sqrt(2.0 * c * kappa * gamma);
}

struct CooperativityReport {
    double c_real = 0.0;                    // g^2 / (2 kappa gamma)
    std::complex<double> c_complex{0, 0};   // detuning-dressed cooperativity
    double enhancement = 0.0;               // 2C + 1
    double lifetime_enhanced = 0.0;         // (1/(2 gamma)) / (2C + 1), seconds
    double fwhm_enhanced = 0.0;             // (2C + 1) * 2 gamma, angular
};

inline CooperativityReport cooperativity(const SystemParams& p) {
    p.validate();
    CooperativityReport r;
    r.c_real = p.g * p.g / (2.0 * p.kappa * p.gamma);
    r.c_complex = p.g * p.g /
        (2.0 * std::complex<double>(p.kappa, -p.delta_c) *
               std::complex<double>(p.gamma, -p.delta_a));
    r.enhancement = 2.0 * r.c_real + 1.0;
    r.lifetime_enhanced = 1.0 / (2.0 * p.gamma) / r.enhancement;
    r.fwhm_enhanced = r.enhancement * 2.0 * p.gamma;
    return r;
}

// Photon flux (photons/s) through the cavity mirror for a weak drive. This is
// the linear-response limit of the full master equation: the prefactor uses
// the resonant cooperativity, the detuning dependence enters through the
// dressed one.
inline double emission_rate_weak_drive(const SystemParams& p) {
    p.validate();
    if (p.g == 0.0)
        throw std::domain_error("emission_rate_weak_drive: uncoupled system (g = 0), rate formula is singular");
    if (p.omega == 0.0) return 0.0;
    const CooperativityReport rep = cooperativity(p);
    const std::complex<double> ct = rep.c_complex;
    return p.omega * p.omega / (p.gamma * rep.c_real) *
           std::norm(ct) / std::norm(1.0 + 2.0 * ct);
}

struct LineshapePoint {
    double detuning = 0.0; // angular
    double rate = 0.0;     // photons/s
};

// Fluorescence rate while the atomic transition is tuned across a
// drive-resonant cavity (delta_c stays 0, delta_a is swept). In this
// configuration the profile is an exact Lorentzian of FWHM (2C+1)*2*gamma:
// the cavity just renormalizes the atomic linewidth.
inline std::vector<LineshapePoint> lineshape_scan(const SystemParams& p,
                                                  const std::vector<double>& detunings) {
    p.validate();
    if (detunings.empty())
        throw std::invalid_argument("lineshape_scan: empty detuning grid");
    std::vector<LineshapePoint> out;
    out.reserve(detunings.size());
    for (double d : detunings) {
        SystemParams q = p;
        q.delta_a = d;
        q.delta_c = 0.0;
        out.push_back({d, emission_rate_weak_drive(q)});
    }
    return out;
}

} // namespace purcell

#endif
