#ifndef PURCELL_UNITS_HPP
#define PURCELL_UNITS_HPP

namespace purcell {

inline constexpr double two_pi = 6.28318530717958647692528676655900577;

// Everything inside the library is angular frequency (rad/s). Configuration
// files and human-facing output quote plain MHz, so the conversion picks up
// the 2*pi: a cavity with kappa = 159 MHz decays the field at
// 2*pi*159e6 rad/s.
inline constexpr double mhz_to_rad(double nu_mhz) { return two_pi * nu_mhz * 1e6; }
inline constexpr double rad_to_mhz(double omega) { return omega / (two_pi * 1e6); }

} // namespace purcell

#endif
