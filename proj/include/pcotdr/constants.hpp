#pragma once
#include <cmath>

namespace pcotdr {

inline constexpr double k_planck_js = 6.62607015e-34;        // J s (SI exact)
inline constexpr double k_vacuum_light_m_s = 2.99792458e8;   // m/s (SI exact)
inline constexpr double k_default_group_speed_km_s = 2.0e5;  // km/s in standard fiber
inline constexpr double k_default_wavelength_m = 1550e-9;

/// Reference gate width for afterpulse compounding: per-gate afterpulse
/// probabilities are stored at 10 ns scale and compounded for wider gates.
inline constexpr double k_afterpulse_reference_gate_s = 10e-9;

inline double photon_energy_j(double wavelength_m) {
  return k_planck_js * k_vacuum_light_m_s / wavelength_m;
}

inline double dbm_to_w(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double w_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }

/// Linear transmission factor of an attenuation given in dB (>= 0 dB -> <= 1).
inline double attenuation_factor(double db) { return std::pow(10.0, -db / 10.0); }

/// OTDR trace convention: 5 log10 of received power, so a one-way loss of
/// X dB shows up as an X dB step on the trace (the round trip doubles the
/// power loss, the factor 5 halves the decibel).
inline double trace_db(double power_w, double reference_w = 1.0) {
  return 5.0 * std::log10(power_w / reference_w);
}

}  // namespace pcotdr
