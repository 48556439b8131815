#pragma once
#include "pcotdr/constants.hpp"
#include "pcotdr/fiber.hpp"

namespace pcotdr {
namespace analytics {

/// Inputs of the NEP family. Per-gate probabilities and gate-width-normalized
/// rates are kept consistent by construction (p_gate = phat * Dt_gate); the
/// detection bandwidth is tied to the gate width, B = 1/(2*Dt_gate).
struct NepInput {
  double efficiency = 0.1;
  double phat_sig_hz = 0.0;  // signal detection probability per gate / gate width
  double phat_dc_hz = 0.0;   // dark count probability per gate / gate width
  double gate_width_s = 1e-6;
  long n_gate = 1;
  double photon_energy_j = pcotdr::photon_energy_j(k_default_wavelength_m);

  double p_sig_gate() const { return phat_sig_hz * gate_width_s; }
  double p_dc_gate() const { return phat_dc_hz * gate_width_s; }
  double bandwidth_hz() const { return 0.5 / gate_width_s; }

  static NepInput from_gate_probabilities(double efficiency, double p_sig_gate,
                                          double p_dc_gate, double gate_width_s, long n_gate,
                                          double photon_energy_j);
  /// Signal rate from optical power in the linear regime, phat_sig = eta*P/hnu.
  static NepInput from_power(double efficiency, double p_opt_w, double phat_dc_hz,
                             double gate_width_s, long n_gate, double photon_energy_j);
};

/// Conventional (linear-mode) receiver reduced to its bandwidth-normalized
/// NEP; nothing else of it is modeled.
struct ConventionalDetector {
  double nep_norm_w_per_sqrt_hz = 0.0;
};

/// NEP of a concrete measurement: (hnu/eta) * sqrt((p_sig+p_dc)/(N*Dt^2)) [W].
double nep_w(const NepInput& in);
/// Same with the signal shot noise dropped (minimal detectable power).
double nep0_w(const NepInput& in);

/// Bandwidth- and time-normalized forms, (hnu/eta)*sqrt(2*(phat_sig+phat_dc))
/// and (hnu/eta)*sqrt(2*phat_dc) [W/sqrt(Hz)].
double nep_norm(const NepInput& in);
double nep_norm0(const NepInput& in);

/// 5 log10(P_BS0 / NEP0) [dB]; the factor 5 encodes the fiber round trip.
double dynamic_range_db(double p_bs0_w, double nep0_w);

/// Convenience composition: initial backscatter from the link's first segment
/// against NEP0 of a measurement whose gate width is matched to the pulse.
double dynamic_range_db(const FiberLink& link, const LaserConfig& laser, double phat_dc_hz,
                        double efficiency, long n_gate);

/// Pulse-width reduction factor alpha = 10^(-2x/15) that trades x dB of
/// dynamic range for 2-point resolution.
double two_point_advantage(double x_db);

/// t = (1/f_pulse) * (snr * nep_norm * sqrt(B) / P_opt)^2 [s].
double measurement_time_s(double snr_target, double nep_norm_w_sqrt_hz, double bandwidth_hz,
                          double p_opt_w, double f_pulse_hz);

/// Linearized SNR after measuring for t seconds.
double snr_linear(double p_opt_w, double t_s, double f_pulse_hz, double nep_norm_w_sqrt_hz,
                  double bandwidth_hz);

/// Exact counting form, keeping the 1 - exp(-eta*mu*Dt_gate) saturation.
double snr_exact(double p_opt_w, double t_s, double f_pulse_hz, double nep_norm_w_sqrt_hz,
                 double gate_width_s, double efficiency, double photon_energy_j);

/// Measurement-time ratio (conv/pc) = (NEP_conv / NEP_pc)^2.
double time_ratio(const ConventionalDetector& conv, double pc_nep_norm_w_sqrt_hz);

}  // namespace analytics
}  // namespace pcotdr
