#pragma once
#include "pcotdr/constants.hpp"
#include "pcotdr/rng.hpp"

namespace pcotdr {

/// Trapped-carrier afterpulsing. `a0` is the afterpulse probability of a
/// 10 ns gate immediately after a detection; the excess trap population
/// decays with e-folding time `tau_trap_s`. Both are calibration knobs, not
/// device measurements.
struct AfterpulseParams {
  double a0 = 0.10;
  double tau_trap_s = 2.0e-6;
};

/// Charge persistence: photons arriving while the diode sits below breakdown
/// are weakly multiplied and raise the noise hazard of the next gate.
/// `kappa` couples off-gate photon flux into the excess pool, which decays at
/// rate `gamma_hz`. Defaults are calibrated against the dead-zone scenario in
/// the acceptance suite (tail ~10 dB below the loss edge, ~2 km dead zone).
struct PersistenceParams {
  double kappa = 3.5e-4;
  double gamma_hz = 2.0e5;
};

struct ApdModel {
  double efficiency = 0.10;       // detection efficiency
  double dark_rate_hz = 2000.0;   // dark count probability per gate / gate width
  AfterpulseParams afterpulse{};
  PersistenceParams persistence{};
  double dead_time_s = 2.0e-3;
  double photon_energy_j = pcotdr::photon_energy_j(k_default_wavelength_m);

  void validate() const;
};

/// Evolving state of one simulated detector timeline. `trap_excess` is the
/// current 10 ns-gate afterpulse probability; `persistence_excess` the pool
/// of weakly multiplied carriers. `time_s` is the last instant the state was
/// advanced to; `dead_until_s` only moves forward.
struct ApdState {
  double trap_excess = 0.0;
  double persistence_excess = 0.0;
  double dead_until_s = 0.0;
  double time_s = 0.0;
};

enum class DetectionCause { none, signal, dark, afterpulse, persistence };

struct GateOutcome {
  bool detected = false;
  DetectionCause cause = DetectionCause::none;
};

struct PowerEstimate {
  double power_w = 0.0;
  double low_w = 0.0;   // 1 sigma Poisson interval propagated through the inversion
  double high_w = 0.0;
};

struct AfterpulseProbability {
  double value = 0.0;
  bool within_validity = true;  // compounding is stated for gates up to 10 us
};

/// p_sig = 1 - exp(-eta * (P/hnu) * Dt_gate). Throws std::domain_error for
/// negative power.
double detection_probability(const ApdModel& apd, double p_opt_w, double gate_width_s);

/// Small-signal form eta * (P/hnu) * Dt_gate.
double detection_probability_linearized(const ApdModel& apd, double p_opt_w,
                                        double gate_width_s);

/// Afterpulse probability of a gate opened `dead_delay_s` after a detection:
/// p10 = a0 * exp(-dead_delay/tau_trap), compounded over m = Dt_gate / 10 ns.
AfterpulseProbability afterpulse_probability_gate(const ApdModel& apd, double dead_delay_s,
                                                  double gate_width_s);

/// Inverts counting statistics to incident optical power:
///   p = (N_det - N_dc) / N_gate,  P = -hnu/(eta*Dt) * ln(1 - p)
/// with a 1 sigma interval from N_det +- sqrt(N_det). Throws saturation_error
/// when every gate fired (no finite estimate).
PowerEstimate estimate_power(const ApdModel& apd, long n_det, double n_dc_expected,
                             long n_gate, double gate_width_s);

/// Total hazard of one gate given the current state: signal + dark +
/// afterpulse + persistence, composed as independent Poisson hazards so the
/// detection probability is 1 - exp(-H).
double gate_hazard(const ApdModel& apd, const ApdState& state, double p_opt_w,
                   double gate_width_s);

/// Draws one gate. The caller must keep gates out of dead time
/// (gate_start >= dead_until) and must have advanced the state through any
/// illuminated gap (accumulate_persistence); remaining un-illuminated time is
/// decayed here. On detection the trap pool gains a0 and dead time starts at
/// the gate end. Consumes one uniform, plus one more to attribute the cause.
GateOutcome sample_gate(const ApdModel& apd, ApdState& state, double p_opt_w,
                        double gate_start_s, double gate_width_s, RngStream& rng);

/// Advances the state through an un-gated interval illuminated with constant
/// power: the persistence pool integrates kappa * (P/hnu) against its decay
/// (exact constant-power solution) and the trap pool decays.
void accumulate_persistence(const ApdModel& apd, ApdState& state, double p_opt_off_w,
                            double duration_s);

}  // namespace pcotdr
