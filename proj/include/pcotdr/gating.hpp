#pragma once
#include <string>
#include <vector>

#include "pcotdr/detector.hpp"
#include "pcotdr/fiber.hpp"

namespace pcotdr {

enum class SchemeKind { basic, train_of_gates, free_running, rapid_gating };

std::string to_string(SchemeKind kind);
SchemeKind scheme_kind_from_string(const std::string& name);

/// Bias scheme of the detector. `dead_time_override_s < 0` means the detector
/// model's dead time applies unchanged; rapid gating typically overrides it
/// to ~10 ns.
struct GatingScheme {
  SchemeKind kind = SchemeKind::basic;
  double gate_width_s = 1e-6;
  double dead_time_override_s = -1.0;

  // basic: one gate per laser pulse at delay i * delay_step_s
  double delay_step_s = 3e-6;
  long gates_per_point = 0;  // pulses dwelt per delay position (0: derive from duration)

  // train_of_gates / rapid_gating
  double f_gate_hz = 1e6;
  int start_delay_shifts = 1;  // interleaved start delays to refine sampling

  double effective_dead_time_s(const ApdModel& apd) const {
    return dead_time_override_s >= 0 ? dead_time_override_s : apd.dead_time_s;
  }
  void validate() const;
};

/// Returns a rapid-gating scheme with the usual operating point:
/// 200 ps gates at 1 GHz with a 10 ns dead time.
GatingScheme default_rapid_gating();

/// Concrete per-pulse gate timing derived from a scheme and a link.
/// Gates of pulse p start at shift(p) + k * pitch_s for k in
/// [0, gates_per_pulse); shift(p) = (p mod shifts) * shift_step_s. Delay bins
/// have pitch bin_pitch_s = pitch_s / shifts. Basic mode instead holds one
/// gate per pulse whose delay advances across positions.
struct GateSchedule {
  SchemeKind kind = SchemeKind::basic;
  double gate_width_s = 0.0;
  double pitch_s = 0.0;
  int shifts = 1;
  double shift_step_s = 0.0;
  long gates_per_pulse = 0;
  double window_s = 0.0;  // round-trip span covered
  double duty_cycle = 0.0;
  long bin_count = 0;
  double bin_pitch_s = 0.0;

  double gate_start(long pulse_index, long k) const {
    return (pulse_index % shifts) * shift_step_s + static_cast<double>(k) * pitch_s;
  }
  long bin_of(long pulse_index, long k) const {
    return (pulse_index % shifts) + k * shifts;
  }
  /// Gate start delays of one pulse, for inspection and tests.
  std::vector<double> pulse_gate_starts(long pulse_index) const;
};

GateSchedule build_schedule(const GatingScheme& scheme, const LaserConfig& laser,
                            const FiberLink& link);

/// Probability that gate i of a train gets activated when the per-gate
/// detection probability at the head of the train is p: (1 - p)^(i - 1).
double activation_probability(long gate_index, double p_sig_gate1);

/// Maximal gating frequency keeping the deepest shadowed gate above the
/// activation floor. `f_continuous_hz` solves (1-p)^(f*tau) = floor exactly;
/// `gates_per_dead_time` counts whole skipped gates (the deepest index i with
/// (1-p)^(i-1) >= floor) and `f_integer_hz` is that count over tau. When the
/// continuous solution exceeds 1/gate width, the cap binds and the planner
/// flags the free-running regime.
struct GateFrequencyPlan {
  double f_continuous_hz = 0.0;
  long gates_per_dead_time = 0;
  double f_integer_hz = 0.0;
  bool free_running_regime = false;
};

GateFrequencyPlan max_gate_frequency(double p_sig_gate1, double dead_time_s,
                                     double activation_min, double gate_width_s);

/// Linearized detection rate 1 / (1/(eta*mu*duty) + tau).
double detection_rate_hz(double efficiency, double mu_hz, double duty_cycle,
                         double dead_time_s);

/// Photon-flux ceiling below which free running keeps its activation floor:
/// mu_max = b / (eta * tau) with b = -ln(activation_min).
struct FreeRunningLimit {
  double b = 0.0;
  double mu_max_hz = 0.0;
  double p_opt_max_w = 0.0;
};

FreeRunningLimit free_running_threshold(double efficiency, double dead_time_s,
                                        double activation_min, double photon_energy_j);

/// Flux at which free running and rapid gating trade places: 1/(eta*tau) of
/// the free-running dead time.
double free_running_crossover_hz(double efficiency, double dead_time_s);

struct SchemeRecommendation {
  SchemeKind kind = SchemeKind::free_running;
  double crossover_mu_hz = 0.0;
  std::string rationale;
};

/// Free running below the crossover flux, rapid gating at and above it.
SchemeRecommendation recommend_scheme(double mu_hz, const ApdModel& apd,
                                      const GatingScheme& rapid, const GatingScheme& freerun);

}  // namespace pcotdr
