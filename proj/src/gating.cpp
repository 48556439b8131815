#include "pcotdr/gating.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pcotdr/errors.hpp"

namespace pcotdr {

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::basic: return "basic";
    case SchemeKind::train_of_gates: return "train_of_gates";
    case SchemeKind::free_running: return "free_running";
    case SchemeKind::rapid_gating: return "rapid_gating";
  }
  return "?";
}

SchemeKind scheme_kind_from_string(const std::string& name) {
  if (name == "basic") return SchemeKind::basic;
  if (name == "train_of_gates") return SchemeKind::train_of_gates;
  if (name == "free_running") return SchemeKind::free_running;
  if (name == "rapid_gating") return SchemeKind::rapid_gating;
  throw validation_error("scheme.type: unknown scheme '" + name + "'");
}

void GatingScheme::validate() const {
  if (!(gate_width_s > 0)) throw validation_error("scheme.gate_width_s must be > 0");
  if (kind == SchemeKind::basic) {
    if (!(delay_step_s > 0)) throw validation_error("scheme.delay_step_s must be > 0");
    if (gates_per_point < 0)
      throw validation_error("scheme.gates_per_point must be >= 0");
  }
  if (kind == SchemeKind::train_of_gates || kind == SchemeKind::rapid_gating) {
    if (!(f_gate_hz > 0)) throw validation_error("scheme.f_gate_hz must be > 0");
    if (!(f_gate_hz < 1.0 / gate_width_s))
      throw validation_error("scheme.f_gate_hz must satisfy f_gate < 1/gate_width_s");
    if (start_delay_shifts < 1)
      throw validation_error("scheme.start_delay_shifts must be >= 1");
  }
}

GatingScheme default_rapid_gating() {
  GatingScheme s;
  s.kind = SchemeKind::rapid_gating;
  s.gate_width_s = 200e-12;
  s.f_gate_hz = 1e9;
  s.dead_time_override_s = 10e-9;
  s.start_delay_shifts = 1;
  return s;
}

std::vector<double> GateSchedule::pulse_gate_starts(long pulse_index) const {
  std::vector<double> starts;
  starts.reserve(static_cast<std::size_t>(gates_per_pulse));
  for (long k = 0; k < gates_per_pulse; ++k) starts.push_back(gate_start(pulse_index, k));
  return starts;
}

GateSchedule build_schedule(const GatingScheme& scheme, const LaserConfig& laser,
                            const FiberLink& link) {
  scheme.validate();
  laser.validate(link);
  GateSchedule sched;
  sched.kind = scheme.kind;
  sched.gate_width_s = scheme.gate_width_s;
  sched.window_s = link.round_trip_delay_s();

  switch (scheme.kind) {
    case SchemeKind::basic: {
      if (scheme.delay_step_s > sched.window_s)
        throw validation_error("scheme.delay_step_s exceeds the round-trip window");
      sched.pitch_s = scheme.delay_step_s;
      sched.shifts = 1;
      sched.gates_per_pulse = 1;
      sched.bin_pitch_s = scheme.delay_step_s;
      sched.bin_count = static_cast<long>(std::floor(sched.window_s / scheme.delay_step_s *
                                                     (1.0 + 1e-12))) +
                        1;
      sched.duty_cycle = laser.pulse_rate_hz * scheme.gate_width_s;
      break;
    }
    case SchemeKind::train_of_gates:
    case SchemeKind::rapid_gating: {
      sched.pitch_s = 1.0 / scheme.f_gate_hz;
      sched.shifts = scheme.start_delay_shifts;
      sched.shift_step_s = sched.pitch_s / sched.shifts;
      // every gate must end inside the round-trip window
      sched.gates_per_pulse = static_cast<long>(std::floor(
                                  (sched.window_s - scheme.gate_width_s) / sched.pitch_s *
                                  (1.0 + 1e-12))) +
                              1;
      sched.bin_pitch_s = sched.shift_step_s;
      sched.bin_count = sched.gates_per_pulse * sched.shifts;
      sched.duty_cycle = scheme.f_gate_hz * scheme.gate_width_s;
      break;
    }
    case SchemeKind::free_running: {
      // the gamma -> 1 limit of gating: contiguous sampling gates, re-armed
      // on the bin grid after dead time
      sched.pitch_s = scheme.gate_width_s;
      sched.shifts = 1;
      sched.gates_per_pulse = static_cast<long>(std::floor(
                                  (sched.window_s - scheme.gate_width_s) / sched.pitch_s *
                                  (1.0 + 1e-12))) +
                              1;
      sched.bin_pitch_s = sched.pitch_s;
      sched.bin_count = sched.gates_per_pulse;
      sched.duty_cycle = 1.0;
      break;
    }
  }
  if (sched.duty_cycle > 1.0 + 1e-12)
    throw validation_error("schedule duty cycle exceeds 1");
  if (sched.bin_count < 1) throw validation_error("schedule covers no delay bins");
  return sched;
}

double activation_probability(long gate_index, double p_sig_gate1) {
  if (gate_index < 1) throw std::invalid_argument("activation_probability: gate index < 1");
  if (p_sig_gate1 < 0 || p_sig_gate1 >= 1)
    throw std::invalid_argument("activation_probability: p must be in [0, 1)");
  return std::pow(1.0 - p_sig_gate1, static_cast<double>(gate_index - 1));
}

GateFrequencyPlan max_gate_frequency(double p_sig_gate1, double dead_time_s,
                                     double activation_min, double gate_width_s) {
  if (!(activation_min > 0 && activation_min < 1))
    throw std::invalid_argument("max_gate_frequency: activation_min must be in (0, 1)");
  if (!(dead_time_s > 0)) throw std::invalid_argument("max_gate_frequency: dead time must be > 0");
  GateFrequencyPlan plan;
  const double cap = gate_width_s > 0 ? 1.0 / gate_width_s : std::numeric_limits<double>::infinity();
  if (p_sig_gate1 <= 0) {
    plan.f_continuous_hz = cap;
    plan.f_integer_hz = cap;
    plan.gates_per_dead_time = static_cast<long>(std::floor(cap * dead_time_s));
    plan.free_running_regime = true;
    return plan;
  }
  // (1 - p)^x = activation_min at x = f * tau
  const double x = std::log(activation_min) / std::log1p(-p_sig_gate1);
  plan.f_continuous_hz = x / dead_time_s;
  // deepest gate index i with (1 - p)^(i - 1) >= activation_min
  plan.gates_per_dead_time = static_cast<long>(std::floor(x * (1.0 + 1e-12))) + 1;
  plan.f_integer_hz = static_cast<double>(plan.gates_per_dead_time) / dead_time_s;
  if (plan.f_continuous_hz >= cap) {
    plan.f_continuous_hz = cap;
    plan.f_integer_hz = cap;
    plan.free_running_regime = true;
  }
  return plan;
}

double detection_rate_hz(double efficiency, double mu_hz, double duty_cycle,
                         double dead_time_s) {
  if (efficiency < 0 || mu_hz < 0 || duty_cycle < 0 || dead_time_s < 0)
    throw std::invalid_argument("detection_rate_hz: negative input");
  const double flux = efficiency * mu_hz * duty_cycle;
  if (flux <= 0) return 0.0;
  return 1.0 / (1.0 / flux + dead_time_s);
}

FreeRunningLimit free_running_threshold(double efficiency, double dead_time_s,
                                        double activation_min, double photon_energy_j) {
  if (!(activation_min > 0 && activation_min < 1))
    throw std::invalid_argument("free_running_threshold: activation_min must be in (0, 1)");
  FreeRunningLimit lim;
  lim.b = -std::log(activation_min);
  lim.mu_max_hz = lim.b / (efficiency * dead_time_s);
  lim.p_opt_max_w = photon_energy_j * lim.mu_max_hz;
  return lim;
}

double free_running_crossover_hz(double efficiency, double dead_time_s) {
  return 1.0 / (efficiency * dead_time_s);
}

SchemeRecommendation recommend_scheme(double mu_hz, const ApdModel& apd,
                                      const GatingScheme& rapid, const GatingScheme& freerun) {
  SchemeRecommendation rec;
  rec.crossover_mu_hz = free_running_crossover_hz(apd.efficiency, freerun.effective_dead_time_s(apd));
  // ties go to the dead-time-limited side
  rec.kind = mu_hz < rec.crossover_mu_hz ? SchemeKind::free_running : SchemeKind::rapid_gating;
  std::ostringstream msg;
  msg << "flux " << mu_hz << " photons/s is " << (mu_hz < rec.crossover_mu_hz ? "below" : "at or above")
      << " the crossover 1/(eta*tau) = " << rec.crossover_mu_hz << " photons/s; "
      << (rec.kind == SchemeKind::free_running
              ? "duty cycle dominates, free running wins"
              : "dead time dominates, rapid gating wins");
  rec.rationale = msg.str();
  (void)rapid;
  return rec;
}

}  // namespace pcotdr
