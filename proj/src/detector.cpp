#include "pcotdr/detector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pcotdr/errors.hpp"

namespace pcotdr {
namespace {

constexpr double k_trap_cap = 1.0 - 1e-12;

void decay_state(const ApdModel& apd, ApdState& state, double dt) {
  if (dt <= 0) return;
  state.trap_excess *= std::exp(-dt / apd.afterpulse.tau_trap_s);
  if (apd.persistence.kappa > 0 && apd.persistence.gamma_hz > 0)
    state.persistence_excess *= std::exp(-apd.persistence.gamma_hz * dt);
  state.time_s += dt;
}

}  // namespace

void ApdModel::validate() const {
  if (!(efficiency > 0 && efficiency <= 1))
    throw validation_error("apd.efficiency must be in (0, 1]");
  if (!(dark_rate_hz >= 0)) throw validation_error("apd.dark_rate_hz must be >= 0");
  if (!(afterpulse.a0 >= 0 && afterpulse.a0 < 1))
    throw validation_error("apd.afterpulse.a0 must be in [0, 1)");
  if (!(afterpulse.tau_trap_s > 0))
    throw validation_error("apd.afterpulse.tau_trap_s must be > 0");
  if (!(persistence.kappa >= 0)) throw validation_error("apd.persistence.kappa must be >= 0");
  if (!(persistence.gamma_hz >= 0))
    throw validation_error("apd.persistence.gamma_hz must be >= 0");
  if (!(dead_time_s >= 0)) throw validation_error("apd.dead_time_s must be >= 0");
  if (!(photon_energy_j > 0)) throw validation_error("apd.photon_energy_j must be > 0");
}

double detection_probability(const ApdModel& apd, double p_opt_w, double gate_width_s) {
  if (p_opt_w < 0) throw std::domain_error("detection_probability: negative optical power");
  if (gate_width_s <= 0) throw std::domain_error("detection_probability: gate width must be > 0");
  const double mu = p_opt_w / apd.photon_energy_j;
  return -std::expm1(-apd.efficiency * mu * gate_width_s);
}

double detection_probability_linearized(const ApdModel& apd, double p_opt_w,
                                        double gate_width_s) {
  if (p_opt_w < 0) throw std::domain_error("detection_probability: negative optical power");
  return apd.efficiency * (p_opt_w / apd.photon_energy_j) * gate_width_s;
}

AfterpulseProbability afterpulse_probability_gate(const ApdModel& apd, double dead_delay_s,
                                                  double gate_width_s) {
  if (dead_delay_s < 0) throw std::domain_error("afterpulse_probability_gate: negative delay");
  const double p10 = apd.afterpulse.a0 * std::exp(-dead_delay_s / apd.afterpulse.tau_trap_s);
  const double m = gate_width_s / k_afterpulse_reference_gate_s;
  AfterpulseProbability out;
  out.value = -std::expm1(m * std::log1p(-p10));  // 1 - (1 - p10)^m
  out.within_validity = gate_width_s <= 10e-6;
  return out;
}

PowerEstimate estimate_power(const ApdModel& apd, long n_det, double n_dc_expected,
                             long n_gate, double gate_width_s) {
  if (n_gate < 1) throw std::invalid_argument("estimate_power: n_gate must be >= 1");
  if (n_det < 0 || n_det > n_gate)
    throw std::invalid_argument("estimate_power: n_det outside [0, n_gate]");
  if (n_det == n_gate)
    throw saturation_error("estimate_power: all gates fired, only a lower bound exists");

  const double n = static_cast<double>(n_gate);
  const double p_cap = 1.0 - 0.5 / n;  // half-count resolution
  const auto invert = [&](double p) {
    p = std::clamp(p, 0.0, p_cap);
    return -apd.photon_energy_j / (apd.efficiency * gate_width_s) * std::log1p(-p);
  };
  const double sigma = std::sqrt(static_cast<double>(n_det));
  PowerEstimate est;
  est.power_w = invert((static_cast<double>(n_det) - n_dc_expected) / n);
  est.low_w = invert((static_cast<double>(n_det) - sigma - n_dc_expected) / n);
  est.high_w = invert((static_cast<double>(n_det) + sigma - n_dc_expected) / n);
  return est;
}

double gate_hazard(const ApdModel& apd, const ApdState& state, double p_opt_w,
                   double gate_width_s) {
  const double mu = p_opt_w / apd.photon_energy_j;
  double hazard = apd.efficiency * mu * gate_width_s + apd.dark_rate_hz * gate_width_s;
  if (apd.afterpulse.a0 > 0 && state.trap_excess > 0) {
    const double p10 = std::min(state.trap_excess, k_trap_cap);
    const double m = gate_width_s / k_afterpulse_reference_gate_s;
    hazard += -m * std::log1p(-p10);
  }
  if (apd.persistence.kappa > 0 && state.persistence_excess > 0) {
    // expected carrier releases while the gate is armed
    hazard += state.persistence_excess * -std::expm1(-apd.persistence.gamma_hz * gate_width_s);
  }
  return hazard;
}

GateOutcome sample_gate(const ApdModel& apd, ApdState& state, double p_opt_w,
                        double gate_start_s, double gate_width_s, RngStream& rng) {
  if (gate_start_s < state.dead_until_s)
    throw std::logic_error("sample_gate: gate overlaps dead time");
  if (gate_start_s + 1e-15 < state.time_s)
    throw std::logic_error("sample_gate: gate starts before current state time");
  decay_state(apd, state, gate_start_s - state.time_s);
  state.time_s = gate_start_s;

  const double mu = p_opt_w / apd.photon_energy_j;
  const double h_sig = apd.efficiency * mu * gate_width_s;
  const double h_dark = apd.dark_rate_hz * gate_width_s;
  double h_ap = 0.0;
  if (apd.afterpulse.a0 > 0 && state.trap_excess > 0) {
    const double p10 = std::min(state.trap_excess, k_trap_cap);
    h_ap = -(gate_width_s / k_afterpulse_reference_gate_s) * std::log1p(-p10);
  }
  double h_cp = 0.0;
  if (apd.persistence.kappa > 0 && state.persistence_excess > 0)
    h_cp = state.persistence_excess * -std::expm1(-apd.persistence.gamma_hz * gate_width_s);

  const double total = h_sig + h_dark + h_ap + h_cp;
  const double p_det = -std::expm1(-total);

  GateOutcome outcome;
  const double u = rng.next_unit();
  outcome.detected = total > 0 && u < p_det;

  decay_state(apd, state, gate_width_s);  // pools keep decaying while armed

  if (outcome.detected) {
    const double v = rng.next_unit() * total;
    if (v < h_sig)
      outcome.cause = DetectionCause::signal;
    else if (v < h_sig + h_dark)
      outcome.cause = DetectionCause::dark;
    else if (v < h_sig + h_dark + h_ap)
      outcome.cause = DetectionCause::afterpulse;
    else
      outcome.cause = DetectionCause::persistence;
    state.trap_excess = std::min(state.trap_excess + apd.afterpulse.a0, k_trap_cap);
    state.dead_until_s = std::max(state.dead_until_s, state.time_s + apd.dead_time_s);
  }
  return outcome;
}

void accumulate_persistence(const ApdModel& apd, ApdState& state, double p_opt_off_w,
                            double duration_s) {
  if (duration_s < 0)
    throw std::invalid_argument("accumulate_persistence: negative duration");
  if (duration_s == 0) return;
  state.trap_excess *= std::exp(-duration_s / apd.afterpulse.tau_trap_s);
  state.time_s += duration_s;
  if (apd.persistence.kappa <= 0) return;  // persistence disabled
  const double inflow = apd.persistence.kappa * (p_opt_off_w / apd.photon_energy_j);
  const double g = apd.persistence.gamma_hz;
  if (g > 0) {
    const double decay = std::exp(-g * duration_s);
    state.persistence_excess = state.persistence_excess * decay + inflow / g * (1.0 - decay);
  } else {
    state.persistence_excess += inflow * duration_s;
  }
}

}  // namespace pcotdr
