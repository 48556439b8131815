#include "pcotdr/analytics.hpp"

#include <cmath>
#include <stdexcept>

namespace pcotdr {
namespace analytics {

NepInput NepInput::from_gate_probabilities(double efficiency, double p_sig_gate,
                                           double p_dc_gate, double gate_width_s, long n_gate,
                                           double photon_energy_j) {
  NepInput in;
  in.efficiency = efficiency;
  in.phat_sig_hz = p_sig_gate / gate_width_s;
  in.phat_dc_hz = p_dc_gate / gate_width_s;
  in.gate_width_s = gate_width_s;
  in.n_gate = n_gate;
  in.photon_energy_j = photon_energy_j;
  return in;
}

NepInput NepInput::from_power(double efficiency, double p_opt_w, double phat_dc_hz,
                              double gate_width_s, long n_gate, double photon_energy_j) {
  NepInput in;
  in.efficiency = efficiency;
  in.phat_sig_hz = efficiency * p_opt_w / photon_energy_j;
  in.phat_dc_hz = phat_dc_hz;
  in.gate_width_s = gate_width_s;
  in.n_gate = n_gate;
  in.photon_energy_j = photon_energy_j;
  return in;
}

double nep_w(const NepInput& in) {
  if (in.n_gate < 1) throw std::invalid_argument("nep_w: n_gate must be >= 1");
  return in.photon_energy_j / in.efficiency *
         std::sqrt((in.p_sig_gate() + in.p_dc_gate()) /
                   (static_cast<double>(in.n_gate) * in.gate_width_s * in.gate_width_s));
}

double nep0_w(const NepInput& in) {
  if (in.n_gate < 1) throw std::invalid_argument("nep0_w: n_gate must be >= 1");
  return in.photon_energy_j / in.efficiency *
         std::sqrt(in.p_dc_gate() /
                   (static_cast<double>(in.n_gate) * in.gate_width_s * in.gate_width_s));
}

double nep_norm(const NepInput& in) {
  return in.photon_energy_j / in.efficiency *
         std::sqrt(2.0 * (in.phat_sig_hz + in.phat_dc_hz));
}

double nep_norm0(const NepInput& in) {
  return in.photon_energy_j / in.efficiency * std::sqrt(2.0 * in.phat_dc_hz);
}

double dynamic_range_db(double p_bs0_w, double nep0_w_) {
  if (!(p_bs0_w > 0) || !(nep0_w_ > 0))
    throw std::domain_error("dynamic_range_db: inputs must be > 0");
  return 5.0 * std::log10(p_bs0_w / nep0_w_);
}

double dynamic_range_db(const FiberLink& link, const LaserConfig& laser, double phat_dc_hz,
                        double efficiency, long n_gate) {
  const double p_bs0 = backscatter_power_w(link, laser, 0.0);
  NepInput in;
  in.efficiency = efficiency;
  in.phat_dc_hz = phat_dc_hz;
  in.gate_width_s = laser.pulse_width_s;  // gate width matched to the pulse
  in.n_gate = n_gate;
  in.photon_energy_j = laser.photon_energy_j();
  return dynamic_range_db(p_bs0, nep0_w(in));
}

double two_point_advantage(double x_db) {
  if (x_db < 0) throw std::domain_error("two_point_advantage: x must be >= 0");
  return std::pow(10.0, -2.0 * x_db / 15.0);
}

double measurement_time_s(double snr_target, double nep_norm_w_sqrt_hz, double bandwidth_hz,
                          double p_opt_w, double f_pulse_hz) {
  if (!(snr_target > 0) || !(nep_norm_w_sqrt_hz > 0) || !(bandwidth_hz > 0) ||
      !(p_opt_w > 0) || !(f_pulse_hz > 0))
    throw std::domain_error("measurement_time_s: inputs must be > 0");
  const double q = snr_target * nep_norm_w_sqrt_hz * std::sqrt(bandwidth_hz) / p_opt_w;
  return q * q / f_pulse_hz;
}

double snr_linear(double p_opt_w, double t_s, double f_pulse_hz, double nep_norm_w_sqrt_hz,
                  double bandwidth_hz) {
  return p_opt_w * std::sqrt(f_pulse_hz * t_s) /
         (nep_norm_w_sqrt_hz * std::sqrt(bandwidth_hz));
}

double snr_exact(double p_opt_w, double t_s, double f_pulse_hz, double nep_norm_w_sqrt_hz,
                 double gate_width_s, double efficiency, double photon_energy_j) {
  const double p_sig = -std::expm1(-efficiency * p_opt_w * gate_width_s / photon_energy_j);
  return std::sqrt(2.0) * photon_energy_j / efficiency * p_sig *
         std::sqrt(f_pulse_hz * t_s) / (nep_norm_w_sqrt_hz * std::sqrt(gate_width_s));
}

double time_ratio(const ConventionalDetector& conv, double pc_nep_norm_w_sqrt_hz) {
  if (!(conv.nep_norm_w_per_sqrt_hz > 0) || !(pc_nep_norm_w_sqrt_hz > 0))
    throw std::domain_error("time_ratio: NEPs must be > 0");
  const double r = conv.nep_norm_w_per_sqrt_hz / pc_nep_norm_w_sqrt_hz;
  return r * r;
}

}  // namespace analytics
}  // namespace pcotdr
