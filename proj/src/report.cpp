#include "pcotdr/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "pcotdr/analytics.hpp"
#include "pcotdr/engine.hpp"

namespace pcotdr {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string build_report(const SimConfig& cfg, const CampaignResult* campaign,
                         const Trace* single_run) {
  std::ostringstream os;
  os << "# pcotdr run report\n\n## inputs (materialized)\n" << echo_config(cfg);

  os << "\n## derived\n";
  const double hnu = cfg.laser.photon_energy_j();
  const GateSchedule sched = build_schedule(cfg.scheme, cfg.laser, cfg.fiber);
  os << "photon_energy_j = " << num(hnu) << "\n";
  os << "pulse_extent_km = " << num(pulse_extent_km(cfg.fiber, cfg.laser)) << "\n";
  os << "round_trip_window_s = " << num(cfg.fiber.round_trip_delay_s()) << "\n";
  os << "delay_bins = " << sched.bin_count << "\n";
  os << "duty_cycle = " << num(sched.duty_cycle) << "\n";
  const double tau = cfg.scheme.effective_dead_time_s(cfg.apd);
  os << "effective_dead_time_s = " << num(tau) << "\n";

  analytics::NepInput nep_in;
  nep_in.efficiency = cfg.apd.efficiency;
  nep_in.phat_dc_hz = cfg.apd.dark_rate_hz;
  nep_in.gate_width_s = cfg.scheme.gate_width_s;
  nep_in.photon_energy_j = hnu;
  nep_in.n_gate =
      std::max<long>(1, static_cast<long>(cfg.campaign.dwell_s * cfg.laser.pulse_rate_hz));
  os << "nep_norm0_w_per_sqrt_hz = " << num(analytics::nep_norm0(nep_in)) << "\n";
  os << "nep0_w_at_dwell (n_gate = " << nep_in.n_gate << ") = " << num(analytics::nep0_w(nep_in))
     << "\n";
  if (cfg.apd.dark_rate_hz > 0) {
    const double dynr = analytics::dynamic_range_db(cfg.fiber, cfg.laser, cfg.apd.dark_rate_hz,
                                                    cfg.apd.efficiency, nep_in.n_gate);
    os << "predicted_dynamic_range_db = " << num(dynr)
       << "  # depends on the assumed capture ratio\n";
  }
  const double crossover = free_running_crossover_hz(cfg.apd.efficiency, tau);
  os << "free_running_crossover_photons_s = " << num(crossover) << "\n";
  const double first_bin_mu = backscatter_power_w(cfg.fiber, cfg.laser, 0.0) / hnu;
  os << "first_bin_photon_flux_s = " << num(first_bin_mu) << "\n";
  os << "first_bin_regime = " << (first_bin_mu < crossover ? "free_running" : "rapid_gating")
     << "\n";

  if (campaign != nullptr) {
    os << "\n## campaign result\n";
    os << "partials = " << campaign->partials.size() << "\n";
    os << "coverage = " << (campaign->full_coverage ? "full" : "partial") << "\n";
    os << "wall_time_simulated_s = " << num(campaign->wall_time_simulated_s) << "\n";
    os << "seed = " << campaign->seed << "\n";
    for (std::size_t k = 0; k < campaign->partials.size(); ++k) {
      const auto& p = campaign->partials[k];
      os << "partial_" << k << ": attenuation_db = " << num(p.attenuation_db)
         << ", usable_span_db = " << num(p.usable_span_db)
         << ", bins = " << p.trace.bins.size() << "\n";
    }
  } else if (single_run != nullptr) {
    os << "\n## run result\n";
    os << "bins = " << single_run->bins.size() << "\n";
    os << "wall_time_simulated_s = " << num(single_run->simulated_wall_time_s) << "\n";
    os << "seed = " << single_run->seed << "\n";
    long applied = 0, activated = 0, detections = 0;
    for (const auto& b : single_run->bins) {
      applied += b.gates_applied;
      activated += b.gates_activated;
      detections += b.detections;
    }
    os << "gates_applied = " << applied << ", gates_activated = " << activated
       << ", detections = " << detections << "\n";
  }

  os << "\n## assumptions\n";
  for (const auto& a : cfg.assumptions) os << "- " << a << "\n";
  return os.str();
}

}  // namespace pcotdr
