#include "pcotdr/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "pcotdr/analytics.hpp"
#include "pcotdr/config.hpp"
#include "pcotdr/engine.hpp"
#include "pcotdr/errors.hpp"
#include "pcotdr/report.hpp"

namespace pcotdr {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9e", v);
  return buf;
}

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::string format = "csv";
  bool verbose = false;
  int threads = 1;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << text;
}

/// Single-row (or small-table) CSV next to a human-readable line.
void emit_csv(const GlobalFlags& g, const std::string& csv) {
  if (!g.out_path.empty())
    write_text(g.out_path, csv);
  else
    std::cout << csv;
}

int cmd_simulate(const GlobalFlags& g, const std::string& scheme_override,
                 const std::string& mode_override, bool dark_run, bool atten_given,
                 double atten_db, const std::string& dark_baseline) {
  SimConfig cfg = load_config(g.config_path);
  if (!scheme_override.empty()) cfg.scheme.kind = scheme_kind_from_string(scheme_override);
  if (!mode_override.empty()) cfg.campaign.mode = mode_override;
  if (g.seed) cfg.campaign.seed = *g.seed;
  cfg.scheme.validate();
  if (cfg.campaign.mode == "campaign" && cfg.scheme.kind != SchemeKind::basic)
    throw validation_error("campaign.mode=campaign requires scheme.type=basic");
  const std::string out = g.out_path.empty() ? cfg.output.path : g.out_path;

  int code = exit_ok;
  std::string report;
  if (cfg.campaign_mode() && !dark_run) {
    CampaignOptions opts;
    opts.dwell_per_bin_s = cfg.campaign.dwell_s;
    opts.snr_floor = cfg.campaign.snr_floor;
    opts.overlap_km = cfg.campaign.overlap_km;
    opts.target_rate = cfg.campaign.target_rate;
    opts.seed = cfg.campaign.seed;
    opts.threads = g.threads;
    const CampaignResult result =
        partial_trace_campaign(cfg.fiber, cfg.laser, cfg.apd, cfg.scheme, opts);
    write_trace_csv(out, result.stitched);
    for (std::size_t k = 0; k < result.partials.size(); ++k)
      write_trace_csv(out + ".partial" + std::to_string(k) + ".csv",
                      result.partials[k].trace);
    report = build_report(cfg, &result, nullptr);
    if (!result.full_coverage) code = exit_partial_coverage;
  } else {
    AcquisitionOptions opts;
    opts.duration_s = cfg.campaign.dwell_s;
    opts.seed = cfg.campaign.seed;
    opts.threads = g.threads;
    opts.laser_off = dark_run;
    if (atten_given) {
      opts.attenuation_db = atten_db;
    } else if (!dark_run) {
      // same procedure as the campaign: pad the detector to the target rate;
      // signals already below it run unattenuated
      try {
        opts.attenuation_db = auto_attenuate(cfg.fiber, cfg.laser, cfg.apd, cfg.scheme,
                                             cfg.campaign.target_rate, cfg.campaign.seed);
      } catch (const campaign_error&) {
        opts.attenuation_db = 0.0;
      }
    }
    Trace trace = run_acquisition(cfg.fiber, cfg.laser, cfg.apd, cfg.scheme, opts);
    if (!dark_baseline.empty())
      apply_dark_baseline(trace, read_trace_csv(dark_baseline), cfg.apd);
    write_trace_csv(out, trace);
    report = build_report(cfg, nullptr, &trace);
    bool any_estimate = false, any_data = false;
    for (const auto& b : trace.bins) {
      if (b.gates_activated > 0) any_data = true;
      if (std::isfinite(b.est_power_w)) any_estimate = true;
    }
    if (any_data && !any_estimate) code = exit_saturation;  // every measured bin pinned high
  }
  write_text(out + ".report.txt", report);
  if (g.verbose) std::cout << report;
  std::cout << "wrote " << out << (code == exit_partial_coverage ? " (partial coverage)" : "")
            << "\n";
  return code;
}

int cmd_analyze_nep(const GlobalFlags& g, double efficiency, double dark_rate_hz,
                    double gate_width_s, long n_gate, double wavelength_m, double p_opt_w) {
  analytics::NepInput in = analytics::NepInput::from_power(
      efficiency, p_opt_w, dark_rate_hz, gate_width_s, n_gate, photon_energy_j(wavelength_m));
  std::ostringstream csv;
  csv << "efficiency,dark_rate_hz,gate_width_s,n_gate,p_opt_w,nep_w,nep0_w,nep_norm_w_sqrthz,"
         "nep_norm0_w_sqrthz\n"
      << num(efficiency) << ',' << num(dark_rate_hz) << ',' << num(gate_width_s) << ','
      << n_gate << ',' << num(p_opt_w) << ',' << num(analytics::nep_w(in)) << ','
      << num(analytics::nep0_w(in)) << ',' << num(analytics::nep_norm(in)) << ','
      << num(analytics::nep_norm0(in)) << '\n';
  emit_csv(g, csv.str());
  std::cout << "NEP_norm = " << analytics::nep_norm(in)
            << " W/sqrt(Hz), NEP_norm0 = " << analytics::nep_norm0(in) << " W/sqrt(Hz)\n";
  return exit_ok;
}

int cmd_analyze_dynr(const GlobalFlags& g, double capture_ratio, double alpha_s,
                     double peak_power_w, double pulse_width_s, double efficiency,
                     double dark_rate_hz, long n_gate, double wavelength_m,
                     double group_speed_km_s) {
  const double dl_p = group_speed_km_s * pulse_width_s;
  const double p_bs0 = capture_ratio * peak_power_w * alpha_s * dl_p;
  analytics::NepInput in;
  in.efficiency = efficiency;
  in.phat_dc_hz = dark_rate_hz;
  in.gate_width_s = pulse_width_s;
  in.n_gate = n_gate;
  in.photon_energy_j = photon_energy_j(wavelength_m);
  const double nep0 = analytics::nep0_w(in);
  const double dynr = analytics::dynamic_range_db(p_bs0, nep0);
  std::ostringstream csv;
  csv << "capture_ratio,alpha_s_per_km,peak_power_w,pulse_width_s,n_gate,p_bs0_w,nep0_w,"
         "dynamic_range_db\n"
      << num(capture_ratio) << ',' << num(alpha_s) << ',' << num(peak_power_w) << ','
      << num(pulse_width_s) << ',' << n_gate << ',' << num(p_bs0) << ',' << num(nep0) << ','
      << num(dynr) << '\n';
  emit_csv(g, csv.str());
  std::cout << "dynamic range = " << dynr
            << " dB (5log10 convention; capture ratio is an assumed value)\n";
  return exit_ok;
}

int cmd_analyze_time(const GlobalFlags& g, double snr, double bandwidth_hz, double p_opt_dbm,
                     double f_pulse_hz, double efficiency, double dark_rate_hz,
                     double wavelength_m, double nep_norm_override) {
  const double p_opt_w = dbm_to_w(p_opt_dbm);
  double nep = nep_norm_override;
  if (!(nep > 0)) {
    analytics::NepInput in = analytics::NepInput::from_power(
        efficiency, p_opt_w, dark_rate_hz, 1e-6, 1, photon_energy_j(wavelength_m));
    nep = analytics::nep_norm(in);
  }
  const double t = analytics::measurement_time_s(snr, nep, bandwidth_hz, p_opt_w, f_pulse_hz);
  std::ostringstream csv;
  csv << "snr,nep_norm_w_sqrthz,bandwidth_hz,p_opt_dbm,f_pulse_hz,time_s\n"
      << num(snr) << ',' << num(nep) << ',' << num(bandwidth_hz) << ',' << num(p_opt_dbm) << ','
      << num(f_pulse_hz) << ',' << num(t) << '\n';
  emit_csv(g, csv.str());
  std::cout << "measurement time = " << t << " s (NEP_norm = " << nep << " W/sqrt(Hz))\n";
  return exit_ok;
}

int cmd_analyze_twopoint(const GlobalFlags& g, double x_db) {
  const double alpha = analytics::two_point_advantage(x_db);
  std::ostringstream csv;
  csv << "x_db,alpha\n" << num(x_db) << ',' << num(alpha) << '\n';
  emit_csv(g, csv.str());
  std::cout << "alpha = " << alpha << " (pulse can shrink by 1/" << 1.0 / alpha
            << " at equal dynamic range)\n";
  return exit_ok;
}

int cmd_analyze_ratio(const GlobalFlags& g, double conv_nep, double pc_nep) {
  const double r = analytics::time_ratio(analytics::ConventionalDetector{conv_nep}, pc_nep);
  std::ostringstream csv;
  csv << "conv_nep_norm,pc_nep_norm,time_ratio\n"
      << num(conv_nep) << ',' << num(pc_nep) << ',' << num(r) << '\n';
  emit_csv(g, csv.str());
  std::cout << "t_conv / t_pc = " << r << "\n";
  return exit_ok;
}

int cmd_plan_rates(const GlobalFlags& g, double tau_freerun_s, double tau_rapid_s,
                   double duty_rapid, double efficiency) {
  // detection rate across the flux axis for both schemes plus the crossover
  std::ostringstream csv;
  csv << "mu_photons_s,f_det_free_running_hz,f_det_rapid_hz,recommended\n";
  const double crossover = free_running_crossover_hz(efficiency, tau_freerun_s);
  for (double exp10 = 3.0; exp10 <= 10.01; exp10 += 0.25) {
    const double mu = std::pow(10.0, exp10);
    const double f_free = detection_rate_hz(efficiency, mu, 1.0, tau_freerun_s);
    const double f_rapid = detection_rate_hz(efficiency, mu, duty_rapid, tau_rapid_s);
    csv << num(mu) << ',' << num(f_free) << ',' << num(f_rapid) << ','
        << (mu < crossover ? "free_running" : "rapid_gating") << '\n';
  }
  emit_csv(g, csv.str());
  std::cout << "crossover at 1/(eta*tau) = " << crossover << " photons/s\n";
  return exit_ok;
}

int cmd_plan(const GlobalFlags& g, double p_sig, double tau_s, double act_min,
             double gate_width_s, double efficiency, double wavelength_m, bool table) {
  std::ostringstream csv;
  csv << "p_sig_gate1,activation_min,f_tau_continuous,gates_per_dead_time,f_gate_max_hz,b,"
         "mu_max_hz,p_opt_max_dbm,regime\n";
  const double hnu = photon_energy_j(wavelength_m);
  auto row = [&](double p, double a) {
    const GateFrequencyPlan plan = max_gate_frequency(p, tau_s, a, gate_width_s);
    const FreeRunningLimit lim = free_running_threshold(efficiency, tau_s, a, hnu);
    csv << num(p) << ',' << num(a) << ',' << num(plan.f_continuous_hz * tau_s) << ','
        << plan.gates_per_dead_time << ',' << num(plan.f_integer_hz) << ',' << num(lim.b) << ','
        << num(lim.mu_max_hz) << ',' << num(w_to_dbm(lim.p_opt_max_w)) << ','
        << (plan.free_running_regime ? "free_running" : "gated") << '\n';
  };
  if (table) {
    for (double a : {0.2, 0.4, 0.6, 0.8})
      for (double p = 0.05; p < 0.96; p += 0.05) row(p, a);
  } else {
    row(p_sig, act_min);
  }
  emit_csv(g, csv.str());
  if (!table) {
    const GateFrequencyPlan plan = max_gate_frequency(p_sig, tau_s, act_min, gate_width_s);
    std::cout << "f_gate_max = " << plan.f_integer_hz << " Hz (" << plan.gates_per_dead_time
              << " gates per dead time; continuous solution f*tau = "
              << plan.f_continuous_hz * tau_s << ")"
              << (plan.free_running_regime ? "; cap 1/gate_width binds -> free running" : "")
              << "\n";
  }
  return exit_ok;
}

int cmd_compare(const GlobalFlags& g, const std::string& config_a, const std::string& config_b,
                double attenuation_db) {
  SimConfig a = load_config(config_a);
  SimConfig b = load_config(config_b);
  if (g.seed) {
    a.campaign.seed = *g.seed;
    b.campaign.seed = *g.seed;
  }
  // the comparison only makes sense on one and the same fiber
  const std::string fib_a = echo_config(a).substr(0, echo_config(a).find("[laser]"));
  const std::string fib_b = echo_config(b).substr(0, echo_config(b).find("[laser]"));
  if (fib_a != fib_b) throw comparison_error("compare: the two configs describe different fibers");

  auto run = [&](const SimConfig& cfg) {
    AcquisitionOptions opts;
    opts.duration_s = cfg.campaign.dwell_s;
    opts.attenuation_db = attenuation_db;
    opts.seed = cfg.campaign.seed;
    opts.threads = g.threads;
    return run_acquisition(cfg.fiber, cfg.laser, cfg.apd, cfg.scheme, opts);
  };
  const Trace ta = run(a);
  const Trace tb = run(b);

  // join on the coarser delay grid
  const Trace& coarse = ta.bin_pitch_s >= tb.bin_pitch_s ? ta : tb;
  const Trace& fine = ta.bin_pitch_s >= tb.bin_pitch_s ? tb : ta;
  const bool a_is_coarse = &coarse == &ta;
  std::ostringstream csv;
  csv << "distance_km,a_est_power_w,a_trace_db,b_est_power_w,b_trace_db,delta_db\n";
  for (const auto& cb : coarse.bins) {
    const long j = std::lround(cb.delay_s / fine.bin_pitch_s);
    if (j < 0 || j >= static_cast<long>(fine.bins.size())) continue;
    const TraceBin& fb = fine.bins[static_cast<std::size_t>(j)];
    const TraceBin& ba = a_is_coarse ? cb : fb;
    const TraceBin& bb = a_is_coarse ? fb : cb;
    csv << num(cb.distance_km) << ',' << num(ba.est_power_w) << ',' << num(ba.db_value) << ','
        << num(bb.est_power_w) << ',' << num(bb.db_value) << ','
        << num(ba.db_value - bb.db_value) << '\n';
  }
  emit_csv(g, csv.str());

  auto summary = [&](const char* tag, const SimConfig& cfg, const Trace& t) {
    long applied = 0, activated = 0, detections = 0;
    for (const auto& bin : t.bins) {
      applied += bin.gates_applied;
      activated += bin.gates_activated;
      detections += bin.detections;
    }
    const double rate =
        activated > 0 ? static_cast<double>(detections) / static_cast<double>(activated) : 0.0;
    const double det_per_s = detections / t.simulated_wall_time_s;
    // projected wall time for the last estimated bin to reach the SNR floor
    double t_floor = std::numeric_limits<double>::quiet_NaN();
    for (auto it = t.bins.rbegin(); it != t.bins.rend(); ++it) {
      if (!std::isfinite(it->est_power_w) || it->detections <= 0) continue;
      const double snr = Trace::bin_snr(*it, cfg.apd.dark_rate_hz, t.gate_width_s);
      if (snr > 0) {
        t_floor = t.simulated_wall_time_s * (cfg.campaign.snr_floor / snr) *
                  (cfg.campaign.snr_floor / snr);
        break;
      }
    }
    std::cout << tag << ": scheme = " << to_string(cfg.scheme.kind)
              << ", detections = " << detections << " (" << rate << "/activated gate, "
              << det_per_s << "/s), simulated wall time = " << t.simulated_wall_time_s
              << " s, projected time to SNR floor at last bin = " << t_floor << " s\n";
    for (const auto& ev : cfg.fiber.events) {
      try {
        const DeadZoneResult dz = measure_dead_zone(t, ev.position_km);
        std::cout << tag << ": dead zone after event at " << ev.position_km << " km = "
                  << dz.length_km << " km" << (dz.recovered ? "" : " (unrecovered)") << "\n";
      } catch (const std::exception&) {
        // trace too short past the event; skip the metric
      }
    }
  };
  summary("A", a, ta);
  summary("B", b, tb);
  return exit_ok;
}

int cmd_stitch(const GlobalFlags& g, const std::vector<std::string>& inputs) {
  if (inputs.empty()) throw std::runtime_error("stitch: no input traces");
  std::vector<Trace> traces;
  traces.reserve(inputs.size());
  double pitch = 0.0;
  for (const auto& path : inputs) {
    traces.push_back(read_trace_csv(path));
    Trace& t = traces.back();
    if (t.bins.size() < 2) throw stitch_error("stitch: trace '" + path + "' has < 2 bins");
    if (pitch == 0.0) pitch = t.bin_pitch_s;
    if (std::abs(t.bin_pitch_s - pitch) > 1e-12 * std::max(1.0, pitch))
      throw stitch_error("stitch: traces use different delay grids");
    // approximate per-bin sigma from counts (small-p form)
    for (auto& bin : t.bins)
      if (bin.detections > 0)
        bin.db_sigma = 5.0 / std::log(10.0) / std::sqrt(static_cast<double>(bin.detections));
  }
  std::vector<PartialTrace> partials;
  partials.reserve(traces.size());
  for (auto& t : traces) {
    PartialTrace p;
    p.attenuation_db = t.bins.front().attenuation_db;
    p.first_bin_index = std::lround(t.bins.front().delay_s / pitch);
    p.trace = std::move(t);
    partials.push_back(std::move(p));
  }
  const Trace stitched = stitch_traces(partials);
  const std::string out = g.out_path.empty() ? std::string("stitched.csv") : g.out_path;
  write_trace_csv(out, stitched);
  std::cout << "wrote " << out << " (" << stitched.bins.size() << " bins from "
            << partials.size() << " partials)\n";
  return exit_ok;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"pcotdr: photon-counting OTDR simulator and analytic toolkit"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config_path, "configuration file");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "seed override");
  app.add_option("--out", g.out_path, "output path");
  app.add_option("--format", g.format, "output format (csv)")
      ->check(CLI::IsMember({"csv"}));
  app.add_flag("--verbose", g.verbose, "print the run report");
  app.add_option("--threads", g.threads, "worker threads for basic-mode positions")
      ->check(CLI::PositiveNumber);

  // simulate
  auto* sim = app.add_subcommand("simulate", "run a trace acquisition or campaign");
  std::string scheme_override, mode_override;
  bool dark_run = false;
  double sim_atten_db = 0.0;
  sim->add_option("--scheme", scheme_override,
                  "override scheme.type (basic|train_of_gates|free_running|rapid_gating)");
  sim->add_option("--mode", mode_override, "override campaign.mode (auto|campaign|single)")
      ->check(CLI::IsMember({"auto", "campaign", "single"}));
  sim->add_flag("--dark-run", dark_run, "laser off: dark-count baseline");
  auto* sim_atten = sim->add_option("--attenuation-db", sim_atten_db,
                                    "fixed detector-side attenuation (default: auto)");
  std::string dark_baseline;
  sim->add_option("--dark-baseline", dark_baseline,
                  "dark-run CSV whose measured counts replace the analytic dark subtraction");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "closed-form predictors");
  analyze->require_subcommand(1);
  double efficiency = 0.1, dark_rate_hz = 2000.0, gate_width_s = 1e-6;
  long n_gate = 90000;
  double wavelength_m = k_default_wavelength_m, p_opt_w = 0.0;
  auto* nep = analyze->add_subcommand("nep", "noise equivalent power family");
  nep->add_option("--efficiency", efficiency);
  nep->add_option("--dark-rate-hz", dark_rate_hz);
  nep->add_option("--gate-width-s", gate_width_s);
  nep->add_option("--n-gate", n_gate);
  nep->add_option("--wavelength-m", wavelength_m);
  nep->add_option("--p-opt-w", p_opt_w);

  double capture_ratio = 0.0015, alpha_s = 0.04, peak_power_w = 0.4, pulse_width_s = 1e-6;
  double group_speed = k_default_group_speed_km_s;
  auto* dynr = analyze->add_subcommand("dynr", "dynamic range (5log10 convention)");
  dynr->add_option("--capture-ratio", capture_ratio);
  dynr->add_option("--alpha-s", alpha_s);
  dynr->add_option("--peak-power-w", peak_power_w);
  dynr->add_option("--pulse-width-s", pulse_width_s);
  dynr->add_option("--efficiency", efficiency);
  dynr->add_option("--dark-rate-hz", dark_rate_hz);
  dynr->add_option("--n-gate", n_gate);
  dynr->add_option("--wavelength-m", wavelength_m);
  dynr->add_option("--group-speed-km-s", group_speed);

  double snr = 4.0, bandwidth_hz = 1e7, p_opt_dbm = -103.0, f_pulse_hz = 500.0;
  double nep_norm_override = 0.0;
  auto* timecmd = analyze->add_subcommand("time", "measurement time for a target SNR");
  timecmd->add_option("--snr", snr);
  timecmd->add_option("--bandwidth-hz", bandwidth_hz);
  timecmd->add_option("--p-opt-dbm", p_opt_dbm);
  timecmd->add_option("--f-pulse-hz", f_pulse_hz);
  timecmd->add_option("--efficiency", efficiency);
  timecmd->add_option("--dark-rate-hz", dark_rate_hz);
  timecmd->add_option("--wavelength-m", wavelength_m);
  timecmd->add_option("--nep-norm", nep_norm_override, "use this NEP_norm instead of composing");

  double x_db = 10.0;
  auto* twopoint = analyze->add_subcommand("twopoint", "2-point resolution advantage");
  twopoint->add_option("--x-db", x_db);

  double conv_nep = 6.3e-15, pc_nep = 3.6e-16;
  auto* ratio = analyze->add_subcommand("ratio", "conventional/photon-counting time ratio");
  ratio->add_option("--conv-nep-norm", conv_nep);
  ratio->add_option("--pc-nep-norm", pc_nep);

  // plan (also reachable as `analyze plan`)
  double p_sig = 0.25, tau_s = 1e-6, act_min = 0.4, plan_gate_width_s = 0.0;
  bool plan_table = false, plan_rates = false;
  double tau_freerun_s = 1e-5, tau_rapid_s = 1e-8, duty_rapid = 0.2;
  auto add_plan = [&](CLI::App* parent) {
    auto* plan = parent->add_subcommand("plan", "gating-frequency and flux-regime planner");
    plan->add_option("--p-sig", p_sig, "detection probability in the first gate");
    plan->add_option("--tau-s", tau_s, "dead time");
    plan->add_option("--act-min", act_min, "activation floor");
    plan->add_option("--gate-width-s", plan_gate_width_s, "cap f_gate at 1/gate width");
    plan->add_option("--efficiency", efficiency);
    plan->add_option("--wavelength-m", wavelength_m);
    plan->add_flag("--table", plan_table, "emit the full threshold table");
    plan->add_flag("--rates", plan_rates, "emit detection rates over the flux axis instead");
    plan->add_option("--tau-freerun-s", tau_freerun_s, "free-running dead time for --rates");
    plan->add_option("--tau-rapid-s", tau_rapid_s, "rapid-gating dead time for --rates");
    plan->add_option("--duty-rapid", duty_rapid, "rapid-gating duty cycle for --rates");
    return plan;
  };
  auto* plan_top = add_plan(&app);
  auto* plan_sub = add_plan(analyze);

  // compare
  std::string config_a, config_b;
  double cmp_atten_db = 0.0;
  auto* compare = app.add_subcommand("compare", "run two configs on one fiber and join the traces");
  compare->add_option("--config-a", config_a)->required();
  compare->add_option("--config-b", config_b)->required();
  compare->add_option("--attenuation-db", cmp_atten_db, "detector-side attenuation for both runs");

  // stitch
  std::vector<std::string> stitch_inputs;
  auto* stitch = app.add_subcommand("stitch", "stitch partial trace CSVs offline");
  stitch->add_option("inputs", stitch_inputs, "partial trace CSV files");

  // let global flags (--out, --seed, ...) appear after the subcommand
  for (CLI::App* s : {sim, analyze, nep, dynr, timecmd, twopoint, ratio, plan_top, plan_sub,
                      compare, stitch})
    s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }

  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (sim->parsed()) {
      if (g.config_path.empty()) throw validation_error("simulate: --config is required");
      return cmd_simulate(g, scheme_override, mode_override, dark_run, sim_atten->count() > 0,
                          sim_atten_db, dark_baseline);
    }
    if (nep->parsed()) return cmd_analyze_nep(g, efficiency, dark_rate_hz, gate_width_s, n_gate,
                                              wavelength_m, p_opt_w);
    if (dynr->parsed())
      return cmd_analyze_dynr(g, capture_ratio, alpha_s, peak_power_w, pulse_width_s, efficiency,
                              dark_rate_hz, n_gate, wavelength_m, group_speed);
    if (timecmd->parsed())
      return cmd_analyze_time(g, snr, bandwidth_hz, p_opt_dbm, f_pulse_hz, efficiency,
                              dark_rate_hz, wavelength_m, nep_norm_override);
    if (twopoint->parsed()) return cmd_analyze_twopoint(g, x_db);
    if (ratio->parsed()) return cmd_analyze_ratio(g, conv_nep, pc_nep);
    if (plan_top->parsed() || plan_sub->parsed()) {
      if (plan_rates) return cmd_plan_rates(g, tau_freerun_s, tau_rapid_s, duty_rapid, efficiency);
      return cmd_plan(g, p_sig, tau_s, act_min, plan_gate_width_s, efficiency, wavelength_m,
                      plan_table);
    }
    if (compare->parsed()) return cmd_compare(g, config_a, config_b, cmp_atten_db);
    if (stitch->parsed()) return cmd_stitch(g, stitch_inputs);
  } catch (const config_parse_error& e) {
    std::cerr << "config parse error: " << e.what() << "\n";
    return exit_config_parse;
  } catch (const validation_error& e) {
    std::cerr << "config validation error: " << e.what() << "\n";
    return exit_config_validation;
  } catch (const saturation_error& e) {
    std::cerr << "saturation error: " << e.what() << "\n";
    return exit_saturation;
  } catch (const campaign_error& e) {
    std::cerr << "campaign error: " << e.what() << "\n";
    return exit_campaign;
  } catch (const stitch_error& e) {
    std::cerr << "stitch error: " << e.what() << "\n";
    return exit_stitch;
  } catch (const comparison_error& e) {
    std::cerr << "comparison error: " << e.what() << "\n";
    return exit_comparison;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_io;
  }
  return exit_usage;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("pcotdr");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace pcotdr
