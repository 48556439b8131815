#include "pcotdr/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <thread>

#include "pcotdr/errors.hpp"

namespace pcotdr {
namespace {

constexpr double k_nan = std::numeric_limits<double>::quiet_NaN();
constexpr double k_db_per_neper5 = 5.0 / 2.302585092994046;  // 5/ln(10)

struct RunContext {
  const FiberLink* link = nullptr;
  const LaserConfig* laser = nullptr;
  ApdModel apd;  // dead time already replaced by the scheme override
  GateSchedule sched;
  double atten_factor = 1.0;
  double attenuation_db = 0.0;
  bool laser_off = false;
  std::uint64_t seed = 1;
  std::uint64_t timeline = 0;
  double pulse_period_s = 0.0;

  std::vector<double> bin_delay_s;
  std::vector<double> bin_power_w;     // attenuated power on the detector
  std::vector<double> bin_eps_preload;  // basic mode: persistence pool at gate start
};

double detector_power(const RunContext& ctx, double delay_s) {
  if (ctx.laser_off) return 0.0;
  return incident_power_w(*ctx.link, *ctx.laser, delay_s) * ctx.atten_factor;
}

/// Persistence pool right before a basic-mode gate at each bin delay. The
/// illumination profile repeats every pulse, so the pool value is a
/// deterministic function of the delay: kappa * integral of the attenuated
/// photon rate against the pool decay, plus the steady-state carry-over from
/// previous pulses (armed-gate exclusions are ignored in the carry term; it
/// is already vanishing for gamma * pulse period >> 1).
std::vector<double> basic_persistence_preload(const RunContext& ctx) {
  const std::size_t n = ctx.bin_delay_s.size();
  std::vector<double> preload(n, 0.0);
  const auto& pp = ctx.apd.persistence;
  if (pp.kappa <= 0 || pp.gamma_hz <= 0 || ctx.laser_off) return preload;

  const double hnu = ctx.apd.photon_energy_j;
  const double window = ctx.sched.window_s;
  const double bin_pitch = ctx.sched.bin_pitch_s;
  const long substeps = std::max<long>(1, std::lround(std::ceil(bin_pitch * pp.gamma_hz / 0.25)));
  const double h = bin_pitch / static_cast<double>(substeps);
  const double decay = std::exp(-pp.gamma_hz * h);

  double eps = 0.0;
  double t = 0.0;
  std::vector<double> at_bin(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    while (t + h / 2 < ctx.bin_delay_s[i]) {
      const double flux = detector_power(ctx, t + h / 2) / hnu;
      eps = eps * decay + pp.kappa * flux / pp.gamma_hz * (1.0 - decay);
      t += h;
    }
    at_bin[i] = eps;
  }
  // run out the rest of the window for the carry term
  double eps_end = eps;
  while (t + h / 2 < window) {
    const double flux = detector_power(ctx, t + h / 2) / hnu;
    eps_end = eps_end * decay + pp.kappa * flux / pp.gamma_hz * (1.0 - decay);
    t += h;
  }
  // steady-state pool at each pulse start, fed by the previous windows
  const double g = pp.gamma_hz;
  const double period = ctx.pulse_period_s;
  const double tail = std::exp(-g * (period - std::min(window, period)));
  const double per_pulse = std::exp(-g * period);
  const double carry = per_pulse < 1.0 ? eps_end * tail / (1.0 - per_pulse) : 0.0;
  for (std::size_t i = 0; i < n; ++i)
    preload[i] = at_bin[i] + carry * std::exp(-g * ctx.bin_delay_s[i]);
  return preload;
}

/// Walks the detector state through [state.time_s, t_target) with the actual
/// illumination profile (persistence accumulation plus pool decay).
void advance_through_gap(const RunContext& ctx, ApdState& state, double t_target) {
  const double gap = t_target - state.time_s;
  if (gap <= 0) {
    state.time_s = t_target;
    return;
  }
  const auto& pp = ctx.apd.persistence;
  if (pp.kappa <= 0 || ctx.laser_off) {
    accumulate_persistence(ctx.apd, state, 0.0, gap);
    state.time_s = t_target;
    return;
  }
  double h_max = ctx.laser->pulse_width_s / 2.0;
  if (pp.gamma_hz > 0) h_max = std::min(h_max, 0.25 / pp.gamma_hz);
  long steps = std::max<long>(1, std::lround(std::ceil(gap / h_max)));
  const double h = gap / static_cast<double>(steps);
  const double f_pulse = ctx.laser->pulse_rate_hz;
  for (long s = 0; s < steps; ++s) {
    const double mid = state.time_s + h / 2.0;
    const double pulse_index = std::floor(mid * f_pulse);
    const double delay = mid - pulse_index / f_pulse;
    const double p = delay <= ctx.sched.window_s ? detector_power(ctx, delay) : 0.0;
    accumulate_persistence(ctx.apd, state, p, h);
  }
  state.time_s = t_target;
}

TraceBin run_basic_position(const RunContext& ctx, long position, long pulses) {
  TraceBin bin;
  bin.delay_s = ctx.bin_delay_s[static_cast<std::size_t>(position)];
  bin.distance_km = ctx.link->group_speed_km_s * bin.delay_s / 2.0;
  const double power = ctx.bin_power_w[static_cast<std::size_t>(position)];
  const double preload = ctx.bin_eps_preload[static_cast<std::size_t>(position)];
  ApdState state;
  for (long p = 0; p < pulses; ++p) {
    const double gate_start = static_cast<double>(p) * ctx.pulse_period_s + bin.delay_s;
    ++bin.gates_applied;
    if (gate_start < state.dead_until_s) continue;
    accumulate_persistence(ctx.apd, state, 0.0, gate_start - state.time_s);
    state.time_s = gate_start;
    state.persistence_excess = preload;
    RngStream rng(ctx.seed, ctx.timeline, static_cast<std::uint64_t>(position),
                  static_cast<std::uint64_t>(p));
    const GateOutcome oc =
        sample_gate(ctx.apd, state, power, gate_start, ctx.sched.gate_width_s, rng);
    ++bin.gates_activated;
    if (oc.detected) ++bin.detections;
  }
  return bin;
}

void run_shared_timeline(const RunContext& ctx, long pulses, std::vector<TraceBin>& bins) {
  ApdState state;
  const long gates = ctx.sched.gates_per_pulse;
  for (long p = 0; p < pulses; ++p) {
    const double epoch = static_cast<double>(p) * ctx.pulse_period_s;
    for (long k = 0; k < gates; ++k) {
      const long b = ctx.sched.bin_of(p, k);
      TraceBin& bin = bins[static_cast<std::size_t>(b)];
      const double gate_start = epoch + ctx.sched.gate_start(p, k);
      ++bin.gates_applied;
      if (gate_start < state.dead_until_s) continue;
      advance_through_gap(ctx, state, gate_start);
      RngStream rng(ctx.seed, ctx.timeline, static_cast<std::uint64_t>(p),
                    static_cast<std::uint64_t>(k));
      const GateOutcome oc =
          sample_gate(ctx.apd, state, ctx.bin_power_w[static_cast<std::size_t>(b)], gate_start,
                      ctx.sched.gate_width_s, rng);
      ++bin.gates_activated;
      if (oc.detected) ++bin.detections;
    }
  }
}

/// Turns one bin's raw counts into an estimate given the expected dark count.
void estimate_bin(TraceBin& bin, const ApdModel& apd, double gate_width_s, double n_dc) {
  bin.est_power_w = k_nan;
  bin.est_low_w = k_nan;
  bin.est_high_w = k_nan;
  bin.db_value = k_nan;
  bin.db_sigma = k_nan;
  bin.no_data = false;
  bin.saturated = false;
  if (bin.gates_activated == 0) {
    bin.no_data = true;
    return;
  }
  const double n = static_cast<double>(bin.gates_activated);
  if (bin.detections >= bin.gates_activated) {
    bin.saturated = true;
    // only a lower bound survives
    const double p_low =
        (static_cast<double>(bin.detections) - std::sqrt(static_cast<double>(bin.detections)) -
         n_dc) /
        n;
    if (p_low < 1.0)
      bin.est_low_w = -apd.photon_energy_j / (apd.efficiency * gate_width_s) *
                      std::log1p(-std::max(p_low, 0.0));
    return;
  }
  const PowerEstimate est =
      estimate_power(apd, bin.detections, n_dc, bin.gates_activated, gate_width_s);
  bin.est_power_w = est.power_w;
  bin.est_low_w = est.low_w;
  bin.est_high_w = est.high_w;
  if (bin.detections > 0 && est.power_w > 0) {
    const double p = std::min((static_cast<double>(bin.detections) - n_dc) / n, 1.0 - 0.5 / n);
    const double hazard = -std::log1p(-p);
    const double sigma_p = std::sqrt(static_cast<double>(bin.detections)) / n;
    bin.db_sigma = k_db_per_neper5 * sigma_p / ((1.0 - p) * hazard);
  }
}

/// dB relative to the first bin holding a positive estimate.
void reference_db(std::vector<TraceBin>& bins) {
  double ref = k_nan;
  for (const auto& bin : bins) {
    if (std::isfinite(bin.est_power_w) && bin.est_power_w > 0) {
      ref = bin.est_power_w;
      break;
    }
  }
  if (!std::isfinite(ref)) return;
  for (auto& bin : bins)
    if (std::isfinite(bin.est_power_w) && bin.est_power_w > 0)
      bin.db_value = 5.0 * std::log10(bin.est_power_w / ref);
}

void finalize_bins(std::vector<TraceBin>& bins, const ApdModel& apd, double gate_width_s,
                   double attenuation_db, int partial_index) {
  for (auto& bin : bins) {
    bin.attenuation_db = attenuation_db;
    bin.partial_index = partial_index;
    estimate_bin(bin, apd, gate_width_s,
                 apd.dark_rate_hz * gate_width_s * static_cast<double>(bin.gates_activated));
  }
  reference_db(bins);
}

RunContext make_context(const FiberLink& link, const LaserConfig& laser, const ApdModel& apd,
                        const GatingScheme& scheme, const AcquisitionOptions& opts) {
  link.validate();
  apd.validate();
  RunContext ctx;
  ctx.link = &link;
  ctx.laser = &laser;
  ctx.apd = apd;
  ctx.apd.dead_time_s = scheme.effective_dead_time_s(apd);
  ctx.sched = build_schedule(scheme, laser, link);
  ctx.attenuation_db = opts.attenuation_db;
  ctx.atten_factor = attenuation_factor(opts.attenuation_db);
  ctx.laser_off = opts.laser_off;
  ctx.seed = opts.seed;
  ctx.timeline = opts.timeline_salt;
  ctx.pulse_period_s = 1.0 / laser.pulse_rate_hz;

  const long n = ctx.sched.bin_count;
  ctx.bin_delay_s.resize(static_cast<std::size_t>(n));
  ctx.bin_power_w.resize(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double d = static_cast<double>(i) * ctx.sched.bin_pitch_s;
    ctx.bin_delay_s[static_cast<std::size_t>(i)] = d;
    ctx.bin_power_w[static_cast<std::size_t>(i)] = detector_power(ctx, d);
  }
  if (ctx.sched.kind == SchemeKind::basic)
    ctx.bin_eps_preload = basic_persistence_preload(ctx);
  else
    ctx.bin_eps_preload.assign(static_cast<std::size_t>(n), 0.0);
  return ctx;
}

/// Runs basic-mode positions [first, last) in parallel, each on its own
/// timeline and substream.
void run_basic_range(const RunContext& ctx, long first, long last, long pulses, int threads,
                     std::vector<TraceBin>& out) {
  const long count = last - first;
  if (count <= 0) return;
  threads = static_cast<int>(std::max<long>(1, std::min<long>(threads, count)));
  if (threads == 1) {
    for (long i = 0; i < count; ++i)
      out[static_cast<std::size_t>(i)] = run_basic_position(ctx, first + i, pulses);
    return;
  }
  std::atomic<long> next{0};
  auto worker = [&]() {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= count) return;
      out[static_cast<std::size_t>(i)] = run_basic_position(ctx, first + i, pulses);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

double solve_attenuation_db(const RunContext& ctx, double delay_s, double target_rate) {
  const double p_unatten =
      ctx.laser_off ? 0.0 : incident_power_w(*ctx.link, *ctx.laser, delay_s);
  const double gw = ctx.sched.gate_width_s;
  const double h_target = -std::log1p(-target_rate);
  const double h_dark = ctx.apd.dark_rate_hz * gw;
  const double h_sig_full = ctx.apd.efficiency * (p_unatten / ctx.apd.photon_energy_j) * gw;
  if (h_dark >= h_target)
    throw campaign_error("auto_attenuate: dark counts alone exceed the target rate");
  const double a = (h_target - h_dark) / h_sig_full;
  if (!(a > 0) || a > 1.0 + 1e-9)
    throw campaign_error("auto_attenuate: target rate unreachable, signal too weak");
  return -10.0 * std::log10(std::min(a, 1.0));
}

}  // namespace

Trace run_acquisition(const FiberLink& link, const LaserConfig& laser, const ApdModel& apd,
                      const GatingScheme& scheme, const AcquisitionOptions& opts) {
  RunContext ctx = make_context(link, laser, apd, scheme, opts);
  Trace trace;
  trace.gate_width_s = ctx.sched.gate_width_s;
  trace.bin_pitch_s = ctx.sched.bin_pitch_s;
  trace.seed = opts.seed;
  const long n = ctx.sched.bin_count;
  trace.bins.assign(static_cast<std::size_t>(n), TraceBin{});

  if (ctx.sched.kind == SchemeKind::basic) {
    long pulses = scheme.gates_per_point;
    if (pulses <= 0) {
      if (!(opts.duration_s > 0))
        throw validation_error("run_acquisition: basic mode needs gates_per_point or duration");
      pulses = std::max<long>(
          1, static_cast<long>(std::floor(opts.duration_s * laser.pulse_rate_hz /
                                          static_cast<double>(n))));
    }
    run_basic_range(ctx, 0, n, pulses, opts.threads, trace.bins);
    trace.simulated_wall_time_s =
        static_cast<double>(n) * static_cast<double>(pulses) / laser.pulse_rate_hz;
  } else {
    if (!(opts.duration_s > 0))
      throw validation_error("run_acquisition: duration_s must be > 0");
    const long pulses =
        std::max<long>(1, static_cast<long>(std::floor(opts.duration_s * laser.pulse_rate_hz)));
    for (long i = 0; i < n; ++i) {
      trace.bins[static_cast<std::size_t>(i)].delay_s = ctx.bin_delay_s[static_cast<std::size_t>(i)];
      trace.bins[static_cast<std::size_t>(i)].distance_km =
          link.group_speed_km_s * ctx.bin_delay_s[static_cast<std::size_t>(i)] / 2.0;
    }
    run_shared_timeline(ctx, pulses, trace.bins);
    trace.simulated_wall_time_s = static_cast<double>(pulses) / laser.pulse_rate_hz;
  }
  finalize_bins(trace.bins, ctx.apd, ctx.sched.gate_width_s, opts.attenuation_db, 0);
  return trace;
}

double auto_attenuate(const FiberLink& link, const LaserConfig& laser, const ApdModel& apd,
                      const GatingScheme& scheme, double target_rate, std::uint64_t seed) {
  if (!(target_rate > 0 && target_rate < 1))
    throw std::invalid_argument("auto_attenuate: target_rate must be in (0, 1)");
  AcquisitionOptions opts;
  opts.seed = seed;
  RunContext ctx = make_context(link, laser, apd, scheme, opts);
  const double atten_db = solve_attenuation_db(ctx, ctx.bin_delay_s.front(), target_rate);

  // short Monte Carlo check of the closed-form solution
  const double power = ctx.bin_power_w.front() * attenuation_factor(atten_db);
  const long trials = 4000;
  long hits = 0;
  RngStream rng = RngStream::named(seed, "atten/verify");
  for (long i = 0; i < trials; ++i) {
    ApdState state;
    if (sample_gate(ctx.apd, state, power, 0.0, ctx.sched.gate_width_s, rng).detected) ++hits;
  }
  const double freq = static_cast<double>(hits) / static_cast<double>(trials);
  if (std::abs(freq - target_rate) > 0.05)
    throw campaign_error("auto_attenuate: Monte Carlo check disagrees with the solved rate");
  return atten_db;
}

CampaignResult partial_trace_campaign(const FiberLink& link, const LaserConfig& laser,
                                      const ApdModel& apd, const GatingScheme& scheme,
                                      const CampaignOptions& opts) {
  if (scheme.kind != SchemeKind::basic)
    throw validation_error("partial_trace_campaign: requires the basic (delay-scanned) scheme");
  if (!(opts.dwell_per_bin_s > 0))
    throw validation_error("campaign.dwell_s must be > 0");
  if (!(opts.snr_floor > 0)) throw validation_error("campaign.snr_floor must be > 0");

  AcquisitionOptions base;
  base.seed = opts.seed;
  RunContext ctx = make_context(link, laser, apd, scheme, base);
  const long n_bins = ctx.sched.bin_count;
  const long pulses = std::max<long>(
      1, static_cast<long>(std::llround(opts.dwell_per_bin_s * laser.pulse_rate_hz)));
  const long overlap_bins = static_cast<long>(
      std::lround(2.0 * opts.overlap_km / link.group_speed_km_s / ctx.sched.bin_pitch_s));
  if (overlap_bins < 3)
    throw campaign_error("campaign.overlap_km spans fewer than 3 delay bins; cannot stitch");

  CampaignResult result;
  result.seed = opts.seed;
  long start_bin = 0;
  bool first_partial = true;

  while (start_bin < n_bins) {
    double atten_db = 0.0;
    try {
      atten_db = solve_attenuation_db(ctx, ctx.bin_delay_s[static_cast<std::size_t>(start_bin)],
                                      opts.target_rate);
    } catch (const campaign_error&) {
      if (first_partial) throw;  // nothing measurable at all
      atten_db = 0.0;            // attenuation exhausted: continue unattenuated
    }
    RunContext pctx = ctx;
    pctx.atten_factor = attenuation_factor(atten_db);
    pctx.attenuation_db = atten_db;
    pctx.timeline = static_cast<std::uint64_t>(result.partials.size());
    for (long i = 0; i < n_bins; ++i)
      pctx.bin_power_w[static_cast<std::size_t>(i)] =
          detector_power(pctx, pctx.bin_delay_s[static_cast<std::size_t>(i)]);
    pctx.bin_eps_preload = basic_persistence_preload(pctx);

    // scan forward until the floor rule fires
    std::vector<TraceBin> bins;
    long cut_bin = -1;  // first bin of the below-floor triple
    int consecutive_below = 0;
    const long chunk = std::max<long>(16, 4L * opts.threads);
    long i = start_bin;
    while (i < n_bins && cut_bin < 0) {
      const long hi = std::min(n_bins, i + chunk);
      std::vector<TraceBin> part(static_cast<std::size_t>(hi - i));
      run_basic_range(pctx, i, hi, pulses, opts.threads, part);
      for (long j = 0; j < hi - i && cut_bin < 0; ++j) {
        const TraceBin& b = part[static_cast<std::size_t>(j)];
        bins.push_back(b);
        const double snr = Trace::bin_snr(b, pctx.apd.dark_rate_hz, pctx.sched.gate_width_s);
        if (snr < opts.snr_floor) {
          if (++consecutive_below == 3) cut_bin = i + j - 2;
        } else {
          consecutive_below = 0;
        }
      }
      i = hi;
    }

    PartialTrace partial;
    partial.trace.gate_width_s = pctx.sched.gate_width_s;
    partial.trace.bin_pitch_s = pctx.sched.bin_pitch_s;
    partial.trace.seed = opts.seed;
    partial.trace.bins = std::move(bins);
    partial.trace.simulated_wall_time_s =
        static_cast<double>(partial.trace.bins.size()) * static_cast<double>(pulses) /
        laser.pulse_rate_hz;
    finalize_bins(partial.trace.bins, pctx.apd, pctx.sched.gate_width_s, atten_db,
                  static_cast<int>(result.partials.size()));
    partial.attenuation_db = atten_db;
    partial.first_bin_index = start_bin;
    partial.overlap_km = first_partial ? 0.0 : opts.overlap_km;

    // usable span: first estimate down to the last above-floor bin
    {
      double first_est = k_nan, last_est = k_nan;
      for (const auto& b : partial.trace.bins) {
        const double snr = Trace::bin_snr(b, pctx.apd.dark_rate_hz, pctx.sched.gate_width_s);
        if (!std::isfinite(b.est_power_w) || b.est_power_w <= 0) continue;
        if (!std::isfinite(first_est)) first_est = b.est_power_w;
        if (snr >= opts.snr_floor) last_est = b.est_power_w;
      }
      if (std::isfinite(first_est) && std::isfinite(last_est))
        partial.usable_span_db = 5.0 * std::log10(first_est / last_est);
    }

    result.wall_time_simulated_s += partial.trace.simulated_wall_time_s;
    result.partials.push_back(std::move(partial));

    if (cut_bin < 0) break;  // reached the fiber end
    const long next_start = cut_bin - overlap_bins;
    if (next_start <= start_bin || cut_bin <= start_bin + overlap_bins) {
      // floor reached with no room to advance: the rest stays unmeasured
      result.full_coverage = false;
      break;
    }
    start_bin = next_start;
    first_partial = false;
  }

  result.stitched = stitch_traces(result.partials);
  return result;
}

void apply_dark_baseline(Trace& trace, const Trace& baseline, const ApdModel& apd) {
  if (baseline.bins.size() != trace.bins.size())
    throw std::invalid_argument("apply_dark_baseline: baseline grid does not match the trace");
  for (std::size_t i = 0; i < trace.bins.size(); ++i) {
    TraceBin& bin = trace.bins[i];
    const TraceBin& dark = baseline.bins[i];
    if (std::abs(dark.delay_s - bin.delay_s) > 1e-12)
      throw std::invalid_argument("apply_dark_baseline: baseline delays do not match");
    const double p_dark =
        dark.gates_activated > 0
            ? static_cast<double>(dark.detections) / static_cast<double>(dark.gates_activated)
            : 0.0;
    estimate_bin(bin, apd, trace.gate_width_s,
                 p_dark * static_cast<double>(bin.gates_activated));
  }
  reference_db(trace.bins);
}

Trace stitch_traces(const std::vector<PartialTrace>& partials) {
  if (partials.empty()) throw std::invalid_argument("stitch_traces: no partials");

  struct Entry {
    TraceBin bin;
    double db_abs = 0.0;
    double stat_sigma = 0.0;  // counting noise only
    std::size_t partial = 0;
  };
  std::map<long, Entry> stitched;  // keyed by campaign-wide bin index
  Trace out;
  out.gate_width_s = partials.front().trace.gate_width_s;
  out.bin_pitch_s = partials.front().trace.bin_pitch_s;
  out.seed = partials.front().trace.seed;
  // alignment uncertainty accumulated by each partial's offset chain
  std::vector<double> offset_var(partials.size(), 0.0);

  for (std::size_t k = 0; k < partials.size(); ++k) {
    const PartialTrace& part = partials[k];
    // absolute 5log frame: fiber-referenced for partial 0 via its attenuator,
    // overlap-aligned afterwards
    double offset = part.attenuation_db / 2.0;
    if (k > 0) {
      double sum = 0.0, stat_var = 0.0, inherited_var = 0.0;
      long count = 0;
      for (const auto& b : part.trace.bins) {
        const long idx = part.first_bin_index +
                         static_cast<long>(&b - part.trace.bins.data());
        auto it = stitched.find(idx);
        if (it == stitched.end()) continue;
        if (!std::isfinite(b.db_value) || !std::isfinite(it->second.db_abs)) continue;
        const double raw = 5.0 * std::log10(b.est_power_w);
        sum += it->second.db_abs - raw;
        // the prefix's own alignment error is common to all overlap bins
        stat_var += it->second.stat_sigma * it->second.stat_sigma +
                    (std::isfinite(b.db_sigma) ? b.db_sigma * b.db_sigma : 0.0);
        inherited_var = std::max(inherited_var, offset_var[it->second.partial]);
        ++count;
      }
      if (count < 3)
        throw stitch_error("stitch_traces: fewer than 3 finite overlap bins between partials " +
                           std::to_string(k - 1) + " and " + std::to_string(k));
      offset = sum / static_cast<double>(count);
      offset_var[k] =
          inherited_var + stat_var / (static_cast<double>(count) * static_cast<double>(count));
    }
    for (const auto& b : part.trace.bins) {
      const long idx =
          part.first_bin_index + static_cast<long>(&b - part.trace.bins.data());
      Entry e;
      e.bin = b;
      e.partial = k;
      if (std::isfinite(b.est_power_w) && b.est_power_w > 0) {
        e.db_abs = 5.0 * std::log10(b.est_power_w) + offset;
        e.stat_sigma = std::isfinite(b.db_sigma) ? b.db_sigma : 0.0;
        const double factor = std::pow(10.0, offset / 5.0);
        e.bin.est_power_w = b.est_power_w * factor;
        e.bin.est_low_w = b.est_low_w * factor;
        e.bin.est_high_w = b.est_high_w * factor;
        e.bin.db_sigma = std::sqrt(e.stat_sigma * e.stat_sigma + offset_var[k]);
      } else {
        e.db_abs = k_nan;
        e.stat_sigma = k_nan;
      }
      stitched[idx] = e;  // newer partial wins the overlap
    }
  }

  double ref_db = k_nan;
  for (const auto& [idx, e] : stitched) {
    if (std::isfinite(e.db_abs)) {
      ref_db = e.db_abs;
      break;
    }
  }
  for (const auto& [idx, e] : stitched) {
    TraceBin b = e.bin;
    b.db_value = std::isfinite(e.db_abs) && std::isfinite(ref_db) ? e.db_abs - ref_db : k_nan;
    out.bins.push_back(b);
  }
  for (const auto& p : partials) out.simulated_wall_time_s += p.trace.simulated_wall_time_s;
  return out;
}

LineFit fit_trace_db(const Trace& trace, double z0_km, double z1_km) {
  LineFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& b : trace.bins) {
    if (b.distance_km < z0_km || b.distance_km > z1_km) continue;
    if (!std::isfinite(b.db_value)) continue;
    sx += b.distance_km;
    sy += b.db_value;
    sxx += b.distance_km * b.distance_km;
    sxy += b.distance_km * b.db_value;
    ++fit.points;
  }
  if (fit.points < 2) throw std::invalid_argument("fit_trace_db: fewer than 2 finite bins");
  const double n = static_cast<double>(fit.points);
  const double denom = n * sxx - sx * sx;
  if (denom == 0) throw std::invalid_argument("fit_trace_db: degenerate abscissa");
  fit.slope_db_per_km = (n * sxy - sx * sy) / denom;
  fit.intercept_db = (sy - fit.slope_db_per_km * sx) / n;
  return fit;
}

DeadZoneResult measure_dead_zone(const Trace& trace, double event_position_km,
                                 double threshold_db) {
  if (!(threshold_db > 0))
    throw std::invalid_argument("measure_dead_zone: threshold must be > 0");
  if (trace.bins.empty()) throw std::invalid_argument("measure_dead_zone: empty trace");
  const double z_end = trace.bins.back().distance_km;
  const double post_span = z_end - event_position_km;
  if (post_span < 3.0)
    throw std::invalid_argument("measure_dead_zone: trace must extend >= 3 km past the event");

  DeadZoneResult res;
  const double far_start = event_position_km + std::max(2.0, 0.5 * post_span);
  res.reference_fit = fit_trace_db(trace, far_start, z_end);

  // a tail still decaying through the far window poisons the Rayleigh fit:
  // cross-check its slope against the pre-event fiber slope when possible
  const double pre_span = event_position_km - trace.bins.front().distance_km;
  if (pre_span >= 2.0) {
    try {
      const LineFit pre = fit_trace_db(trace, event_position_km - 0.5 * pre_span,
                                       event_position_km - 0.3);
      const double tol = std::max(1.0, 0.5 * std::abs(pre.slope_db_per_km));
      if (std::abs(res.reference_fit.slope_db_per_km - pre.slope_db_per_km) > tol) {
        res.recovered = false;
        res.length_km = post_span;
        return res;
      }
    } catch (const std::invalid_argument&) {
      // too few pre-event bins; fall through to the masked-bin rule
    }
  }

  // deviations above the fitted Rayleigh level
  std::vector<std::pair<double, double>> dev;  // (z, dB above fit)
  for (const auto& b : trace.bins) {
    if (b.distance_km <= event_position_km || b.distance_km > z_end) continue;
    if (!std::isfinite(b.db_value)) continue;
    const double fit_db =
        res.reference_fit.intercept_db + res.reference_fit.slope_db_per_km * b.distance_km;
    dev.emplace_back(b.distance_km, b.db_value - fit_db);
  }
  double last_masked = -1.0;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    const bool above = dev[i].second > threshold_db;
    if (!above) continue;
    const bool neighbour_above = i + 1 < dev.size() && dev[i + 1].second > threshold_db;
    const bool strong = dev[i].second > 2.0 * threshold_db;
    if (neighbour_above || strong) last_masked = dev[i].first;
  }
  if (last_masked >= 0) res.length_km = last_masked - event_position_km;
  // recovered unless the trace is still masked at its far end
  if (dev.size() >= 3)
    res.recovered = !(last_masked >= dev[dev.size() - 3].first);
  return res;
}

}  // namespace pcotdr
