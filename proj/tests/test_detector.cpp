#include <doctest.h>

#include <cmath>
#include <vector>

#include "pcotdr/detector.hpp"
#include "pcotdr/errors.hpp"
#include "pcotdr/rng.hpp"

using namespace pcotdr;

namespace {

ApdModel quiet_apd() {
  ApdModel apd;
  apd.dark_rate_hz = 0.0;
  apd.afterpulse.a0 = 0.0;
  apd.persistence.kappa = 0.0;
  apd.dead_time_s = 0.0;
  return apd;
}

}  // namespace

TEST_CASE("detection probability follows the Poisson no-click complement") {
  ApdModel apd = quiet_apd();
  CHECK(detection_probability(apd, 0.0, 100e-9) == doctest::Approx(0.0));
  // 2.86 pW at 1550 nm, eta = 0.1, 100 ns gate -> 0.200
  CHECK(detection_probability(apd, 2.86e-12, 100e-9) == doctest::Approx(0.200).epsilon(2e-3));
  // deep saturation: eta*mu*Dt = 20
  const double p_sat = 20.0 * apd.photon_energy_j / (apd.efficiency * 100e-9);
  CHECK(detection_probability(apd, p_sat, 100e-9) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK_THROWS_AS(detection_probability(apd, -1e-12, 100e-9), std::domain_error);
}

TEST_CASE("detection probability is monotone and near-linear at small hazard") {
  ApdModel apd = quiet_apd();
  RngStream rng(11, 0);
  double prev = 0.0;
  for (double p_w = 0.0; p_w < 1e-11; p_w += 1e-12) {
    const double p = detection_probability(apd, p_w, 100e-9);
    CHECK(p >= prev);
    prev = p;
  }
  for (int i = 0; i < 100; ++i) {
    const double power = 1e-15 + rng.next_unit() * 2e-13;  // hazard < 0.02 at 100 ns
    const double lin = detection_probability_linearized(apd, power, 100e-9);
    if (lin >= 0.02) continue;
    CHECK(std::abs(lin - detection_probability(apd, power, 100e-9)) / lin < 0.01);
  }
}

TEST_CASE("power estimation reproduces the two worked confidence intervals") {
  ApdModel apd = quiet_apd();
  // 10 gates, 2 detections, eta = 0.1, 100 ns: interval [0.7, 5.3] pW at the
  // displayed precision (computed: [0.774, 5.354] pW)
  PowerEstimate a = estimate_power(apd, 2, 0.0, 10, 100e-9);
  CHECK(a.low_w == doctest::Approx(0.7e-12).epsilon(0.15));
  CHECK(a.high_w == doctest::Approx(5.3e-12).epsilon(0.02));
  CHECK(a.low_w == doctest::Approx(0.7736e-12).epsilon(1e-3));
  CHECK(a.high_w == doctest::Approx(5.3536e-12).epsilon(1e-3));

  // 10^4 gates, 2002 detections of which 2 expected dark: [2.8, 2.9] pW
  PowerEstimate b = estimate_power(apd, 2002, 2.0, 10000, 100e-9);
  CHECK(b.low_w == doctest::Approx(2.8e-12).epsilon(0.02));
  CHECK(b.high_w == doctest::Approx(2.9e-12).epsilon(0.02));
  CHECK(b.power_w == doctest::Approx(2.860e-12).epsilon(1e-3));
}

TEST_CASE("power estimation edge cases") {
  ApdModel apd = quiet_apd();
  // all detections explained by dark counts -> zero power
  CHECK(estimate_power(apd, 5, 5.0, 1000, 1e-6).power_w == doctest::Approx(0.0));
  // full saturation carries no finite estimate
  CHECK_THROWS_AS(estimate_power(apd, 100, 0.0, 100, 1e-6), saturation_error);
  CHECK_THROWS_AS(estimate_power(apd, 5, 0.0, 0, 1e-6), std::invalid_argument);
}

TEST_CASE("estimation inverts the detection model exactly") {
  ApdModel apd = quiet_apd();
  RngStream rng(3, 1);
  for (int i = 0; i < 200; ++i) {
    const long n_gate = 1000 + static_cast<long>(rng.next_unit() * 100000);
    const long n_det = static_cast<long>(rng.next_unit() * 0.95 * static_cast<double>(n_gate));
    const double gw = 1e-8 + rng.next_unit() * 1e-6;
    const PowerEstimate est = estimate_power(apd, n_det, 0.0, n_gate, gw);
    const double p_back = detection_probability(apd, est.power_w, gw);
    CHECK(p_back == doctest::Approx(static_cast<double>(n_det) / static_cast<double>(n_gate))
                        .epsilon(1e-12));
  }
}

TEST_CASE("afterpulse gate probability compounds the 10 ns value") {
  ApdModel apd = quiet_apd();
  apd.afterpulse.a0 = 0.01;
  apd.afterpulse.tau_trap_s = 2e-6;
  // m = 1: identity
  CHECK(afterpulse_probability_gate(apd, 0.0, 10e-9).value == doctest::Approx(0.01));
  // m = 10 against a compounding loop oracle
  double survive = 1.0;
  for (int k = 0; k < 10; ++k) survive *= 1.0 - 0.01;
  CHECK(afterpulse_probability_gate(apd, 0.0, 100e-9).value ==
        doctest::Approx(1.0 - survive).epsilon(1e-12));
  CHECK(1.0 - survive == doctest::Approx(0.0956).epsilon(1e-3));
  // a0 = 0 -> 0 everywhere
  ApdModel off = quiet_apd();
  for (double tau : {0.0, 1e-6, 1e-3})
    CHECK(afterpulse_probability_gate(off, tau, 1e-6).value == doctest::Approx(0.0));
  // validity flag past 10 us gates
  CHECK(afterpulse_probability_gate(apd, 0.0, 5e-6).within_validity);
  CHECK_FALSE(afterpulse_probability_gate(apd, 0.0, 20e-6).within_validity);
}

TEST_CASE("afterpulse probability is monotone and linear for small m*p10") {
  ApdModel apd = quiet_apd();
  apd.afterpulse.a0 = 0.3;
  double prev = 1.0;
  for (double tau = 0.0; tau < 20e-6; tau += 1e-6) {
    const double v = afterpulse_probability_gate(apd, tau, 1e-6).value;
    CHECK(v < prev);
    prev = v;
  }
  prev = 0.0;
  for (double gw = 10e-9; gw <= 1e-6; gw *= 2) {
    const double v = afterpulse_probability_gate(apd, 1e-6, gw).value;
    CHECK(v > prev);
    prev = v;
  }
  ApdModel weak = quiet_apd();
  weak.afterpulse.a0 = 1e-4;
  const double m = 50.0;
  const double p10 = 1e-4 * std::exp(-1e-6 / weak.afterpulse.tau_trap_s);
  const double v = afterpulse_probability_gate(weak, 1e-6, m * 10e-9).value;
  CHECK(std::abs(v - m * p10) / (m * p10) < 0.01);
}

TEST_CASE("sample_gate never detects without any hazard") {
  ApdModel apd = quiet_apd();
  ApdState state;
  for (long i = 0; i < 10000; ++i) {
    RngStream rng(5, 0, 0, static_cast<std::uint64_t>(i));
    const GateOutcome oc = sample_gate(apd, state, 0.0, state.time_s, 1e-6, rng);
    CHECK_FALSE(oc.detected);
  }
}

TEST_CASE("sample_gate is deterministic for a fixed seed") {
  ApdModel apd = quiet_apd();
  apd.dark_rate_hz = 2000.0;
  auto run = [&]() {
    std::vector<bool> hits;
    ApdState state;
    for (long i = 0; i < 2000; ++i) {
      RngStream rng(42, 1, 0, static_cast<std::uint64_t>(i));
      hits.push_back(
          sample_gate(apd, state, 1e-12, static_cast<double>(i) * 1e-3, 1e-6, rng).detected);
    }
    return hits;
  };
  CHECK(run() == run());
}

TEST_CASE("sample_gate frequency matches the binomial oracle at p = 0.2") {
  ApdModel apd = quiet_apd();
  const double gw = 100e-9;
  // choose power so that the total hazard gives p = 0.2
  const double power = -std::log(0.8) * apd.photon_energy_j / (apd.efficiency * gw);
  const long n = 1000000;
  long hits = 0;
  for (long i = 0; i < n; ++i) {
    ApdState state;
    RngStream rng(2024, 7, 0, static_cast<std::uint64_t>(i));
    if (sample_gate(apd, state, power, 0.0, gw, rng).detected) ++hits;
  }
  const double freq = static_cast<double>(hits) / static_cast<double>(n);
  const double sigma = std::sqrt(0.2 * 0.8 / static_cast<double>(n));
  CHECK(std::abs(freq - 0.2) < 3.0 * sigma);
}

TEST_CASE("long-run frequency converges to 1 - exp(-H) for composed hazards") {
  // chi-square test at alpha = 0.01 (1 dof): reject above 6.635
  struct Case {
    double power_w, dark_hz, trap, persist;
  };
  ApdModel base = quiet_apd();
  base.afterpulse.a0 = 0.1;
  base.persistence.kappa = 1e-4;
  base.persistence.gamma_hz = 2e5;
  const double gw = 1e-6;
  const Case cases[] = {
      {0.0, 2000.0, 0.0, 0.0},
      {1e-13, 2000.0, 0.0, 0.0},
      {1e-13, 500.0, 0.05, 0.0},
      {5e-14, 1000.0, 0.02, 0.5},
  };
  int case_index = 0;
  for (const Case& c : cases) {
    ++case_index;
    ApdModel apd = base;
    apd.dark_rate_hz = c.dark_hz;
    ApdState probe;
    probe.trap_excess = c.trap;
    probe.persistence_excess = c.persist;
    const double hazard = gate_hazard(apd, probe, c.power_w, gw);
    const double p = -std::expm1(-hazard);
    const long n = 1000000;
    long hits = 0;
    for (long i = 0; i < n; ++i) {
      ApdState state;
      state.trap_excess = c.trap;
      state.persistence_excess = c.persist;
      RngStream rng(31337, static_cast<std::uint64_t>(case_index), 0,
                    static_cast<std::uint64_t>(i));
      if (sample_gate(apd, state, c.power_w, 0.0, gw, rng).detected) ++hits;
    }
    const double expect = p * static_cast<double>(n);
    const double miss = static_cast<double>(n) - expect;
    const double chi2 = (hits - expect) * (hits - expect) / expect +
                        (n - hits - miss) * (n - hits - miss) / miss;
    CHECK(chi2 < 6.635);
  }
}

TEST_CASE("detection causes are attributed proportionally to hazards") {
  ApdModel apd = quiet_apd();
  apd.dark_rate_hz = 1000.0;
  apd.afterpulse.a0 = 0.1;
  apd.persistence.kappa = 1e-4;
  apd.persistence.gamma_hz = 2e5;
  const double gw = 1e-6;
  const double power = 2e-13;
  ApdState probe;
  probe.trap_excess = 0.001;
  probe.persistence_excess = 1.0;
  const double m = gw / 10e-9;
  const double h_sig = apd.efficiency * power / apd.photon_energy_j * gw;
  const double h_dark = apd.dark_rate_hz * gw;
  const double h_ap = -m * std::log1p(-probe.trap_excess);
  const double h_cp = probe.persistence_excess * -std::expm1(-apd.persistence.gamma_hz * gw);
  const double total = h_sig + h_dark + h_ap + h_cp;
  CHECK(gate_hazard(apd, probe, power, gw) == doctest::Approx(total).epsilon(1e-12));

  long counts[4] = {0, 0, 0, 0};
  long detected = 0;
  const long n = 200000;
  for (long i = 0; i < n; ++i) {
    ApdState state = probe;
    state.dead_until_s = 0.0;
    RngStream rng(777, 3, 0, static_cast<std::uint64_t>(i));
    const GateOutcome oc = sample_gate(apd, state, power, 0.0, gw, rng);
    if (!oc.detected) continue;
    ++detected;
    switch (oc.cause) {
      case DetectionCause::signal: ++counts[0]; break;
      case DetectionCause::dark: ++counts[1]; break;
      case DetectionCause::afterpulse: ++counts[2]; break;
      case DetectionCause::persistence: ++counts[3]; break;
      default: break;
    }
  }
  const double shares[4] = {h_sig / total, h_dark / total, h_ap / total, h_cp / total};
  double chi2 = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double expect = shares[k] * static_cast<double>(detected);
    chi2 += (counts[k] - expect) * (counts[k] - expect) / expect;
  }
  CHECK(chi2 < 11.345);  // 3 dof at alpha = 0.01
}

TEST_CASE("afterpulse summing over a gate train matches exact enumeration") {
  // one forced detection, then a train of empty gates with dead time off;
  // oracle: exact expectation over all 2^n detection patterns with the trap
  // pool replayed along each path
  ApdModel apd = quiet_apd();
  apd.afterpulse.a0 = 0.05;
  apd.afterpulse.tau_trap_s = 2e-6;
  const double gw = 1e-7;
  const double pitch = 5e-7;
  const int n_gates = 12;
  const double m = gw / 10e-9;

  double expect = 0.0, expect_sq = 0.0;
  struct Node {
    double trap;
    double prob;
    int k;
    int count;
  };
  std::vector<Node> stack{{apd.afterpulse.a0, 1.0, 0, 0}};
  while (!stack.empty()) {
    Node nd = stack.back();
    stack.pop_back();
    if (nd.k == n_gates) {
      expect += nd.prob * nd.count;
      expect_sq += nd.prob * nd.count * nd.count;
      continue;
    }
    // decay from previous anchor to this gate start, hazard, decay over gate
    const double trap_at_gate = nd.trap * std::exp(-(pitch - (nd.k ? gw : 0.0)) /
                                                   apd.afterpulse.tau_trap_s);
    const double p_gate = -std::expm1(m * std::log1p(-trap_at_gate));
    const double trap_after = trap_at_gate * std::exp(-gw / apd.afterpulse.tau_trap_s);
    stack.push_back({trap_after, nd.prob * (1.0 - p_gate), nd.k + 1, nd.count});
    stack.push_back({trap_after + apd.afterpulse.a0, nd.prob * p_gate, nd.k + 1, nd.count + 1});
  }
  const double variance = expect_sq - expect * expect;

  const long replays = 40000;
  long total = 0;
  for (long r = 0; r < replays; ++r) {
    ApdState state;
    state.trap_excess = apd.afterpulse.a0;  // the forced detection, anchored at t = 0
    state.time_s = 0.0;
    for (int k = 0; k < n_gates; ++k) {
      RngStream rng(4242, static_cast<std::uint64_t>(r), 0, static_cast<std::uint64_t>(k));
      const double start = static_cast<double>(k + 1) * pitch;  // same grid as the oracle
      if (sample_gate(apd, state, 0.0, start, gw, rng).detected) ++total;
    }
  }
  const double mean = static_cast<double>(total) / static_cast<double>(replays);
  const double sigma_mean = std::sqrt(variance / static_cast<double>(replays));
  CHECK(std::abs(mean - expect) < 3.0 * sigma_mean + 1e-12);
}

TEST_CASE("persistence accumulation matches a numerical ODE oracle") {
  ApdModel apd = quiet_apd();
  apd.persistence.kappa = 3e-4;
  apd.persistence.gamma_hz = 2e5;
  const double power = 1e-9;
  const double duration = 2e-5;

  ApdState state;
  accumulate_persistence(apd, state, power, duration);

  // fine forward-Euler integration of deps/dt = kappa*mu - gamma*eps
  const double mu = power / apd.photon_energy_j;
  double eps = 0.0;
  const long steps = 2000000;
  const double h = duration / static_cast<double>(steps);
  for (long i = 0; i < steps; ++i)
    eps += h * (apd.persistence.kappa * mu - apd.persistence.gamma_hz * eps);
  CHECK(state.persistence_excess == doctest::Approx(eps).epsilon(1e-4));
}

TEST_CASE("persistence state behaves at the edges") {
  ApdModel off = quiet_apd();  // kappa = 0
  ApdState state;
  state.persistence_excess = 0.5;
  accumulate_persistence(off, state, 1e-9, 1e-5);
  CHECK(state.persistence_excess == doctest::Approx(0.5));  // disabled: unchanged

  ApdModel on = quiet_apd();
  on.persistence.kappa = 1e-4;
  on.persistence.gamma_hz = 2e5;
  ApdState dark;
  dark.persistence_excess = 1.0;
  accumulate_persistence(on, dark, 0.0, 1e-5);  // no light: pure decay
  CHECK(dark.persistence_excess == doctest::Approx(std::exp(-2e5 * 1e-5)).epsilon(1e-12));

  CHECK_THROWS_AS(accumulate_persistence(on, dark, 0.0, -1.0), std::invalid_argument);
}

TEST_CASE("dead-time bookkeeping and scheduling violations") {
  ApdModel apd = quiet_apd();
  apd.dark_rate_hz = 1e9;  // make the first gate certainly detect
  apd.dead_time_s = 1e-5;
  ApdState state;
  RngStream rng(1, 1);
  const GateOutcome oc = sample_gate(apd, state, 0.0, 0.0, 1e-6, rng);
  CHECK(oc.detected);
  CHECK(state.dead_until_s == doctest::Approx(1e-6 + 1e-5));
  RngStream rng2(1, 2);
  CHECK_THROWS_AS(sample_gate(apd, state, 0.0, 2e-6, 1e-6, rng2), std::logic_error);
  RngStream rng3(1, 3);
  CHECK_NOTHROW(sample_gate(apd, state, 0.0, 1.2e-5, 1e-6, rng3));
}
