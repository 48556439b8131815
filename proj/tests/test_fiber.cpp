#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "pcotdr/errors.hpp"
#include "pcotdr/fiber.hpp"
#include "pcotdr/rng.hpp"

using namespace pcotdr;

namespace {

FiberLink uniform_link(double length_km, double atten = 0.2) {
  FiberLink link;
  link.segments.push_back({length_km, atten, 0.04, 0.0015});
  return link;
}

LaserConfig default_laser(const FiberLink& link) {
  LaserConfig laser;
  laser.pulse_rate_hz = link.group_speed_km_s / (2.0 * link.length_km());
  return laser;
}

}  // namespace

TEST_CASE("cumulative loss accumulates segments and events") {
  FiberLink link = uniform_link(200.0);
  CHECK(cumulative_loss_db(link, 100.0) == doctest::Approx(20.0));
  CHECK(cumulative_loss_db(link, 0.0) == doctest::Approx(0.0));

  FiberLink with_event = uniform_link(10.0);
  with_event.events.push_back({8.0, 17.0, -45.0});
  // hand sum: 8.001 km * 0.2 dB/km + 17 dB
  CHECK(cumulative_loss_db(with_event, 8.001) == doctest::Approx(18.6).epsilon(1e-3));
  // the event sits strictly at 8 km: not yet crossed at z = 8
  CHECK(cumulative_loss_db(with_event, 8.0) == doctest::Approx(1.6));

  CHECK_THROWS_AS(cumulative_loss_db(link, -1.0), std::out_of_range);
  CHECK_THROWS_AS(cumulative_loss_db(link, 201.0), std::out_of_range);
}

TEST_CASE("backscatter power matches the linearized launch value") {
  FiberLink link = uniform_link(200.0);
  LaserConfig laser = default_laser(link);
  // S * P0 * alpha_s * Dl_p = 0.0015 * 0.4 * 0.04 * 0.2 km
  CHECK(backscatter_power_w(link, laser, 0.0) == doctest::Approx(4.8e-6).epsilon(1e-9));
  // 10 dB one-way at 50 km -> 20 dB round trip
  CHECK(backscatter_power_w(link, laser, 50.0) == doctest::Approx(4.8e-8).epsilon(1e-9));
}

TEST_CASE("exact pulse factor differs by the expected series remainder") {
  FiberLink link = uniform_link(200.0);
  LaserConfig laser = default_laser(link);  // alpha_s * Dl_p = 0.008
  const double lin = backscatter_power_w(link, laser, 10.0, false);
  const double exact = backscatter_power_w(link, laser, 10.0, true);
  const double expected_rel = 1.0 - (1.0 - std::exp(-0.008)) / 0.008;  // ~0.4%
  CHECK((lin - exact) / lin == doctest::Approx(expected_rel).epsilon(1e-6));
  CHECK(expected_rel == doctest::Approx(0.004).epsilon(0.01));
}

TEST_CASE("linearized and exact forms agree within 1% while alpha_s*Dl_p < 0.02") {
  RngStream rng(99, 1);
  for (int i = 0; i < 200; ++i) {
    FiberLink link;
    const double alpha_s = 0.01 + 0.07 * rng.next_unit();
    link.segments.push_back({100.0, 0.2, alpha_s, 0.0015});
    LaserConfig laser = default_laser(link);
    laser.pulse_width_s = 1e-7 + rng.next_unit() * 9e-7;
    if (alpha_s * pulse_extent_km(link, laser) >= 0.02) continue;
    const double lin = backscatter_power_w(link, laser, 30.0, false);
    const double exact = backscatter_power_w(link, laser, 30.0, true);
    CHECK(std::abs(lin - exact) / lin < 0.01);
  }
}

TEST_CASE("backscatter is strictly decreasing along an event-free link") {
  FiberLink link = uniform_link(120.0, 0.21);
  LaserConfig laser = default_laser(link);
  double prev = backscatter_power_w(link, laser, 0.0);
  for (double z = 0.5; z <= 120.0; z += 0.5) {
    const double p = backscatter_power_w(link, laser, z);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("5log10 trace slope equals the one-way attenuation") {
  FiberLink link = uniform_link(100.0, 0.17);
  LaserConfig laser = default_laser(link);
  const double db1 = 5.0 * std::log10(backscatter_power_w(link, laser, 20.0));
  const double db2 = 5.0 * std::log10(backscatter_power_w(link, laser, 70.0));
  CHECK((db1 - db2) / 50.0 == doctest::Approx(0.17).epsilon(1e-9));
}

TEST_CASE("a pure loss event drops the 5log trace by exactly its loss") {
  RngStream rng(7, 2);
  for (int i = 0; i < 50; ++i) {
    const double loss = 0.5 + 20.0 * rng.next_unit();
    FiberLink link = uniform_link(50.0);
    link.events.push_back({25.0, loss, -std::numeric_limits<double>::infinity()});
    LaserConfig laser = default_laser(link);
    const double before = 5.0 * std::log10(backscatter_power_w(link, laser, 24.999));
    const double after = 5.0 * std::log10(backscatter_power_w(link, laser, 25.001));
    const double fiber_part = 0.002 * 0.2;  // 2 m of regular fiber
    CHECK(before - after == doctest::Approx(loss + fiber_part).epsilon(1e-6));
  }
}

TEST_CASE("incident power equals backscatter when no events reflect") {
  FiberLink link = uniform_link(80.0);
  LaserConfig laser = default_laser(link);
  for (double delay : {1e-5, 2e-4, 5e-4}) {
    const double z = link.group_speed_km_s * delay / 2.0;
    CHECK(incident_power_w(link, laser, delay) ==
          doctest::Approx(backscatter_power_w(link, laser, z)));
  }
}

TEST_CASE("a reflective event adds the hand-computed reflection term") {
  FiberLink link = uniform_link(14.0);
  link.events.push_back({8.0, 0.0, -45.0});
  LaserConfig laser = default_laser(link);
  const double delay_at_event = 2.0 * 8.0 / link.group_speed_km_s;
  const double reflection =
      0.4 * std::pow(10.0, -4.5) * std::pow(10.0, -2.0 * 1.6 / 10.0);  // ~6.05e-6 W
  const double total = incident_power_w(link, laser, delay_at_event);
  const double bs = backscatter_power_w(link, laser, 8.0);
  CHECK(total - bs == doctest::Approx(reflection).epsilon(1e-9));
  CHECK(reflection == doctest::Approx(6.05e-6).epsilon(2e-3));

  // outside the pulse-width window the reflection contributes nothing
  const double far_delay = 2.0 * 8.5 / link.group_speed_km_s;  // 0.5 km > Dl_p/2 = 0.1 km
  CHECK(incident_power_w(link, laser, far_delay) ==
        doctest::Approx(backscatter_power_w(link, laser, 8.5)));
}

TEST_CASE("fiber and laser invariants are enforced") {
  FiberLink link = uniform_link(10.0);
  LaserConfig laser = default_laser(link);
  CHECK_NOTHROW(link.validate());

  FiberLink bad = link;
  bad.segments[0].capture_ratio = 1.5;
  CHECK_THROWS_AS(bad.validate(), validation_error);

  bad = link;
  bad.events.push_back({20.0, 1.0, -40.0});  // beyond 10 km
  CHECK_THROWS_AS(bad.validate(), validation_error);

  bad = link;
  bad.events.push_back({5.0, 0.0, -std::numeric_limits<double>::infinity()});
  CHECK_THROWS_AS(bad.validate(), validation_error);

  LaserConfig fast = laser;
  fast.pulse_rate_hz = 2.0 * laser.pulse_rate_hz;  // beyond c/(2L)
  CHECK_THROWS_AS(fast.validate(link), validation_error);

  CHECK_THROWS_AS(incident_power_w(link, laser, -1e-9), std::out_of_range);
}
