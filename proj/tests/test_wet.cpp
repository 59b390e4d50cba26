#include "riss/wet.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace riss;
using namespace riss::wet;

namespace {

// |(1/N) sum_n exp(i*pi*n*u)|, u = sin(omega) - sin(direction).
double geometric_gain(double direction, double omega, int n) {
  const double u = std::sin(omega) - std::sin(direction);
  cdouble s = 0.0;
  for (int k = 0; k < n; ++k) s += std::exp(cdouble(0.0, kPi * k * u));
  return std::abs(s) / n;
}

const ThresholdPeak& plan16() {
  static const auto peaks = threshold_search({}, 16);
  static const ThresholdPeak* hit = [] {
    for (const auto& p : peaks)
      if (p.plan.n_beams == 16) return &p;
    return static_cast<const ThresholdPeak*>(nullptr);
  }();
  REQUIRE(hit != nullptr);
  return *hit;
}

}  // namespace

TEST_CASE("beam gain equals the normalized geometric series") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> w(-kPi / 2, kPi / 2);
  for (int n : {1, 2, 7, 16, 64}) {
    for (int t = 0; t < 200; ++t) {
      const double d = w(rng), o = w(rng);
      CHECK(std::abs(std::abs(beam_gain(d, o, n)) - geometric_gain(d, o, n)) < 1e-10);
    }
    CHECK(beam_gain(0.3, 0.3, n) == doctest::Approx(1.0));
  }
  // Grating point: directions pi/2 and -pi/2 alias when the spacing is half a wavelength.
  CHECK(std::abs(beam_gain(kPi / 2, -kPi / 2, 16)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("first null at sin(omega) = 2/N") {
  CHECK(std::abs(beam_gain(0.0, std::asin(2.0 / 16), 16)) < 1e-14);
  CHECK(std::abs(beam_gain(0.0, std::asin(1.0 / 16), 16)) > 0.5);
}

TEST_CASE("main-lobe half width") {
  for (int n : {4, 16, 32}) {
    double prev = 0.0;
    for (double g : {0.9, 0.7, 0.5, 0.3, 0.1}) {
      const double w = mainlobe_half_width(g, n);
      CHECK(w > prev);
      CHECK(w < 2.0 / n);
      const double f = beam_gain(0.0, std::asin(w), n);
      CHECK(f * f == doctest::Approx(g).epsilon(1e-12));
      prev = w;
    }
  }
  CHECK_THROWS_AS(mainlobe_half_width(0.0, 16), std::invalid_argument);
  CHECK_THROWS_AS(mainlobe_half_width(1.0, 16), std::invalid_argument);
  CHECK_THROWS_AS(mainlobe_half_width(0.5, 0), std::invalid_argument);
}

TEST_CASE("beam widths against a dense scan") {
  const double dir = kPi / 4, gamma = 0.5;
  const int n = 16;
  const auto [left, right] = beam_widths(dir, gamma, n);
  auto scan = [&](double step) {
    double x = dir;
    while (x - dir < 1.0) {
      const double f = geometric_gain(dir, x + step, n);
      if (f * f < gamma) break;
      x += step;
    }
    return x - dir;
  };
  CHECK(right == doctest::Approx(scan(1e-5)).epsilon(2e-4));
  CHECK(std::abs(right - scan(1e-5)) <= 1e-5);
  CHECK(std::abs(left - scan(-1e-5) * -1.0) <= 1e-5);
  // Away from broadside the lobe widens toward endfire.
  CHECK(left == doctest::Approx(0.075647).epsilon(1e-4));
  CHECK(right == doctest::Approx(0.081876).epsilon(1e-4));
  // Symmetric at broadside.
  const auto [l0, r0] = beam_widths(0.0, gamma, n);
  CHECK(l0 == doctest::Approx(r0).epsilon(1e-12));
}

TEST_CASE("threshold search finds the 16-beam plan at N_x = 16") {
  const auto& p = plan16();
  CHECK(p.gamma > 0.2);
  CHECK(p.gamma < 0.8);
  CHECK(p.residual < 1e-9);
  CHECK(p.plan.beams.size() == 16);

  // Coverage floor.
  double floor = 1e9;
  for (double w = -kPi / 2; w <= kPi / 2; w += 1e-3) floor = std::min(floor, total_gain(p.plan, w));
  CHECK(floor >= p.gamma);

  // Directions sorted and mirrored across broadside.
  const auto& b = p.plan.beams;
  for (std::size_t j = 1; j < b.size(); ++j) CHECK(b[j].direction > b[j - 1].direction);
  for (std::size_t j = 0; j < b.size(); ++j) CHECK(b[j].direction == doctest::Approx(-b[b.size() - 1 - j].direction));
  CHECK(p.plan.coverage_residual < 1e-6);
}

TEST_CASE("threshold search output and both starts") {
  ThresholdSearchParams params;
  const auto edge = threshold_search(params, 16);
  REQUIRE(edge.size() > 3);
  for (std::size_t i = 1; i < edge.size(); ++i) CHECK(edge[i].gamma > edge[i - 1].gamma);
  // A higher gamma means narrower beams, so more of them.
  for (std::size_t i = 1; i < edge.size(); ++i) CHECK(edge[i].plan.n_beams >= edge[i - 1].plan.n_beams);

  params.start = StitchStart::beam_at_endfire;
  const auto endfire = threshold_search(params, 16);
  bool found = false;
  for (const auto& p : endfire) {
    if (p.plan.n_beams != 16) continue;
    found = true;
    CHECK(p.gamma == doctest::Approx(plan16().gamma).epsilon(1e-6));
    // The endfire beam appears once.
    int at_endfire = 0;
    for (const auto& b : p.plan.beams) at_endfire += std::abs(std::abs(b.direction) - kPi / 2) < 1e-12;
    CHECK(at_endfire == 1);
  }
  CHECK(found);

  params.coarse_len = 1;
  CHECK_THROWS_AS(params.validate(), std::invalid_argument);
}

TEST_CASE("stitching from the edge places the first edge at endfire") {
  const double gamma = plan16().gamma;
  const auto s = stitch_beams(gamma, 16);
  REQUIRE(!s.directions.empty());
  const double w = mainlobe_half_width(gamma, 16);
  CHECK(std::sin(s.directions[0]) == doctest::Approx(1.0 - w).epsilon(1e-12));
  for (std::size_t j = 1; j < s.directions.size(); ++j)
    CHECK(std::sin(s.directions[j - 1]) - std::sin(s.directions[j]) == doctest::Approx(2 * w).epsilon(1e-9));
}

TEST_CASE("energy harvesting model") {
  const EhModel m;
  const double e = std::exp(m.a * m.b);
  const double x = e / (1 + e), y = m.m_s / e;
  CHECK(m.x() == doctest::Approx(x).epsilon(1e-15));
  CHECK(m.y() == doctest::Approx(y).epsilon(1e-15));
  CHECK(std::abs(harvest(m, 0.0)) <= 1e-15 * m.m_s);
  CHECK(harvest(m, m.b) == doctest::Approx(m.m_s / (2 * x) - y).epsilon(1e-12));
  for (double p : {1e-4, 3e-3, 0.02, 0.05}) {
    const double direct = m.m_s / (x * (1 + std::exp(-m.a * (p - m.b)))) - y;
    CHECK(harvest(m, p) == doctest::Approx(direct).epsilon(1e-10));
  }
  CHECK(harvest(m, 10.0) >= 0.999 * m.m_s);
  double prev = harvest_deficit(m, 0.0);
  for (int i = 1; i <= 10000; ++i) {
    const double d = harvest_deficit(m, i / 10000.0);
    CHECK(d < prev);
    CHECK(d > 0.0);
    prev = d;
  }
  CHECK_THROWS_AS(harvest(m, -1.0), std::invalid_argument);
}

TEST_CASE("charging times and energies") {
  const auto& plan = plan16().plan;
  WetLink link;
  link.pathloss_h2r = path_loss(link.pathloss, 20.0);
  DeviceCluster c;
  c.q = 1e-3;
  c.per_beam.resize(plan.beams.size());
  const Device dev{plan.beams[3].direction + 0.01, 5.0};
  c.per_beam[3].push_back(dev);

  SUBCASE("single device formula") {
    const double n = link.n_total;
    const double scale = link.tx_power * n * n * link.hap_antennas * link.pathloss_h2r * path_loss(link.pathloss, 5.0);
    const double f = geometric_gain(plan.beams[3].direction, dev.omega, 16);
    const auto own = charging_times(plan, c, link, ChargingReading::own_beam);
    CHECK(own[3] == doctest::Approx(c.q / (scale * f * f)).epsilon(1e-10));
    for (std::size_t j = 0; j < own.size(); ++j)
      if (j != 3) CHECK(own[j] == 0.0);
    const auto tot = charging_times(plan, c, link, ChargingReading::total_rotation);
    CHECK(tot[3] == doctest::Approx(c.q / (scale * total_gain(plan, dev.omega))).epsilon(1e-10));
    CHECK(received_power(plan, 3, dev, link) == doctest::Approx(scale * f * f).epsilon(1e-10));

    const auto e = device_energies(plan, c, link, own, {}, ChargingReading::own_beam);
    REQUIRE(e.size() == 1);
    CHECK(e[0] == doctest::Approx(harvest({}, scale * f * f) * own[3]).epsilon(1e-12));
  }
  SUBCASE("permutation invariance within a beam") {
    std::mt19937_64 rng(4);
    auto cl = deploy_per_beam(plan, 10, {3, 5, 7}, 1.35e-3, rng);
    const auto t1 = charging_times(plan, cl, link, ChargingReading::own_beam);
    for (auto& b : cl.per_beam) std::shuffle(b.begin(), b.end(), rng);
    const auto t2 = charging_times(plan, cl, link, ChargingReading::own_beam);
    for (std::size_t j = 0; j < t1.size(); ++j) CHECK(t1[j] == t2[j]);
  }
  SUBCASE("errors") {
    DeviceCluster bad;
    CHECK_THROWS_AS(charging_times(plan, bad, link), std::invalid_argument);
    CHECK_THROWS_AS(device_energies(plan, c, link, {1.0}), std::invalid_argument);
  }
}

TEST_CASE("deployments") {
  const auto& plan = plan16().plan;
  std::mt19937_64 rng(12);
  const auto per = deploy_per_beam(plan, 7, {3, 5, 7}, 1.35e-3, rng);
  for (std::size_t j = 0; j < plan.beams.size(); ++j) {
    const auto [lo, hi] = beam_interval(plan, j);
    CHECK(per.per_beam[j].size() >= 1);
    CHECK(per.per_beam[j].size() <= 7);
    for (const auto& d : per.per_beam[j]) {
      CHECK(d.omega >= lo);
      CHECK(d.omega <= hi);
      CHECK((d.distance == 3.0 || d.distance == 5.0 || d.distance == 7.0));
    }
  }
  const auto uni = deploy_uniform(plan, 50, {3.0}, 1.35e-3, rng);
  const auto counts = uni.counts();
  CHECK(std::accumulate(counts.begin(), counts.end(), 0) == 50);
  for (std::size_t j = 0; j < plan.beams.size(); ++j) {
    for (const auto& d : uni.per_beam[j]) {
      const double own = std::abs(beam_gain(plan.beams[j].direction, d.omega, 16));
      for (const auto& b : plan.beams) CHECK(own >= std::abs(beam_gain(b.direction, d.omega, 16)));
    }
  }
  CHECK_THROWS_AS(deploy_per_beam(plan, 0, {3.0}, 1e-3, rng), std::invalid_argument);
}
