#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "oracles.hpp"
#include "uavmec/radio.hpp"
#include "uavmec/rng.hpp"

using namespace uavmec;
using uavmec::radio::ChannelParams;

TEST_CASE("slant distance basics") {
  CHECK(radio::slant_distance({0, 0}, {0, 0}, 100.0) == doctest::Approx(100.0));
  CHECK(radio::slant_distance({3, 4}, {0, 0}, 12.0) == doctest::Approx(13.0));
  CHECK(radio::slant_distance({120, -40}, {500, 500}, 100.0) ==
        doctest::Approx(667.83231428256).epsilon(1e-12));
}

TEST_CASE("slant distance never below altitude") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 d{rng.uniform(-2000, 2000), rng.uniform(-2000, 2000)};
    const Vec2 u{rng.uniform(-2000, 2000), rng.uniform(-2000, 2000)};
    const double h = rng.uniform(1.0, 500.0);
    CHECK(radio::slant_distance(d, u, h) >= h);
  }
}

TEST_CASE("rician mean power matches pathloss") {
  ChannelParams p;
  p.ref_gain = 1.0;
  p.pathloss_exp = 2.0;

  SUBCASE("pure scatter at reference distance") {
    p.rician_k = 0.0;
    Rng rng(11);
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) acc += std::norm(radio::draw_channel_gain(1.0, p, rng));
    CHECK(acc / n == doctest::Approx(1.0).epsilon(0.02));
  }
  SUBCASE("mixed fading at distance two") {
    p.rician_k = 10.0;
    Rng rng(12);
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) acc += std::norm(radio::draw_channel_gain(2.0, p, rng));
    CHECK(acc / n == doctest::Approx(0.25).epsilon(0.02));
  }
  SUBCASE("line-of-sight limit collapses the draw") {
    p.rician_k = 1e12;
    Rng rng(13);
    for (int i = 0; i < 100; ++i) {
      const double g = std::norm(radio::draw_channel_gain(2.0, p, rng));
      CHECK(g == doctest::Approx(0.25).epsilon(1e-4));
    }
  }
}

TEST_CASE("fading is deterministic under a seed") {
  ChannelParams p;
  Rng a(99), b(99);
  for (int i = 0; i < 16; ++i) {
    CHECK(radio::draw_channel_gain(50.0, p, a) == radio::draw_channel_gain(50.0, p, b));
  }
}

TEST_CASE("uplink sinr examples") {
  CHECK(radio::uplink_sinr(std::vector{2.0}, std::vector{1.0}, 1.0)[0] ==
        doctest::Approx(2.0));
  const auto zero = radio::uplink_sinr(std::vector{1.0, 2.0}, std::vector{0.0, 0.0}, 1.0);
  CHECK(zero[0] == 0.0);
  CHECK(zero[1] == 0.0);
  const auto two = radio::uplink_sinr(std::vector{1.0, 1.0}, std::vector{1.0, 1.0}, 1.0);
  CHECK(two[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(two[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("uplink sinr matches the scalar route and is scale covariant") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(6);
    std::vector<double> g(n), p(n);
    for (auto& x : g) x = rng.uniform(0.0, 1e-8);
    for (auto& x : p) x = rng.uniform(0.0, 0.5);
    const double noise = rng.uniform(1e-14, 1e-12);
    const bool literal = trial % 3 == 0;
    const auto got = radio::uplink_sinr(g, p, noise, literal);
    for (std::size_t k = 0; k < n; ++k) {
      const double want = oracle::sinr_one(g, p, k, noise, literal);
      CHECK(got[k] == doctest::Approx(want).epsilon(1e-12));
    }
    // doubling every power and the noise cancels out
    std::vector<double> p2(n);
    for (std::size_t i = 0; i < n; ++i) p2[i] = 2.0 * p[i];
    const auto scaled = radio::uplink_sinr(g, p2, 2.0 * noise, literal);
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(scaled[k] == doctest::Approx(got[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("literal self-gain form differs from the cross-gain form") {
  const std::vector<double> g{1e-9, 4e-9};
  const std::vector<double> p{0.3, 0.2};
  const auto cross = radio::uplink_sinr(g, p, 1e-13, false);
  const auto lit = radio::uplink_sinr(g, p, 1e-13, true);
  CHECK(cross[0] != lit[0]);
  CHECK(lit[0] == doctest::Approx(g[0] * p[0] / (g[0] * p[1] + 1e-13)).epsilon(1e-12));
}

TEST_CASE("shannon rate") {
  CHECK(radio::offload_rate(1.0, 1.0) == doctest::Approx(1.0));
  CHECK(radio::offload_rate(3.0, 1e6) == doctest::Approx(2e6));
  CHECK(radio::offload_rate(0.0, 5e6) == 0.0);
  double prev = -1.0;
  for (double s = 0.0; s < 20.0; s += 0.37) {
    const double r = radio::offload_rate(s, 1e6);
    CHECK(r > prev);
    prev = r;
  }
}

TEST_CASE("transmission latencies") {
  using radio::comm_latencies;
  const double cap = 10.0;
  SUBCASE("nothing offloaded is free") {
    const auto lat = comm_latencies(0.0, 0.0, 1e9, 0.0, 0.05, cap);
    CHECK(lat.to_uav == 0.0);
    CHECK(lat.to_cloud == 0.0);
  }
  SUBCASE("direct ratio") {
    const auto lat = comm_latencies(0.5, 0.0, 1e6, 1e6, 0.05, cap);
    CHECK(lat.to_uav == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("relay setup charged only when re-offloading") {
    CHECK(comm_latencies(0.1, 0.0, 1e6, 1e6, 0.05, cap).to_cloud == 0.0);
    CHECK(comm_latencies(0.1, 0.2, 1e6, 1e6, 0.05, cap).to_cloud ==
          doctest::Approx(0.05));
  }
  SUBCASE("zero rate with pending work saturates") {
    CHECK(comm_latencies(0.5, 0.0, 1e6, 0.0, 0.05, cap).to_uav == cap);
  }
  SUBCASE("finite and nonnegative under fuzz") {
    Rng rng(31);
    for (int i = 0; i < 2000; ++i) {
      const auto lat = comm_latencies(rng.uniform(), rng.uniform(),
                                      rng.uniform(0.0, 1e9),
                                      rng.uniform(0.0, 1e7) * (i % 5 ? 1.0 : 0.0),
                                      0.05, cap);
      CHECK(std::isfinite(lat.to_uav));
      CHECK(lat.to_uav >= 0.0);
      CHECK(lat.to_uav <= cap);
      CHECK(lat.to_cloud >= 0.0);
    }
  }
}
