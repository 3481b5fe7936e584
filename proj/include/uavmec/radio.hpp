#pragma once

#include <complex>
#include <span>
#include <vector>

#include "uavmec/rng.hpp"
#include "uavmec/vec2.hpp"

namespace uavmec::radio {

// Uplink channel constants. Gains are linear (not dB), noise in watts,
// bandwidth in hertz.
struct ChannelParams {
  double ref_gain = 1e-5;      // power gain at 1 m
  double pathloss_exp = 2.6;   // >= 2
  double rician_k = 10.0;      // linear line-of-sight factor, >= 0
  double noise_var = 1e-13;    // watts
  double bandwidth = 1e6;      // hertz
  double relay_setup = 0.05;   // seconds, fixed UAV->cloud link setup
};

// 3-D separation between a ground device and the UAV at altitude alt_h.
// Never smaller than the altitude itself.
double slant_distance(const Vec2& device_xy, const Vec2& uav_xy, double alt_h);

// Small-scale fading factor alone: deterministic unit line-of-sight phasor
// plus a circularly-symmetric unit-variance scatter component, mixed by the
// Rician factor. E|.|^2 = 1. Consumes exactly two normal draws (four
// uniforms) from rng.
std::complex<double> draw_fading(double rician_k, Rng& rng);

// Fading scaled by the distance path loss; E|h|^2 = ref_gain / d^pathloss_exp.
std::complex<double> draw_channel_gain(double dist, const ChannelParams& p, Rng& rng);

// Per-device SINR for simultaneous uplink transmissions.
// Default: gamma_k = g_k p_k / (sum_{i != k} g_i p_i + noise).
// literal_self_gain replaces every interferer's gain with the receiver-of-
// interest's own gain g_k (the published form; kept switchable because it
// decouples interference from interferer geometry).
std::vector<double> uplink_sinr(std::span<const double> gains,
                                std::span<const double> powers,
                                double noise_var,
                                bool literal_self_gain = false);

// Shannon rate in bits/s.
double offload_rate(double sinr, double bandwidth);

struct CommLatencies {
  double to_uav = 0.0;    // seconds
  double to_cloud = 0.0;  // seconds (relay setup time, or 0)
};

// Transmission latencies for one device. The device->UAV latency is
// offloaded_bits / rate, saturated at latency_cap (and the cap is the
// sentinel when rate == 0 with work pending). The UAV->cloud latency is the
// fixed setup time whenever any re-offload happens.
CommLatencies comm_latencies(double frac_to_uav, double frac_to_cloud,
                             double local_backlog_bits, double rate,
                             double relay_setup, double latency_cap);

}  // namespace uavmec::radio
