#include "uavmec/radio.hpp"

#include <algorithm>
#include <cmath>

namespace uavmec::radio {

double slant_distance(const Vec2& device_xy, const Vec2& uav_xy, double alt_h) {
  const double dx = device_xy.x - uav_xy.x;
  const double dy = device_xy.y - uav_xy.y;
  return std::sqrt(dx * dx + dy * dy + alt_h * alt_h);
}

std::complex<double> draw_fading(double rician_k, Rng& rng) {
  const std::complex<double> los{1.0, 0.0};
  // Two normals per draw, real then imaginary.
  const double re = rng.normal();
  const double im = rng.normal();
  const std::complex<double> nlos{re * M_SQRT1_2, im * M_SQRT1_2};
  return std::sqrt(rician_k / (rician_k + 1.0)) * los +
         std::sqrt(1.0 / (rician_k + 1.0)) * nlos;
}

std::complex<double> draw_channel_gain(double dist, const ChannelParams& p, Rng& rng) {
  const double pathloss_amp = std::sqrt(p.ref_gain / std::pow(dist, p.pathloss_exp));
  return pathloss_amp * draw_fading(p.rician_k, rng);
}

std::vector<double> uplink_sinr(std::span<const double> gains,
                                std::span<const double> powers,
                                double noise_var,
                                bool literal_self_gain) {
  const std::size_t n = gains.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double interference = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k) continue;
      interference += (literal_self_gain ? gains[k] : gains[i]) * powers[i];
    }
    out[k] = gains[k] * powers[k] / (interference + noise_var);
  }
  return out;
}

double offload_rate(double sinr, double bandwidth) {
  return bandwidth * std::log2(1.0 + sinr);
}

CommLatencies comm_latencies(double frac_to_uav, double frac_to_cloud,
                             double local_backlog_bits, double rate,
                             double relay_setup, double latency_cap) {
  CommLatencies lat;
  const double offloaded = frac_to_uav * local_backlog_bits;
  if (offloaded > 0.0) {
    lat.to_uav = rate > 0.0 ? std::min(offloaded / rate, latency_cap) : latency_cap;
  }
  lat.to_cloud = frac_to_cloud > 0.0 ? relay_setup : 0.0;
  return lat;
}

}  // namespace uavmec::radio
