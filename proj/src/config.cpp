#include "uavmec/config.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace uavmec {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw std::invalid_argument("config error: " + field + " " + what);
}

}  // namespace

void SystemConfig::validate() const {
  require(num_devices >= 1, "num_devices", "must be >= 1");
  require(num_slots >= 1, "num_slots", "must be >= 1");
  require(slot_tau > 0.0, "slot_tau", "must be > 0");
  require(area_x > 0.0 && area_y > 0.0, "area", "must be positive");
  require(uav_alt > 0.0, "uav_alt", "must be > 0");
  require(uav_vmax > 0.0, "uav_vmax", "must be > 0");
  auto inside = [&](const Vec2& p) {
    return p.x >= 0.0 && p.x <= area_x && p.y >= 0.0 && p.y <= area_y;
  };
  require(inside(uav_start), "uav_start", "must lie inside the area");
  require(inside(uav_end), "uav_end", "must lie inside the area");
  require(distance(uav_start, uav_end) <= num_slots * uav_vmax * slot_tau * (1.0 + 1e-12),
          "uav_end", "unreachable from uav_start within the episode");
  require(channel.ref_gain > 0.0, "channel.ref_gain", "must be > 0");
  require(channel.pathloss_exp >= 2.0, "channel.pathloss_exp", "must be >= 2");
  require(channel.rician_k >= 0.0, "channel.rician_k", "must be >= 0");
  require(channel.noise_var > 0.0, "channel.noise_var", "must be > 0");
  require(channel.bandwidth > 0.0, "channel.bandwidth", "must be > 0");
  require(channel.relay_setup >= 0.0, "channel.relay_setup", "must be >= 0");
  require(p_max > 0.0, "p_max", "must be > 0");
  require(cycles_per_bit > 0.0, "cycles_per_bit", "must be > 0");
  require(cpu_local_max > 0.0, "cpu_local_max", "must be > 0");
  require(cpu_uav_max > 0.0, "cpu_uav_max", "must be > 0");
  require(cpu_cloud_max > 0.0, "cpu_cloud_max", "must be > 0");
  require(i_max_bits >= 0.0, "i_max_bits", "must be >= 0");
  require(weights.v >= 0.0 && weights.v1 >= 0.0 && weights.v2 >= 0.0, "weights",
          "must be >= 0");
  require(latency_cap >= 0.0, "latency_cap", "must be >= 0 (0 = auto)");
  require(queue_scale_bits >= 0.0, "queue_scale_bits", "must be >= 0 (0 = auto)");
}

}  // namespace uavmec
