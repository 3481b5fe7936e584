#pragma once

#include <string>

#include "uavmec/objective.hpp"
#include "uavmec/radio.hpp"
#include "uavmec/vec2.hpp"

namespace uavmec {

inline constexpr double kBitsPerMB = 8e6;

// Everything the simulator needs that is not task-specific: geometry,
// protocol constants, compute capacities, and reward weights. Values are SI
// (bits, seconds, watts, hertz, meters, cycles).
struct SystemConfig {
  int num_devices = 5;
  int num_slots = 100;
  double slot_tau = 1.0;

  double area_x = 1000.0;
  double area_y = 1000.0;
  Vec2 uav_start{500.0, 500.0};
  Vec2 uav_end{500.0, 500.0};
  double uav_alt = 100.0;
  double uav_vmax = 25.0;  // m/s

  radio::ChannelParams channel{};
  double p_max = 0.5;  // watts

  double cycles_per_bit = 1e3;
  double cpu_local_max = 1e9;   // per device
  double cpu_uav_max = 1e10;    // shared across devices per slot
  double cpu_cloud_max = 5e10;  // shared across devices per slot

  double i_max_bits = 50.0 * kBitsPerMB;

  objective::RewardWeights weights{};

  // 0 means "derive": latency_cap -> 10 * slot_tau, queue_scale -> 10 * i_max.
  double latency_cap = 0.0;
  double queue_scale_bits = 0.0;

  bool paper_literal_sinr = false;
  // Ablations: strict slot mode freezes queue movement (and the efficiency
  // tracker contribution) of devices whose completion latency misses the
  // slot; extended observation appends the normalized UAV position.
  bool strict_slot_mode = false;
  bool extended_obs = false;

  double effective_latency_cap() const {
    return latency_cap > 0.0 ? latency_cap : 10.0 * slot_tau;
  }
  double effective_queue_scale() const {
    return queue_scale_bits > 0.0 ? queue_scale_bits : 10.0 * i_max_bits;
  }

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

}  // namespace uavmec
