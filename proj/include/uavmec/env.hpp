#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "uavmec/config.hpp"
#include "uavmec/objective.hpp"
#include "uavmec/queueing.hpp"
#include "uavmec/radio.hpp"
#include "uavmec/rng.hpp"

namespace uavmec::env {

// One draw from the task distribution: device geometry plus the channel and
// capacity knobs that vary between episodes of the meta problem.
struct TaskSpec {
  std::vector<Vec2> device_xy;
  std::vector<double> i_max_bits;  // per device
  double pathloss_exp = 2.6;
  double rician_k = 10.0;
  double uav_cpu_cap = 1e10;
  std::uint64_t seed = 0;  // default episode-seed base for this task

  int num_devices() const { return static_cast<int>(device_xy.size()); }
};

// Sampling ranges for TaskSpec fields.
struct TaskRanges {
  double i_max_lo = 25.0 * kBitsPerMB;
  double i_max_hi = 75.0 * kBitsPerMB;
  double pathloss_lo = 2.2;
  double pathloss_hi = 3.0;
  double rician_lo = 5.0;
  double rician_hi = 15.0;
  std::vector<double> uav_cap_grid = {5e9, 7.5e9, 1e10, 1.25e10, 1.5e10};
};

TaskSpec sample_task(Rng& rng, const TaskRanges& ranges, const SystemConfig& cfg);

// The fixed task implied by the config alone (placements from a fixed seed,
// channel knobs straight from the config).
TaskSpec default_task(const SystemConfig& cfg);

struct DeviceAction {
  double power = 0.0;  // watts
  queueing::OffloadDecision dec{};
  double cpu_local = 0.0;
  double cpu_uav = 0.0;
  double cpu_cloud = 0.0;
};

struct SlotAction {
  std::vector<DeviceAction> dev;
  Vec2 uav_move{};  // displacement this slot, meters
};

struct DeviceOutcome {
  double drift = 0.0;         // A_k
  double bits = 0.0;          // B_k
  double comm_latency = 0.0;  // t_k (uplink + relay setup)
  double total_latency = 0.0; // completion latency this slot
  double eta = 0.0;
  double z_ratio = 0.0;       // per-device efficiency before this slot
  double reward = 0.0;
  queueing::QueueTriple queue_after{};
  double arrival = 0.0;
};

struct SlotOutcome {
  int slot = 0;
  double reward = 0.0;  // sum of device rewards
  std::vector<DeviceOutcome> dev;
  double total_bits = 0.0;
  double total_comm_latency = 0.0;
  double surrogate = 0.0;  // W, using the pre-slot ratio
  double ratio_j = 0.0;    // system efficiency before this slot
  Vec2 uav_pos{};
};

struct AuditReport {
  bool ok = true;
  std::string detail;  // first violated constraint, empty when ok
};

// Raw action layout, all coordinates in [-1, 1]:
//   per device k (9 entries): power, to_uav, to_cloud, compute_local,
//     compute_uav, compute_cloud, cpu_local, cpu_uav, cpu_cloud
//   then 2 global entries: uav move x, uav move y.
//
// Randomness per step, in draw order: one channel fading draw per device
// (two normals each, device order), then one arrival uniform per device.
class Env {
 public:
  Env(SystemConfig cfg, TaskSpec task);

  void reset(std::uint64_t seed);

  const std::vector<double>& observation() const { return obs_; }

  // Maps a raw vector onto the feasible action set: box bounds, shared-CPU
  // proportional down-scaling, velocity clipped move, service-area clamp,
  // and a reachability pull that guarantees the terminal waypoint.
  SlotAction project_action(std::span<const double> raw) const;

  SlotOutcome step(const SlotAction& action);
  SlotOutcome step_raw(std::span<const double> raw);

  // Fading amplitudes the next step() will draw, without consuming them.
  std::vector<std::complex<double>> preview_fading() const;

  int slot() const { return slot_; }
  bool done() const { return slot_ >= cfg_.num_slots; }
  Vec2 uav_pos() const { return uav_; }
  const std::vector<queueing::QueueTriple>& queues() const { return queues_; }
  double ratio_j() const { return objective::ratio_value(sys_tracker_); }
  const SystemConfig& config() const { return cfg_; }
  const TaskSpec& task() const { return task_; }
  const radio::ChannelParams& effective_channel() const { return channel_; }

  // Manual state injection for scripted scenarios.
  void set_queues(const std::vector<queueing::QueueTriple>& q);

  // Post-move position after the area clamp and the terminal-reachability
  // pull; shared with the slot-action oracle so both see one feasible set.
  Vec2 feasible_position(const Vec2& candidate) const;

  static int obs_dim(int num_devices, bool extended = false) {
    return 1 + 3 * num_devices + (extended ? 2 : 0);
  }
  static int action_dim(int num_devices) { return 9 * num_devices + 2; }

  AuditReport audit_last_step() const { return last_audit_; }

 private:
  SystemConfig cfg_;
  TaskSpec task_;
  radio::ChannelParams channel_;  // cfg channel with task overrides
  Rng rng_;
  int slot_ = 0;
  Vec2 uav_{};
  std::vector<queueing::QueueTriple> queues_;
  objective::RatioTracker sys_tracker_;
  std::vector<objective::RatioTracker> dev_trackers_;
  std::vector<double> obs_;
  AuditReport last_audit_;

  void rebuild_obs();
};

// Checks the per-slot constraint set on a projected action and the move it
// produced: power box, fraction boxes, CPU boxes and shared caps, velocity
// bound, area membership, and the terminal waypoint on the final slot.
AuditReport audit_action(const SlotAction& action, const SystemConfig& cfg,
                         const TaskSpec& task, const Vec2& pos_before,
                         const Vec2& pos_after, int slot);

// Exhaustive per-slot objective search, single-device tasks only. Sweeps a
// nested grid (points i/grid_res) over power, the five fractions and the UAV
// move under the fading the next step would use; CPU allocations do not
// enter the objective and are returned at their caps.
std::pair<SlotAction, double> oracle_best_slot_action(const Env& env, int grid_res);

// The objective value realized by an executed slot.
double realized_p2(const SlotOutcome& out, double v);

// Line format for episode traces (tab-separated, %.17g):
//   slot reward total_bits total_comm_latency surrogate ratio_j uav_x uav_y
//   then per device: drift bits comm_latency total_latency eta z_ratio reward
//     queue_local queue_uav queue_cloud arrival
//   then the raw action vector that produced the slot.
void write_trace_line(std::ostream& os, const SlotOutcome& out,
                      std::span<const double> raw_action);

// Probes the environment with uniform random raw actions and returns the
// calibrated reward weights; episodes auto-reset. Deterministic in seed.
objective::RewardWeights calibrate_weights(const SystemConfig& cfg, const TaskSpec& task,
                                           int n_probe, std::uint64_t seed);

}  // namespace uavmec::env
