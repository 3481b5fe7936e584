#pragma once

#include <span>

#include "uavmec/queueing.hpp"

namespace uavmec::objective {

// Running cumulative (bits, latency) pair behind the task-efficiency ratio.
// Kept both system-wide and per device.
struct RatioTracker {
  double cum_bits = 0.0;
  double cum_latency = 0.0;

  void add(double bits, double latency) {
    cum_bits += bits;
    cum_latency += latency;
  }
};

// cum_bits / cum_latency, with 0 as the defined start value before any
// latency has accrued.
double ratio_value(const RatioTracker& t);

// Parametric non-fractional surrogate of the efficiency ratio:
// bits_now - j_prev * latency_now. Zero at ratio-consistent points.
double dinkelbach_surrogate(double bits_now, double latency_now, double j_prev);

// Per-device quadratic-backlog drift bound term. Negative values mean the
// decision shrinks the weighted queue norm.
double drift_term(const queueing::QueueTriple& q, const queueing::OffloadDecision& dec);

// Per-slot objective: -drift_sum + v * surrogate.
double p2_objective(double drift_sum, double surrogate, double v);

// Fraction of the slot left after the completion latency, clamped to [0,1].
double slot_fit_eta(double total_latency, double slot_tau);

struct RewardWeights {
  double v = 1.0;   // drift vs surrogate trade-off in the per-slot objective
  double v1 = 1.0;  // computed-bits term in the device reward
  double v2 = 1.0;  // latency term in the device reward
};

// eta * (-drift + v1 * bits - v2 * z_ratio * latency).
double device_reward(double drift, double bits, double latency, double z_ratio,
                     double eta, const RewardWeights& w);

// One random-policy probe slot, reduced to the magnitudes the weight
// calibration balances.
struct SlotProbe {
  double abs_drift_sum = 0.0;       // |sum_k A_k|
  double abs_surrogate = 0.0;       // |W|
  double abs_device_drift = 0.0;    // median input: |A_k| pooled over devices
  double abs_device_bits = 0.0;     // |B_k|
  double abs_device_latency = 0.0;  // |Z_k * t_k|
};

// Balances the objective and reward terms to a shared order of magnitude:
// v = median|A| / median|W| and analogously for v1, v2. Any degenerate
// (zero) median falls back to a weight of 1.
RewardWeights calibrate_weights_from_probes(std::span<const SlotProbe> probes);

}  // namespace uavmec::objective
