#include "uavmec/objective.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace uavmec::objective {

double ratio_value(const RatioTracker& t) {
  return t.cum_latency > 0.0 ? t.cum_bits / t.cum_latency : 0.0;
}

double dinkelbach_surrogate(double bits_now, double latency_now, double j_prev) {
  return bits_now - j_prev * latency_now;
}

double drift_term(const queueing::QueueTriple& q, const queueing::OffloadDecision& dec) {
  return dec.to_uav * q.local * q.uav + dec.to_cloud * q.uav * q.cloud -
         (dec.compute_local * (1.0 - dec.to_uav) + dec.to_uav) * q.local * q.local -
         dec.compute_cloud * q.cloud * q.cloud -
         (dec.compute_uav * (1.0 - dec.to_cloud) + dec.to_cloud) * q.uav * q.uav;
}

double p2_objective(double drift_sum, double surrogate, double v) {
  return -drift_sum + v * surrogate;
}

double slot_fit_eta(double total_latency, double slot_tau) {
  return std::max(1.0 - total_latency / slot_tau, 0.0);
}

double device_reward(double drift, double bits, double latency, double z_ratio,
                     double eta, const RewardWeights& w) {
  return eta * (-drift + w.v1 * bits - w.v2 * z_ratio * latency);
}

namespace {

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double ratio_or_one(double num, double den) {
  if (num <= 0.0 || den <= 0.0) return 1.0;
  return num / den;
}

}  // namespace

RewardWeights calibrate_weights_from_probes(std::span<const SlotProbe> probes) {
  std::vector<double> a_sys, w_sys, a_dev, b_dev, zt_dev;
  a_sys.reserve(probes.size());
  for (const auto& p : probes) {
    a_sys.push_back(p.abs_drift_sum);
    w_sys.push_back(p.abs_surrogate);
    a_dev.push_back(p.abs_device_drift);
    b_dev.push_back(p.abs_device_bits);
    zt_dev.push_back(p.abs_device_latency);
  }
  RewardWeights w;
  w.v = ratio_or_one(median(a_sys), median(w_sys));
  w.v1 = ratio_or_one(median(a_dev), median(b_dev));
  w.v2 = ratio_or_one(median(a_dev), median(zt_dev));
  return w;
}

}  // namespace uavmec::objective
