#pragma once

#include <span>
#include <vector>

#include "uavmec/rng.hpp"

namespace uavmec::queueing {

// Per-device task backlogs, in bits, at the three tiers.
struct QueueTriple {
  double local = 0.0;
  double uav = 0.0;
  double cloud = 0.0;

  double total() const { return local + uav + cloud; }
};

// Per-slot fractional offload / compute split for one device.
// to_uav, to_cloud move backlog between tiers; the compute_* fractions pick
// how much of what stays at a tier gets processed there this slot.
struct OffloadDecision {
  double to_uav = 0.0;         // of the local backlog
  double to_cloud = 0.0;       // of the uav backlog
  double compute_local = 0.0;  // of the non-offloaded local backlog
  double compute_uav = 0.0;    // of the non-reoffloaded uav backlog
  double compute_cloud = 0.0;  // of the cloud backlog
};

// CPU cycles/s granted to one device's work at each tier.
struct ComputeAlloc {
  double cpu_local = 0.0;
  double cpu_uav = 0.0;
  double cpu_cloud = 0.0;
  double cycles_per_bit = 1e3;
};

struct CompLatencies {
  double local = 0.0;
  double uav = 0.0;
  double cloud = 0.0;
};

// Computation latencies at the three tiers: work_bits * cycles_per_bit / cpu,
// saturated at latency_cap. Zero work is free even with zero CPU; nonzero
// work with zero CPU hits the cap.
CompLatencies comp_latencies(const OffloadDecision& dec, const QueueTriple& q,
                             const ComputeAlloc& alloc, double latency_cap);

// Bits processed across all tiers this slot for one device.
double computed_bits(const OffloadDecision& dec, const QueueTriple& q);

// Slot completion time: local compute and uplink run concurrently, then the
// cloud compute, then the slower of UAV compute and the relay setup.
double total_completion_latency(double t_local, double t_uav, double t_cloud,
                                double t_uav_comm, double t_cloud_comm);

// One-slot backlog recursion. Outflows and inter-tier inflows both use the
// pre-update backlogs; each tier is clamped at zero before its inflow lands.
QueueTriple step_queues(const QueueTriple& q, const OffloadDecision& dec,
                        double arrival_bits);

// I.i.d. uniform arrivals in [0, i_max] per device. One uniform per device,
// in device order.
std::vector<double> draw_arrivals(Rng& rng, std::span<const double> i_max_bits);

// Arithmetic mean backlog per tier over a (nonempty) history.
QueueTriple time_avg_backlog(std::span<const QueueTriple> history);

}  // namespace uavmec::queueing
