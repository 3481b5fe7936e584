#include "uavmec/queueing.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace uavmec::queueing {

namespace {

double capped_latency(double work_bits, double cycles_per_bit, double cpu,
                      double latency_cap) {
  if (work_bits <= 0.0) return 0.0;
  if (cpu <= 0.0) return latency_cap;
  return std::min(work_bits * cycles_per_bit / cpu, latency_cap);
}

}  // namespace

CompLatencies comp_latencies(const OffloadDecision& dec, const QueueTriple& q,
                             const ComputeAlloc& alloc, double latency_cap) {
  const double work_local = dec.compute_local * (1.0 - dec.to_uav) * q.local;
  const double work_uav = dec.compute_uav * (1.0 - dec.to_cloud) * q.uav;
  const double work_cloud = dec.compute_cloud * q.cloud;
  CompLatencies t;
  t.local = capped_latency(work_local, alloc.cycles_per_bit, alloc.cpu_local, latency_cap);
  t.uav = capped_latency(work_uav, alloc.cycles_per_bit, alloc.cpu_uav, latency_cap);
  t.cloud = capped_latency(work_cloud, alloc.cycles_per_bit, alloc.cpu_cloud, latency_cap);
  return t;
}

double computed_bits(const OffloadDecision& dec, const QueueTriple& q) {
  return dec.compute_local * (1.0 - dec.to_uav) * q.local +
         dec.compute_uav * (1.0 - dec.to_cloud) * q.uav +
         dec.compute_cloud * q.cloud;
}

double total_completion_latency(double t_local, double t_uav, double t_cloud,
                                double t_uav_comm, double t_cloud_comm) {
  return std::max(t_local, t_uav_comm) + t_cloud + std::max(t_uav, t_cloud_comm);
}

QueueTriple step_queues(const QueueTriple& q, const OffloadDecision& dec,
                        double arrival_bits) {
  QueueTriple next;
  const double local_out = dec.to_uav * q.local + dec.compute_local * (1.0 - dec.to_uav) * q.local;
  const double uav_out = dec.compute_uav * (1.0 - dec.to_cloud) * q.uav + dec.to_cloud * q.uav;
  const double cloud_out = dec.compute_cloud * q.cloud;
  next.local = std::max(q.local - local_out, 0.0) + arrival_bits;
  next.uav = std::max(q.uav - uav_out, 0.0) + dec.to_uav * q.local;
  next.cloud = std::max(q.cloud - cloud_out, 0.0) + dec.to_cloud * q.uav;
  return next;
}

std::vector<double> draw_arrivals(Rng& rng, std::span<const double> i_max_bits) {
  std::vector<double> arrivals(i_max_bits.size());
  for (std::size_t k = 0; k < i_max_bits.size(); ++k) {
    arrivals[k] = rng.uniform() * i_max_bits[k];
  }
  return arrivals;
}

QueueTriple time_avg_backlog(std::span<const QueueTriple> history) {
  assert(!history.empty());
  QueueTriple sum;
  for (const auto& q : history) {
    sum.local += q.local;
    sum.uav += q.uav;
    sum.cloud += q.cloud;
  }
  const double n = static_cast<double>(history.size());
  return {sum.local / n, sum.uav / n, sum.cloud / n};
}

}  // namespace uavmec::queueing
