#include "uavmec/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace uavmec::env {

namespace {

constexpr double kRelTol = 1e-9;

double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

// raw in [-1,1] -> [0,1]
double unit(double raw) { return (raw + 1.0) * 0.5; }

}  // namespace

TaskSpec sample_task(Rng& rng, const TaskRanges& ranges, const SystemConfig& cfg) {
  TaskSpec t;
  t.device_xy.resize(cfg.num_devices);
  for (auto& p : t.device_xy) {
    p.x = rng.uniform(0.0, cfg.area_x);
    p.y = rng.uniform(0.0, cfg.area_y);
  }
  t.i_max_bits.resize(cfg.num_devices);
  for (auto& i : t.i_max_bits) i = rng.uniform(ranges.i_max_lo, ranges.i_max_hi);
  t.pathloss_exp = rng.uniform(ranges.pathloss_lo, ranges.pathloss_hi);
  t.rician_k = rng.uniform(ranges.rician_lo, ranges.rician_hi);
  t.uav_cpu_cap = ranges.uav_cap_grid.empty()
                      ? cfg.cpu_uav_max
                      : ranges.uav_cap_grid[rng.uniform_index(ranges.uav_cap_grid.size())];
  t.seed = rng.next_u64();
  return t;
}

TaskSpec default_task(const SystemConfig& cfg) {
  TaskSpec t;
  Rng rng(Rng::mix(0xD0D0CAFEULL, static_cast<std::uint64_t>(cfg.num_devices)));
  t.device_xy.resize(cfg.num_devices);
  for (auto& p : t.device_xy) {
    p.x = rng.uniform(0.0, cfg.area_x);
    p.y = rng.uniform(0.0, cfg.area_y);
  }
  t.i_max_bits.assign(cfg.num_devices, cfg.i_max_bits);
  t.pathloss_exp = cfg.channel.pathloss_exp;
  t.rician_k = cfg.channel.rician_k;
  t.uav_cpu_cap = cfg.cpu_uav_max;
  t.seed = 0;
  return t;
}

Env::Env(SystemConfig cfg, TaskSpec task)
    : cfg_(std::move(cfg)), task_(std::move(task)), rng_(0) {
  cfg_.validate();
  if (task_.num_devices() < 1) throw std::invalid_argument("task: no devices");
  if (task_.i_max_bits.size() != task_.device_xy.size())
    throw std::invalid_argument("task: i_max_bits size mismatch");
  for (const auto& p : task_.device_xy) {
    if (p.x < 0.0 || p.x > cfg_.area_x || p.y < 0.0 || p.y > cfg_.area_y)
      throw std::invalid_argument("task: device outside service area");
  }
  if (task_.uav_cpu_cap <= 0.0) throw std::invalid_argument("task: uav_cpu_cap <= 0");
  channel_ = cfg_.channel;
  channel_.pathloss_exp = task_.pathloss_exp;
  channel_.rician_k = task_.rician_k;
  reset(task_.seed);
}

void Env::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  slot_ = 0;
  uav_ = cfg_.uav_start;
  queues_.assign(task_.num_devices(), {});
  sys_tracker_ = {};
  dev_trackers_.assign(task_.num_devices(), {});
  last_audit_ = {};
  rebuild_obs();
}

void Env::set_queues(const std::vector<queueing::QueueTriple>& q) {
  if (static_cast<int>(q.size()) != task_.num_devices())
    throw std::invalid_argument("set_queues: size mismatch");
  queues_ = q;
  rebuild_obs();
}

void Env::rebuild_obs() {
  const double scale = cfg_.effective_queue_scale();
  obs_.clear();
  obs_.reserve(obs_dim(task_.num_devices(), cfg_.extended_obs));
  obs_.push_back(static_cast<double>(slot_) / cfg_.num_slots);
  for (const auto& q : queues_) {
    obs_.push_back(q.local / scale);
    obs_.push_back(q.uav / scale);
    obs_.push_back(q.cloud / scale);
  }
  if (cfg_.extended_obs) {
    obs_.push_back(uav_.x / cfg_.area_x);
    obs_.push_back(uav_.y / cfg_.area_y);
  }
}

// Keeps the post-move position inside the area and within reach of the
// terminal waypoint given the moves left; degenerates to an exact landing on
// the final slot. The fallback point marches straight toward the waypoint and
// is always feasible by induction on the reachability invariant.
Vec2 Env::feasible_position(const Vec2& candidate) const {
  const double step_len = cfg_.uav_vmax * cfg_.slot_tau;
  const double moves_left = static_cast<double>(cfg_.num_slots - 1 - slot_);
  const double radius = moves_left * step_len;
  if (radius <= 0.0) return cfg_.uav_end;

  Vec2 pos{clamp(candidate.x, 0.0, cfg_.area_x), clamp(candidate.y, 0.0, cfg_.area_y)};
  const double d = distance(pos, cfg_.uav_end);
  if (d <= radius) return pos;

  const Vec2 pulled = cfg_.uav_end + (pos - cfg_.uav_end) * (radius / d);
  if (distance(pulled, uav_) <= step_len * (1.0 + kRelTol)) return pulled;

  const double to_end = distance(uav_, cfg_.uav_end);
  if (to_end <= 0.0) return uav_;
  return uav_ + (cfg_.uav_end - uav_) * (std::min(step_len, to_end) / to_end);
}

SlotAction Env::project_action(std::span<const double> raw) const {
  const int k_n = task_.num_devices();
  if (static_cast<int>(raw.size()) != action_dim(k_n))
    throw std::invalid_argument("project_action: raw length mismatch");

  SlotAction a;
  a.dev.resize(k_n);
  double uav_cpu_sum = 0.0;
  double cloud_cpu_sum = 0.0;
  for (int k = 0; k < k_n; ++k) {
    const double* r = raw.data() + 9 * k;
    DeviceAction& d = a.dev[k];
    d.power = unit(r[0]) * cfg_.p_max;
    d.dec.to_uav = unit(r[1]);
    d.dec.to_cloud = unit(r[2]);
    d.dec.compute_local = unit(r[3]);
    d.dec.compute_uav = unit(r[4]);
    d.dec.compute_cloud = unit(r[5]);
    d.cpu_local = unit(r[6]) * cfg_.cpu_local_max;
    d.cpu_uav = unit(r[7]) * task_.uav_cpu_cap;
    d.cpu_cloud = unit(r[8]) * cfg_.cpu_cloud_max;
    uav_cpu_sum += d.cpu_uav;
    cloud_cpu_sum += d.cpu_cloud;
  }
  // Shared CPU pools: proportional down-scale when oversubscribed.
  if (uav_cpu_sum > task_.uav_cpu_cap) {
    const double s = task_.uav_cpu_cap / uav_cpu_sum;
    for (auto& d : a.dev) d.cpu_uav *= s;
  }
  if (cloud_cpu_sum > cfg_.cpu_cloud_max) {
    const double s = cfg_.cpu_cloud_max / cloud_cpu_sum;
    for (auto& d : a.dev) d.cpu_cloud *= s;
  }

  // Move: speed in [0, vmax] and heading in [-pi, pi], so the velocity bound
  // holds by construction and the all-minima raw action stays put.
  const double speed = unit(raw[9 * k_n]) * cfg_.uav_vmax;
  const double heading = raw[9 * k_n + 1] * M_PI;
  Vec2 move{speed * cfg_.slot_tau * std::cos(heading),
            speed * cfg_.slot_tau * std::sin(heading)};
  const double step_len = cfg_.uav_vmax * cfg_.slot_tau;
  const double norm = move.norm();
  if (norm > step_len) move = move * (step_len / norm);
  a.uav_move = feasible_position(uav_ + move) - uav_;
  return a;
}

SlotOutcome Env::step(const SlotAction& action) {
  if (done()) throw std::logic_error("step: episode already finished");
  const int k_n = task_.num_devices();
  if (static_cast<int>(action.dev.size()) != k_n)
    throw std::invalid_argument("step: action device count mismatch");

  const Vec2 pos_before = uav_;
  uav_ = uav_ + action.uav_move;

  // Channel draws at the new geometry, device order.
  std::vector<double> gains(k_n), powers(k_n);
  for (int k = 0; k < k_n; ++k) {
    const double dist = radio::slant_distance(task_.device_xy[k], uav_, cfg_.uav_alt);
    const std::complex<double> h = radio::draw_channel_gain(dist, channel_, rng_);
    gains[k] = std::norm(h);
    powers[k] = action.dev[k].power;
  }
  const std::vector<double> sinr =
      radio::uplink_sinr(gains, powers, channel_.noise_var, cfg_.paper_literal_sinr);

  SlotOutcome out;
  out.slot = slot_;
  out.uav_pos = uav_;
  out.ratio_j = objective::ratio_value(sys_tracker_);
  out.dev.resize(k_n);

  const double cap = cfg_.effective_latency_cap();
  std::vector<double> tracker_bits(k_n), tracker_lat(k_n);
  std::vector<bool> strict_reject(k_n, false);
  for (int k = 0; k < k_n; ++k) {
    const DeviceAction& da = action.dev[k];
    DeviceOutcome& dv = out.dev[k];
    const double rate = radio::offload_rate(sinr[k], channel_.bandwidth);
    const radio::CommLatencies comm = radio::comm_latencies(
        da.dec.to_uav, da.dec.to_cloud, queues_[k].local, rate, channel_.relay_setup, cap);
    const queueing::ComputeAlloc alloc{da.cpu_local, da.cpu_uav, da.cpu_cloud,
                                       cfg_.cycles_per_bit};
    const queueing::CompLatencies comp =
        queueing::comp_latencies(da.dec, queues_[k], alloc, cap);

    dv.bits = queueing::computed_bits(da.dec, queues_[k]);
    dv.comm_latency = comm.to_uav + comm.to_cloud;
    dv.total_latency = queueing::total_completion_latency(
        comp.local, comp.uav, comp.cloud, comm.to_uav, comm.to_cloud);
    dv.drift = objective::drift_term(queues_[k], da.dec);
    dv.eta = objective::slot_fit_eta(dv.total_latency, cfg_.slot_tau);
    dv.z_ratio = objective::ratio_value(dev_trackers_[k]);
    dv.reward = objective::device_reward(dv.drift, dv.bits, dv.comm_latency, dv.z_ratio,
                                         dv.eta, cfg_.weights);
    out.reward += dv.reward;
    out.total_bits += dv.bits;
    out.total_comm_latency += dv.comm_latency;
    strict_reject[k] = cfg_.strict_slot_mode && dv.total_latency > cfg_.slot_tau;
    tracker_bits[k] = strict_reject[k] ? 0.0 : dv.bits;
    tracker_lat[k] = strict_reject[k] ? 0.0 : dv.comm_latency;
  }
  out.surrogate =
      objective::dinkelbach_surrogate(out.total_bits, out.total_comm_latency, out.ratio_j);

  // Arrivals and queue recursion, then the efficiency trackers.
  const std::vector<double> arrivals = queueing::draw_arrivals(rng_, task_.i_max_bits);
  double sys_bits = 0.0, sys_lat = 0.0;
  for (int k = 0; k < k_n; ++k) {
    const queueing::OffloadDecision dec =
        strict_reject[k] ? queueing::OffloadDecision{} : action.dev[k].dec;
    queues_[k] = queueing::step_queues(queues_[k], dec, arrivals[k]);
    out.dev[k].queue_after = queues_[k];
    out.dev[k].arrival = arrivals[k];
    dev_trackers_[k].add(tracker_bits[k], tracker_lat[k]);
    sys_bits += tracker_bits[k];
    sys_lat += tracker_lat[k];
  }
  sys_tracker_.add(sys_bits, sys_lat);

  last_audit_ = audit_action(action, cfg_, task_, pos_before, uav_, slot_);
  ++slot_;
  rebuild_obs();
  return out;
}

SlotOutcome Env::step_raw(std::span<const double> raw) {
  return step(project_action(raw));
}

std::vector<std::complex<double>> Env::preview_fading() const {
  Rng copy = rng_;
  std::vector<std::complex<double>> fading(task_.num_devices());
  for (auto& f : fading) f = radio::draw_fading(channel_.rician_k, copy);
  return fading;
}

AuditReport audit_action(const SlotAction& action, const SystemConfig& cfg,
                         const TaskSpec& task, const Vec2& pos_before,
                         const Vec2& pos_after, int slot) {
  auto fail = [](const std::string& d) { return AuditReport{false, d}; };
  double uav_cpu_sum = 0.0, cloud_cpu_sum = 0.0;
  for (std::size_t k = 0; k < action.dev.size(); ++k) {
    const DeviceAction& d = action.dev[k];
    if (d.power < 0.0 || d.power > cfg.p_max) return fail("power out of range");
    for (double f : {d.dec.to_uav, d.dec.to_cloud, d.dec.compute_local,
                     d.dec.compute_uav, d.dec.compute_cloud}) {
      if (f < 0.0 || f > 1.0) return fail("fraction out of range");
    }
    if (d.cpu_local < 0.0 || d.cpu_local > cfg.cpu_local_max)
      return fail("local cpu out of range");
    if (d.cpu_uav < 0.0 || d.cpu_cloud < 0.0) return fail("negative shared cpu");
    uav_cpu_sum += d.cpu_uav;
    cloud_cpu_sum += d.cpu_cloud;
  }
  if (uav_cpu_sum > task.uav_cpu_cap * (1.0 + kRelTol)) return fail("uav cpu pool exceeded");
  if (cloud_cpu_sum > cfg.cpu_cloud_max * (1.0 + kRelTol))
    return fail("cloud cpu pool exceeded");
  const double step_len = cfg.uav_vmax * cfg.slot_tau;
  if (distance(pos_before, pos_after) > step_len * (1.0 + kRelTol))
    return fail("velocity bound exceeded");
  if (pos_after.x < 0.0 || pos_after.x > cfg.area_x || pos_after.y < 0.0 ||
      pos_after.y > cfg.area_y)
    return fail("uav left the service area");
  if (slot == cfg.num_slots - 1 &&
      (pos_after.x != cfg.uav_end.x || pos_after.y != cfg.uav_end.y))
    return fail("terminal waypoint missed");
  return {};
}

double realized_p2(const SlotOutcome& out, double v) {
  double drift_sum = 0.0;
  for (const auto& d : out.dev) drift_sum += d.drift;
  return objective::p2_objective(drift_sum, out.surrogate, v);
}

std::pair<SlotAction, double> oracle_best_slot_action(const Env& env, int grid_res) {
  if (env.task().num_devices() != 1)
    throw std::invalid_argument("oracle_best_slot_action: single-device tasks only");
  if (grid_res < 1 || grid_res > 8)
    throw std::invalid_argument("oracle_best_slot_action: grid_res must be in [1,8]");
  if (env.done()) throw std::logic_error("oracle_best_slot_action: episode finished");

  const SystemConfig& cfg = env.config();
  const TaskSpec& task = env.task();
  const radio::ChannelParams& ch = env.effective_channel();
  const queueing::QueueTriple q = env.queues()[0];
  const double j_prev = env.ratio_j();
  const double v = cfg.weights.v;
  const double cap = cfg.effective_latency_cap();
  const double fading_pow = std::norm(env.preview_fading()[0]);

  const int r = grid_res;
  auto grid = [&](int i) { return static_cast<double>(i) / r; };

  double best_obj = -std::numeric_limits<double>::infinity();
  double best_vals[8] = {0};  // mx, my raw, power, xU, xC, wL, wU, wC
  Vec2 best_pos{};

  for (int imx = 0; imx <= r; ++imx) {
    for (int imy = 0; imy <= r; ++imy) {
      // Same move mapping as project_action (speed/heading raw coordinates).
      const double raw_speed = 2.0 * grid(imx) - 1.0;
      const double raw_heading = 2.0 * grid(imy) - 1.0;
      const double speed = (raw_speed + 1.0) * 0.5 * cfg.uav_vmax;
      const double heading = raw_heading * M_PI;
      const Vec2 move{speed * cfg.slot_tau * std::cos(heading),
                      speed * cfg.slot_tau * std::sin(heading)};
      const Vec2 pos = env.feasible_position(env.uav_pos() + move);
      const double dist = radio::slant_distance(task.device_xy[0], pos, cfg.uav_alt);
      const double gain = ch.ref_gain / std::pow(dist, ch.pathloss_exp) * fading_pow;
      for (int ip = 0; ip <= r; ++ip) {
        const double power = grid(ip) * cfg.p_max;
        const double sinr = gain * power / ch.noise_var;
        const double rate = radio::offload_rate(sinr, ch.bandwidth);
        for (int ixu = 0; ixu <= r; ++ixu) {
          const double xu = grid(ixu);
          const double t_uplink =
              xu * q.local > 0.0
                  ? (rate > 0.0 ? std::min(xu * q.local / rate, cap) : cap)
                  : 0.0;
          for (int ixc = 0; ixc <= r; ++ixc) {
            const double xc = grid(ixc);
            const double t_comm = t_uplink + (xc > 0.0 ? ch.relay_setup : 0.0);
            for (int iwl = 0; iwl <= r; ++iwl) {
              const double wl = grid(iwl);
              for (int iwu = 0; iwu <= r; ++iwu) {
                const double wu = grid(iwu);
                for (int iwc = 0; iwc <= r; ++iwc) {
                  const double wc = grid(iwc);
                  const double drift =
                      xu * q.local * q.uav + xc * q.uav * q.cloud -
                      (wl * (1.0 - xu) + xu) * q.local * q.local -
                      wc * q.cloud * q.cloud -
                      (wu * (1.0 - xc) + xc) * q.uav * q.uav;
                  const double bits = wl * (1.0 - xu) * q.local +
                                      wu * (1.0 - xc) * q.uav + wc * q.cloud;
                  const double obj = -drift + v * (bits - j_prev * t_comm);
                  if (obj > best_obj) {
                    best_obj = obj;
                    best_vals[0] = raw_speed;
                    best_vals[1] = raw_heading;
                    best_vals[2] = power;
                    best_vals[3] = xu;
                    best_vals[4] = xc;
                    best_vals[5] = wl;
                    best_vals[6] = wu;
                    best_vals[7] = wc;
                    best_pos = pos;
                  }
                }
              }
            }
          }
        }
      }
    }
  }

  SlotAction a;
  a.dev.resize(1);
  a.dev[0].power = best_vals[2];
  a.dev[0].dec = {best_vals[3], best_vals[4], best_vals[5], best_vals[6], best_vals[7]};
  // CPU allocations are objective-neutral; grant the caps.
  a.dev[0].cpu_local = cfg.cpu_local_max;
  a.dev[0].cpu_uav = task.uav_cpu_cap;
  a.dev[0].cpu_cloud = cfg.cpu_cloud_max;
  a.uav_move = best_pos - env.uav_pos();
  return {a, best_obj};
}

void write_trace_line(std::ostream& os, const SlotOutcome& out,
                      std::span<const double> raw_action) {
  char buf[32];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    os << '\t' << buf;
  };
  os << out.slot;
  put(out.reward);
  put(out.total_bits);
  put(out.total_comm_latency);
  put(out.surrogate);
  put(out.ratio_j);
  put(out.uav_pos.x);
  put(out.uav_pos.y);
  for (const auto& d : out.dev) {
    put(d.drift);
    put(d.bits);
    put(d.comm_latency);
    put(d.total_latency);
    put(d.eta);
    put(d.z_ratio);
    put(d.reward);
    put(d.queue_after.local);
    put(d.queue_after.uav);
    put(d.queue_after.cloud);
    put(d.arrival);
  }
  for (double x : raw_action) put(x);
  os << '\n';
}

objective::RewardWeights calibrate_weights(const SystemConfig& cfg, const TaskSpec& task,
                                           int n_probe, std::uint64_t seed) {
  Env probe_env(cfg, task);
  probe_env.reset(Rng::mix(seed, 0));
  Rng action_rng(Rng::mix(seed, 1));
  std::uint64_t episode = 0;
  std::vector<objective::SlotProbe> probes;
  probes.reserve(static_cast<std::size_t>(n_probe) * task.num_devices());
  const int dim = Env::action_dim(task.num_devices());
  std::vector<double> raw(dim);
  for (int i = 0; i < n_probe; ++i) {
    if (probe_env.done()) probe_env.reset(Rng::mix(seed, ++episode));
    for (auto& x : raw) x = action_rng.uniform(-1.0, 1.0);
    const SlotOutcome out = probe_env.step_raw(raw);
    double drift_sum = 0.0;
    for (const auto& d : out.dev) drift_sum += d.drift;
    for (const auto& d : out.dev) {
      objective::SlotProbe p;
      p.abs_drift_sum = std::abs(drift_sum);
      p.abs_surrogate = std::abs(out.surrogate);
      p.abs_device_drift = std::abs(d.drift);
      p.abs_device_bits = std::abs(d.bits);
      p.abs_device_latency = std::abs(d.z_ratio * d.comm_latency);
      probes.push_back(p);
    }
  }
  return objective::calibrate_weights_from_probes(probes);
}

}  // namespace uavmec::env
