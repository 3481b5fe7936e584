#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <sstream>

#include "oracles.hpp"
#include "uavmec/env.hpp"

using namespace uavmec;
using namespace uavmec::env;

namespace {

SystemConfig one_device_config() {
  SystemConfig cfg;
  cfg.num_devices = 1;
  cfg.num_slots = 50;
  return cfg;
}

TaskSpec fixed_task(const SystemConfig& cfg) {
  TaskSpec t;
  t.device_xy.assign(cfg.num_devices, Vec2{300.0, 400.0});
  t.i_max_bits.assign(cfg.num_devices, 8e6);
  t.pathloss_exp = 2.5;
  t.rician_k = 8.0;
  t.uav_cpu_cap = 1e10;
  t.seed = 0;
  return t;
}

}  // namespace

TEST_CASE("reset yields the zero observation at the start position") {
  SystemConfig cfg;
  cfg.num_devices = 3;
  Env e(cfg, default_task(cfg));
  e.reset(5);
  const auto& obs = e.observation();
  CHECK(obs.size() == 1 + 3 * 3);
  for (double x : obs) CHECK(x == 0.0);
  CHECK(e.uav_pos().x == 500.0);
  CHECK(e.uav_pos().y == 500.0);
  CHECK(e.slot() == 0);
}

TEST_CASE("identical seeds give identical trajectories") {
  SystemConfig cfg = one_device_config();
  Env a(cfg, fixed_task(cfg)), b(cfg, fixed_task(cfg));
  a.reset(77);
  b.reset(77);
  Rng actions(3);
  std::vector<double> raw(Env::action_dim(1));
  for (int s = 0; s < 10; ++s) {
    for (auto& x : raw) x = actions.uniform(-1.0, 1.0);
    std::ostringstream la, lb;
    write_trace_line(la, a.step_raw(raw), raw);
    write_trace_line(lb, b.step_raw(raw), raw);
    CHECK(la.str() == lb.str());
  }
}

TEST_CASE("action projection") {
  SystemConfig cfg;
  cfg.num_devices = 2;
  cfg.num_slots = 100;
  cfg.cpu_uav_max = 6e9;
  TaskSpec t = default_task(cfg);
  Env e(cfg, t);
  e.reset(1);

  SUBCASE("all minus one maps to the minima and keeps the UAV still") {
    const std::vector<double> raw(Env::action_dim(2), -1.0);
    const SlotAction a = e.project_action(raw);
    for (const auto& d : a.dev) {
      CHECK(d.power == 0.0);
      CHECK(d.dec.to_uav == 0.0);
      CHECK(d.dec.to_cloud == 0.0);
      CHECK(d.dec.compute_local == 0.0);
      CHECK(d.dec.compute_uav == 0.0);
      CHECK(d.dec.compute_cloud == 0.0);
      CHECK(d.cpu_local == 0.0);
      CHECK(d.cpu_uav == 0.0);
      CHECK(d.cpu_cloud == 0.0);
    }
    CHECK(a.uav_move.norm() == doctest::Approx(0.0));
  }
  SUBCASE("oversubscribed shared cpu scales onto the cap") {
    const std::vector<double> raw(Env::action_dim(2), 1.0);
    const SlotAction a = e.project_action(raw);
    const double sum = a.dev[0].cpu_uav + a.dev[1].cpu_uav;
    CHECK(sum == doctest::Approx(t.uav_cpu_cap).epsilon(1e-12));
    CHECK(a.dev[0].cpu_uav == doctest::Approx(a.dev[1].cpu_uav));
  }
  SUBCASE("wrong raw length is rejected") {
    CHECK_THROWS(e.project_action(std::vector<double>(5, 0.0)));
  }
}

TEST_CASE("episode lands exactly on the terminal waypoint") {
  SystemConfig cfg = one_device_config();
  cfg.num_slots = 20;
  cfg.uav_end = {400.0, 620.0};
  Env e(cfg, fixed_task(cfg));
  e.reset(9);
  Rng actions(10);
  std::vector<double> raw(Env::action_dim(1));
  const double step_len = cfg.uav_vmax * cfg.slot_tau;
  Vec2 prev = e.uav_pos();
  while (!e.done()) {
    for (auto& x : raw) x = actions.uniform(-1.0, 1.0);
    e.step_raw(raw);
    CHECK(e.audit_last_step().ok);
    CHECK(distance(prev, e.uav_pos()) <= step_len * (1.0 + 1e-9));
    prev = e.uav_pos();
  }
  CHECK(e.uav_pos().x == cfg.uav_end.x);
  CHECK(e.uav_pos().y == cfg.uav_end.y);
  CHECK_THROWS(e.step_raw(raw));
}

TEST_CASE("slot transition matches the straight-line scalar route") {
  SystemConfig cfg = one_device_config();
  cfg.weights = {2.0, 1.5, 0.5};
  const TaskSpec task = fixed_task(cfg);
  Env e(cfg, task);
  e.reset(123);
  e.set_queues({{5e5, 2e5, 1e5}});

  SlotAction a;
  a.dev.resize(1);
  a.dev[0].power = 0.25;
  a.dev[0].dec = {0.4, 0.3, 0.5, 0.6, 0.2};
  a.dev[0].cpu_local = 5e8;
  a.dev[0].cpu_uav = 4e9;
  a.dev[0].cpu_cloud = 1e10;
  a.uav_move = {10.0, -5.0};
  const SlotOutcome out = e.step(a);

  // Independent replay of the documented draw order with scalar formulas.
  Rng r(123);
  const double re = r.normal();
  const double im = r.normal();
  const double k = task.rician_k;
  const std::complex<double> fad =
      std::sqrt(k / (k + 1.0)) +
      std::sqrt(1.0 / (k + 1.0)) * std::complex<double>(re * M_SQRT1_2, im * M_SQRT1_2);
  const double dist = oracle::slant(300, 400, 510, 495, 100);
  const double gain =
      cfg.channel.ref_gain / std::pow(dist, task.pathloss_exp) * std::norm(fad);
  const double sinr = gain * 0.25 / cfg.channel.noise_var;
  const double rate = oracle::shannon_rate(cfg.channel.bandwidth, sinr);
  const double cap = 10.0;
  const double t_up = oracle::uplink_latency(0.4, 5e5, rate, cap);
  const double t_cc = oracle::relay_latency(0.3, cfg.channel.relay_setup);
  const double t_l = oracle::comp_latency(0.5 * 0.6 * 5e5, 1e3, 5e8, cap);
  const double t_u = oracle::comp_latency(0.6 * 0.7 * 2e5, 1e3, 4e9, cap);
  const double t_c = oracle::comp_latency(0.2 * 1e5, 1e3, 1e10, cap);
  const double bits = oracle::computed(0.5, 0.6, 0.2, 0.4, 0.3, 5e5, 2e5, 1e5);
  const double total_lat = oracle::completion(t_l, t_u, t_c, t_up, t_cc);
  const double drift = oracle::drift(0.4, 0.3, 0.5, 0.6, 0.2, 5e5, 2e5, 1e5);
  const double eta = oracle::eta(total_lat, 1.0);
  const double reward = oracle::reward(drift, bits, t_up + t_cc, 0.0, eta, 1.5, 0.5);
  const double arrival = r.uniform() * 8e6;
  const auto q1 = oracle::queue_step({5e5, 2e5, 1e5}, 0.4, 0.3, 0.5, 0.6, 0.2, arrival);

  CHECK(eta > 0.0);  // the scenario is meant to exercise a nonzero reward
  CHECK(out.slot == 0);
  CHECK(out.uav_pos.x == doctest::Approx(510.0));
  CHECK(out.uav_pos.y == doctest::Approx(495.0));
  CHECK(out.ratio_j == 0.0);
  CHECK(out.total_bits == doctest::Approx(bits).epsilon(1e-12));
  CHECK(out.total_comm_latency == doctest::Approx(t_up + t_cc).epsilon(1e-12));
  CHECK(out.surrogate == doctest::Approx(oracle::surrogate(bits, t_up + t_cc, 0.0))
                             .epsilon(1e-12));
  const auto& d = out.dev[0];
  CHECK(d.drift == doctest::Approx(drift).epsilon(1e-12));
  CHECK(d.bits == doctest::Approx(bits).epsilon(1e-12));
  CHECK(d.comm_latency == doctest::Approx(t_up + t_cc).epsilon(1e-12));
  CHECK(d.total_latency == doctest::Approx(total_lat).epsilon(1e-12));
  CHECK(d.eta == doctest::Approx(eta).epsilon(1e-12));
  CHECK(d.z_ratio == 0.0);
  CHECK(d.reward == doctest::Approx(reward).epsilon(1e-12));
  CHECK(out.reward == doctest::Approx(reward).epsilon(1e-12));
  CHECK(d.arrival == doctest::Approx(arrival).epsilon(1e-12));
  CHECK(d.queue_after.local == doctest::Approx(q1.l).epsilon(1e-12));
  CHECK(d.queue_after.uav == doctest::Approx(q1.u).epsilon(1e-12));
  CHECK(d.queue_after.cloud == doctest::Approx(q1.c).epsilon(1e-12));
  CHECK(e.ratio_j() ==
        doctest::Approx(bits / (t_up + t_cc)).epsilon(1e-12));

  const auto& obs = e.observation();
  CHECK(obs[0] == doctest::Approx(1.0 / 50.0));
  CHECK(obs[1] == doctest::Approx(q1.l / cfg.effective_queue_scale()).epsilon(1e-12));
}

TEST_CASE("all-zero action only accumulates arrivals at the first slot") {
  SystemConfig cfg = one_device_config();
  Env e(cfg, fixed_task(cfg));
  e.reset(4);
  const std::vector<double> raw(Env::action_dim(1), -1.0);
  const SlotOutcome out = e.step_raw(raw);
  CHECK(out.reward == 0.0);
  CHECK(out.total_bits == 0.0);
  CHECK(out.dev[0].queue_after.local == doctest::Approx(out.dev[0].arrival));
  CHECK(out.dev[0].queue_after.uav == 0.0);
}

TEST_CASE("strict slot mode freezes violating devices") {
  SystemConfig cfg = one_device_config();
  cfg.strict_slot_mode = true;
  Env e(cfg, fixed_task(cfg));
  e.reset(6);
  e.set_queues({{1e6, 0.0, 0.0}});
  SlotAction a;
  a.dev.resize(1);
  a.dev[0].dec = {0.0, 0.0, 1.0, 0.0, 0.0};
  a.dev[0].cpu_local = 1.0;  // hopeless allocation, latency hits the cap
  const SlotOutcome out = e.step(a);
  CHECK(out.dev[0].eta == 0.0);
  CHECK(out.dev[0].queue_after.local ==
        doctest::Approx(1e6 + out.dev[0].arrival));  // no drain happened
  CHECK(e.ratio_j() == 0.0);                         // nothing was credited
}

TEST_CASE("task sampling") {
  SystemConfig cfg;
  cfg.num_devices = 2;
  TaskRanges ranges;
  SUBCASE("fields respect the ranges and the seed") {
    Rng r1(31), r2(31);
    const TaskSpec a = sample_task(r1, ranges, cfg);
    const TaskSpec b = sample_task(r2, ranges, cfg);
    CHECK(a.pathloss_exp == b.pathloss_exp);
    CHECK(a.seed == b.seed);
    CHECK(a.device_xy[0].x == b.device_xy[0].x);
    CHECK(a.pathloss_exp >= ranges.pathloss_lo);
    CHECK(a.pathloss_exp <= ranges.pathloss_hi);
    CHECK(a.rician_k >= ranges.rician_lo);
    CHECK(a.rician_k <= ranges.rician_hi);
    CHECK(a.i_max_bits[0] >= ranges.i_max_lo);
    CHECK(a.i_max_bits[1] <= ranges.i_max_hi);
    bool on_grid = false;
    for (double c : ranges.uav_cap_grid) on_grid = on_grid || c == a.uav_cpu_cap;
    CHECK(on_grid);
  }
  SUBCASE("degenerate ranges collapse to one task") {
    TaskRanges d;
    d.i_max_lo = d.i_max_hi = 8e6;
    d.pathloss_lo = d.pathloss_hi = 2.5;
    d.rician_lo = d.rician_hi = 7.0;
    d.uav_cap_grid = {9e9};
    Rng r(32);
    const TaskSpec t = sample_task(r, d, cfg);
    CHECK(t.i_max_bits[0] == 8e6);
    CHECK(t.pathloss_exp == 2.5);
    CHECK(t.rician_k == 7.0);
    CHECK(t.uav_cpu_cap == 9e9);
  }
  SUBCASE("placements average to the area center") {
    Rng r(33);
    double mx = 0.0, my = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const TaskSpec t = sample_task(r, ranges, cfg);
      for (const auto& p : t.device_xy) {
        mx += p.x / (n * cfg.num_devices);
        my += p.y / (n * cfg.num_devices);
      }
    }
    CHECK(mx == doctest::Approx(500.0).epsilon(0.02));
    CHECK(my == doctest::Approx(500.0).epsilon(0.02));
  }
}

TEST_CASE("slot-action oracle") {
  SystemConfig cfg = one_device_config();
  cfg.weights.v = 1.0;
  const TaskSpec task = fixed_task(cfg);

  SUBCASE("zero queues make every action worthless") {
    Env e(cfg, task);
    e.reset(41);
    const auto [action, obj] = oracle_best_slot_action(e, 4);
    CHECK(obj == 0.0);
  }
  SUBCASE("loaded local queue wants full local compute") {
    Env e(cfg, task);
    e.reset(42);
    e.set_queues({{1e6, 0.0, 0.0}});
    const auto [action, obj] = oracle_best_slot_action(e, 4);
    CHECK(action.dev[0].dec.compute_local == 1.0);
    CHECK(action.dev[0].dec.to_uav == 0.0);
    CHECK(obj > 0.0);
  }
  SUBCASE("finer grids only improve") {
    Env e(cfg, task);
    e.reset(43);
    e.set_queues({{7e5, 3e5, 2e5}});
    const auto [a4, o4] = oracle_best_slot_action(e, 4);
    const auto [a8, o8] = oracle_best_slot_action(e, 8);
    CHECK(o8 >= o4);
  }
  SUBCASE("stepping the oracle action realizes its objective") {
    Env e(cfg, task);
    e.reset(44);
    e.set_queues({{7e5, 3e5, 2e5}});
    const auto [action, obj] = oracle_best_slot_action(e, 5);
    const SlotOutcome out = e.step(action);
    CHECK(realized_p2(out, cfg.weights.v) == doctest::Approx(obj).epsilon(1e-12));
  }
  SUBCASE("grid-restricted actions never beat the oracle") {
    Env e(cfg, task);
    e.reset(45);
    e.set_queues({{9e5, 4e5, 1e5}});
    const int r = 5;
    Rng rng(46);
    std::vector<double> raw(Env::action_dim(1));
    for (int trial = 0; trial < 50; ++trial) {
      Env probe = e;  // evaluate candidates from the same state
      const auto [action, obj] = oracle_best_slot_action(probe, r);
      for (auto& x : raw) {
        x = 2.0 * (static_cast<double>(rng.uniform_index(r + 1)) / r) - 1.0;
      }
      const SlotOutcome out = probe.step_raw(raw);
      CHECK(realized_p2(out, cfg.weights.v) <= obj * (1.0 + 1e-12) + 1e-9);
    }
  }
  SUBCASE("multi-device tasks are rejected") {
    SystemConfig two = cfg;
    two.num_devices = 2;
    Env e(two, default_task(two));
    CHECK_THROWS(oracle_best_slot_action(e, 4));
    Env e1(cfg, task);
    CHECK_THROWS(oracle_best_slot_action(e1, 9));
  }
}

TEST_CASE("weight calibration on the environment") {
  SystemConfig cfg = one_device_config();
  SUBCASE("deterministic in the seed") {
    const auto a = calibrate_weights(cfg, fixed_task(cfg), 64, 7);
    const auto b = calibrate_weights(cfg, fixed_task(cfg), 64, 7);
    CHECK(a.v == b.v);
    CHECK(a.v1 == b.v1);
    CHECK(a.v2 == b.v2);
    CHECK(a.v > 0.0);
  }
  SUBCASE("an idle system falls back to unit weights") {
    TaskSpec t = fixed_task(cfg);
    t.i_max_bits = {0.0};  // no arrivals, queues stay empty
    const auto w = calibrate_weights(cfg, t, 32, 8);
    CHECK(w.v == 1.0);
    CHECK(w.v1 == 1.0);
    CHECK(w.v2 == 1.0);
  }
}

TEST_CASE("extended observation appends the UAV position") {
  SystemConfig cfg = one_device_config();
  cfg.extended_obs = true;
  Env e(cfg, fixed_task(cfg));
  e.reset(3);
  CHECK(e.observation().size() == 1 + 3 + 2);
  CHECK(e.observation()[4] == doctest::Approx(0.5));
}
