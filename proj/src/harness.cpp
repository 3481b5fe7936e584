#include "uavmec/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace uavmec::harness {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// dotted-key config registry

namespace {

struct KvEntry {
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config error: " + key + ": not a number: " + v);
  }
  if (pos != v.size())
    throw std::invalid_argument("config error: " + key + ": trailing junk: " + v);
  return x;
}

long parse_long(const std::string& key, const std::string& v) {
  const double x = parse_double(key, v);
  if (x != std::floor(x))
    throw std::invalid_argument("config error: " + key + ": expected integer: " + v);
  return static_cast<long>(x);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw std::invalid_argument("config error: " + key + ": expected bool: " + v);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(s);
  while (std::getline(is, field, sep)) out.push_back(field);
  return out;
}

template <typename T>
std::string join_list(const std::vector<T>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) os << ',';
    if constexpr (std::is_same_v<T, double>) {
      os << metrics::format_double(xs[i]);
    } else {
      os << xs[i];
    }
  }
  return os.str();
}

std::vector<KvEntry> registry(ExperimentConfig& c) {
  std::vector<KvEntry> r;
  auto add_d = [&](const std::string& key, double& ref) {
    r.push_back({key, [&ref] { return metrics::format_double(ref); },
                 [key, &ref](const std::string& v) { ref = parse_double(key, v); }});
  };
  auto add_i = [&](const std::string& key, int& ref) {
    r.push_back({key, [&ref] { return std::to_string(ref); },
                 [key, &ref](const std::string& v) {
                   ref = static_cast<int>(parse_long(key, v));
                 }});
  };
  auto add_l = [&](const std::string& key, long& ref) {
    r.push_back({key, [&ref] { return std::to_string(ref); },
                 [key, &ref](const std::string& v) { ref = parse_long(key, v); }});
  };
  auto add_b = [&](const std::string& key, bool& ref) {
    r.push_back({key, [&ref] { return std::string(ref ? "1" : "0"); },
                 [key, &ref](const std::string& v) { ref = parse_bool(key, v); }});
  };
  auto add_s = [&](const std::string& key, std::string& ref) {
    r.push_back({key, [&ref] { return ref; },
                 [&ref](const std::string& v) { ref = v; }});
  };

  add_i("sys.num_devices", c.sys.num_devices);
  add_i("sys.num_slots", c.sys.num_slots);
  add_d("sys.slot_tau", c.sys.slot_tau);
  add_d("sys.area_x", c.sys.area_x);
  add_d("sys.area_y", c.sys.area_y);
  add_d("sys.uav_start_x", c.sys.uav_start.x);
  add_d("sys.uav_start_y", c.sys.uav_start.y);
  add_d("sys.uav_end_x", c.sys.uav_end.x);
  add_d("sys.uav_end_y", c.sys.uav_end.y);
  add_d("sys.uav_alt", c.sys.uav_alt);
  add_d("sys.uav_vmax", c.sys.uav_vmax);
  add_d("sys.p_max", c.sys.p_max);
  add_d("sys.cycles_per_bit", c.sys.cycles_per_bit);
  add_d("sys.cpu_local_max", c.sys.cpu_local_max);
  add_d("sys.cpu_uav_max", c.sys.cpu_uav_max);
  add_d("sys.cpu_cloud_max", c.sys.cpu_cloud_max);
  // Arrival bound accepted in MB; stored internally in bits.
  r.push_back({"sys.i_max_mb",
               [&c] { return metrics::format_double(c.sys.i_max_bits / kBitsPerMB); },
               [&c](const std::string& v) {
                 c.sys.i_max_bits = parse_double("sys.i_max_mb", v) * kBitsPerMB;
               }});
  add_d("sys.weights.v", c.sys.weights.v);
  add_d("sys.weights.v1", c.sys.weights.v1);
  add_d("sys.weights.v2", c.sys.weights.v2);
  add_d("sys.latency_cap", c.sys.latency_cap);
  add_d("sys.queue_scale_bits", c.sys.queue_scale_bits);
  add_b("sys.paper_literal_sinr", c.sys.paper_literal_sinr);
  add_b("sys.strict_slot_mode", c.sys.strict_slot_mode);
  add_b("sys.extended_obs", c.sys.extended_obs);
  add_d("channel.ref_gain", c.sys.channel.ref_gain);
  add_d("channel.pathloss_exp", c.sys.channel.pathloss_exp);
  add_d("channel.rician_k", c.sys.channel.rician_k);
  add_d("channel.noise_var", c.sys.channel.noise_var);
  add_d("channel.bandwidth_hz", c.sys.channel.bandwidth);
  add_d("channel.relay_setup_s", c.sys.channel.relay_setup);

  add_d("hp.discount", c.hp.discount);
  add_d("hp.polyak", c.hp.polyak);
  add_d("hp.actor_lr", c.hp.actor_lr);
  add_d("hp.critic_lr", c.hp.critic_lr);
  add_d("hp.meta_lr", c.hp.meta_lr);
  add_i("hp.batch", c.hp.batch);
  add_i("hp.policy_delay", c.hp.policy_delay);
  add_d("hp.explore_noise", c.hp.explore_noise);
  add_d("hp.target_noise", c.hp.target_noise);
  add_d("hp.target_noise_clip", c.hp.target_noise_clip);
  add_i("hp.inner_steps", c.hp.inner_steps);
  add_i("hp.tasks_per_meta_iter", c.hp.tasks_per_meta_iter);
  add_d("hp.reward_clip", c.hp.reward_clip);
  add_d("hp.meta_actor_delta_rate", c.hp.meta_actor_delta_rate);
  r.push_back({"hp.buffer_capacity",
               [&c] { return std::to_string(c.hp.buffer_capacity); },
               [&c](const std::string& v) {
                 c.hp.buffer_capacity =
                     static_cast<std::size_t>(parse_long("hp.buffer_capacity", v));
               }});
  add_i("hp.hidden", c.hp.hidden);
  add_i("hp.layers", c.hp.layers);
  add_b("hp.single_critic", c.hp.single_critic);
  add_b("hp.plain_sgd", c.hp.plain_sgd);
  add_b("hp.meta_target_avg", c.hp.meta_target_avg);

  r.push_back({"ranges.i_max_lo_mb",
               [&c] { return metrics::format_double(c.ranges.i_max_lo / kBitsPerMB); },
               [&c](const std::string& v) {
                 c.ranges.i_max_lo = parse_double("ranges.i_max_lo_mb", v) * kBitsPerMB;
               }});
  r.push_back({"ranges.i_max_hi_mb",
               [&c] { return metrics::format_double(c.ranges.i_max_hi / kBitsPerMB); },
               [&c](const std::string& v) {
                 c.ranges.i_max_hi = parse_double("ranges.i_max_hi_mb", v) * kBitsPerMB;
               }});
  add_d("ranges.pathloss_lo", c.ranges.pathloss_lo);
  add_d("ranges.pathloss_hi", c.ranges.pathloss_hi);
  add_d("ranges.rician_lo", c.ranges.rician_lo);
  add_d("ranges.rician_hi", c.ranges.rician_hi);
  r.push_back({"ranges.uav_cap_grid",
               [&c] { return join_list(c.ranges.uav_cap_grid); },
               [&c](const std::string& v) {
                 c.ranges.uav_cap_grid.clear();
                 for (const auto& f : split(v, ','))
                   c.ranges.uav_cap_grid.push_back(parse_double("ranges.uav_cap_grid", f));
               }});

  add_s("run.agent", c.agent);
  r.push_back({"run.seeds", [&c] { return join_list(c.seeds); },
               [&c](const std::string& v) {
                 c.seeds.clear();
                 for (const auto& f : split(v, ','))
                   c.seeds.push_back(
                       static_cast<std::uint64_t>(parse_long("run.seeds", f)));
                 if (c.seeds.empty())
                   throw std::invalid_argument("config error: run.seeds: empty list");
               }});
  add_i("run.parallel_envs", c.parallel_envs);
  add_i("run.eval_episodes", c.eval_episodes);
  add_b("run.full_scale", c.full_scale);
  add_s("run.out_dir", c.out_dir);
  add_l("run.train_steps", c.train_steps);
  add_l("run.warmup_steps", c.warmup_steps);
  add_l("run.eval_interval", c.eval_interval);
  add_i("run.curve_eval_episodes", c.curve_eval_episodes);
  add_i("run.meta_task_pool", c.meta_task_pool);
  add_b("run.calibrate", c.calibrate);
  add_i("run.calibrate_probes", c.calibrate_probes);
  add_i("run.oracle_grid", c.oracle_grid);
  add_i("run.validate_episodes", c.validate_episodes);
  add_l("run.audit_slots", c.audit_slots);
  add_b("run.resume", c.resume);
  r.push_back({"run.uav_cpu_sweep", [&c] { return join_list(c.uav_cpu_sweep); },
               [&c](const std::string& v) {
                 c.uav_cpu_sweep.clear();
                 for (const auto& f : split(v, ','))
                   c.uav_cpu_sweep.push_back(parse_double("run.uav_cpu_sweep", f));
               }});
  add_b("run.sweep_train_missing", c.sweep_train_missing);
  add_l("run.sweep_train_steps", c.sweep_train_steps);
  return r;
}

}  // namespace

void apply_kv(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (auto& e : registry(cfg)) {
    if (e.key == key) {
      e.set(value);
      return;
    }
  }
  throw std::invalid_argument("config error: unknown key: " + key);
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config error: cannot open file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (blank) continue;
      throw std::invalid_argument("config error: " + path + ":" +
                                  std::to_string(lineno) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_kv(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string dump_config(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  auto entries = registry(copy);
  std::sort(entries.begin(), entries.end(),
            [](const KvEntry& a, const KvEntry& b) { return a.key < b.key; });
  std::ostringstream os;
  for (const auto& e : entries) os << e.key << " = " << e.get() << '\n';
  return os.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  return metrics::hash_hex(dump_config(cfg));
}

// ---------------------------------------------------------------------------
// evaluation

Aggregate aggregate(const std::vector<double>& xs) {
  Aggregate a;
  a.n = static_cast<int>(xs.size());
  if (a.n == 0) return a;
  double sum = 0.0;
  for (double x : xs) sum += x;
  a.mean = sum / a.n;
  if (a.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - a.mean) * (x - a.mean);
    a.se = std::sqrt(ss / (a.n - 1)) / std::sqrt(static_cast<double>(a.n));
  }
  return a;
}

namespace {

EpisodeStats run_episode(const SystemConfig& sys, const env::TaskSpec& task,
                         const nn::DenseNet* actor, std::uint64_t episode_seed,
                         double reward_scale, double reward_clip) {
  env::Env e(sys, task);
  e.reset(episode_seed);
  Rng action_rng(Rng::mix(episode_seed, 0xAC7));
  const int act_dim = env::Env::action_dim(task.num_devices());
  std::vector<double> raw(act_dim);
  EpisodeStats st;
  double ql = 0.0, qu = 0.0, qc = 0.0;
  while (!e.done()) {
    if (actor) {
      raw = nn::forward(*actor, e.observation());
    } else {
      for (auto& x : raw) x = action_rng.uniform(-1.0, 1.0);
    }
    const env::SlotOutcome out = e.step_raw(raw);
    st.episode_return += out.reward;
    if (reward_scale > 0.0) {
      st.clipped_return += rl::shape_reward(out.reward, reward_scale, reward_clip);
    }
    if (!e.audit_last_step().ok) st.audit_ok = false;
    double sl = 0.0, su = 0.0, sc = 0.0;
    for (const auto& d : out.dev) {
      sl += d.queue_after.local;
      su += d.queue_after.uav;
      sc += d.queue_after.cloud;
    }
    const double k_n = static_cast<double>(out.dev.size());
    ql += sl / k_n;
    qu += su / k_n;
    qc += sc / k_n;
  }
  const double n = static_cast<double>(sys.num_slots);
  st.q_local = ql / n;
  st.q_uav = qu / n;
  st.q_cloud = qc / n;
  st.efficiency = e.ratio_j();
  return st;
}

}  // namespace

std::vector<EpisodeStats> evaluate_policy(const SystemConfig& sys,
                                          const env::TaskSpec& task,
                                          const nn::DenseNet* actor, int episodes,
                                          std::uint64_t seed, int parallel,
                                          double reward_scale, double reward_clip) {
  std::vector<EpisodeStats> out(episodes);
  const int workers = std::max(1, std::min(parallel, episodes));
  if (workers == 1) {
    for (int i = 0; i < episodes; ++i) {
      out[i] = run_episode(sys, task, actor, Rng::mix(seed, i), reward_scale,
                           reward_clip);
    }
    return out;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (int i = w; i < episodes; i += workers) {
        out[i] = run_episode(sys, task, actor, Rng::mix(seed, i), reward_scale,
                             reward_clip);
      }
    });
  }
  for (auto& t : threads) t.join();
  return out;
}

double reference_reward_scale(const SystemConfig& sys, const env::TaskSpec& task,
                              int slots, std::uint64_t seed) {
  env::Env e(sys, task);
  e.reset(Rng::mix(seed, 0));
  Rng arng(Rng::mix(seed, 1));
  std::uint64_t episode = 0;
  std::vector<double> raw(env::Env::action_dim(task.num_devices()));
  double acc = 0.0;
  for (int s = 0; s < slots; ++s) {
    if (e.done()) e.reset(Rng::mix(seed, ++episode));
    for (auto& x : raw) x = arng.uniform(-1.0, 1.0);
    acc += std::abs(e.step_raw(raw).reward);
  }
  const double mean = slots > 0 ? acc / slots : 0.0;
  return mean > 1e-12 ? mean : 1.0;
}

// ---------------------------------------------------------------------------
// training

namespace {

struct CurveEval {
  double mean_reward = 0.0;
  bool audit_ok = true;
};

CurveEval curve_eval_point(const ExperimentConfig& cfg, const SystemConfig& sys,
                           const rl::TD3Learner& learner,
                           const std::vector<env::TaskSpec>& eval_tasks,
                           std::uint64_t seed, long step, metrics::Writer* mw,
                           const std::string& chash) {
  CurveEval ce;
  std::vector<double> returns;
  int episode_counter = 0;
  for (std::size_t ti = 0; ti < eval_tasks.size(); ++ti) {
    const auto stats =
        evaluate_policy(sys, eval_tasks[ti], &learner.online.actor,
                        cfg.curve_eval_episodes, Rng::mix(seed, 0xE0A1 + ti),
                        cfg.effective_parallel());
    for (const auto& st : stats) {
      returns.push_back(st.episode_return);
      ce.audit_ok = ce.audit_ok && st.audit_ok;
      if (mw) {
        metrics::Record rec;
        rec.config_hash = chash;
        rec.agent = agent_name(learner.kind);
        rec.phase = "train";
        rec.run_seed = seed;
        rec.task_seed = eval_tasks[ti].seed;
        rec.uav_cap = eval_tasks[ti].uav_cpu_cap;
        rec.step = step;
        rec.episode = episode_counter++;
        rec.mean_reward = st.episode_return;
        rec.efficiency = st.efficiency;
        rec.q_local = st.q_local;
        rec.q_uav = st.q_uav;
        rec.q_cloud = st.q_cloud;
        rec.audit_pass = st.audit_ok;
        mw->write(rec);
      }
    }
  }
  ce.mean_reward = aggregate(returns).mean;
  return ce;
}

}  // namespace

TrainResult train_agent(const ExperimentConfig& cfg, rl::AgentKind kind,
                        std::uint64_t seed, const env::TaskSpec& train_task,
                        const std::vector<env::TaskSpec>& eval_tasks,
                        metrics::Writer* mw, std::ostream* log,
                        const rl::TD3Learner* start_from) {
  SystemConfig sys = cfg.sys;
  sys.validate();
  const std::string chash = config_hash(cfg);

  TrainResult res{rl::TD3Learner{}, 0, sys.weights, true, {}, {}};
  if (cfg.calibrate) {
    sys.weights = env::calibrate_weights(sys, train_task, cfg.calibrate_probes,
                                         Rng::mix(seed, 0xCA1));
    res.weights_used = sys.weights;
    if (log) {
      *log << "calibrated weights v=" << metrics::format_double(sys.weights.v)
           << " v1=" << metrics::format_double(sys.weights.v1)
           << " v2=" << metrics::format_double(sys.weights.v2) << '\n';
    }
  }

  const int obs_dim = env::Env::obs_dim(sys.num_devices, sys.extended_obs);
  const int act_dim = env::Env::action_dim(sys.num_devices);
  Rng init_rng(Rng::mix(seed, 0xA11));
  rl::TD3Learner learner = rl::make_learner(kind, obs_dim, act_dim, cfg.hp, init_rng);
  if (start_from) {
    if (start_from->kind != kind)
      throw std::invalid_argument("train_agent: checkpoint agent kind mismatch");
    learner.online = start_from->online;
    learner.targets = start_from->targets;
    learner.critic_updates = start_from->critic_updates;
  }
  Rng train_rng(Rng::mix(seed, 0x7A));

  long last_eval_step = std::numeric_limits<long>::min();
  auto maybe_eval = [&](long step, bool force) {
    if (!force && (cfg.eval_interval <= 0 || step - last_eval_step < cfg.eval_interval))
      return;
    if (!res.curve_steps.empty() && res.curve_steps.back() == step) return;
    last_eval_step = step;
    const CurveEval ce =
        curve_eval_point(cfg, sys, learner, eval_tasks, seed, step, mw, chash);
    res.curve_steps.push_back(static_cast<double>(step));
    res.curve_rewards.push_back(ce.mean_reward);
    res.audit_ok = res.audit_ok && ce.audit_ok;
    if (log) *log << "step " << step << " eval mean reward " << ce.mean_reward << '\n';
  };

  if (kind == rl::AgentKind::mtd3) {
    // Fixed task pool; each meta-iteration draws tasks from it. Buffers and
    // environments persist per pool entry.
    Rng pool_rng(Rng::mix(seed, 0xB001));
    std::vector<std::unique_ptr<rl::TaskRuntime>> pool;
    for (int i = 0; i < cfg.meta_task_pool; ++i) {
      env::TaskSpec t = env::sample_task(pool_rng, cfg.ranges, sys);
      pool.push_back(std::make_unique<rl::TaskRuntime>(
          sys, std::move(t), cfg.hp.buffer_capacity, Rng::mix(seed, 0xEE00 + i)));
    }
    // Warmup every pool task; freeze one shared reward scale from the pooled
    // probe, then backfill the buffers.
    Rng warm_rng(Rng::mix(seed, 0x3A));
    std::vector<std::vector<rl::RawTransition>> held(pool.size());
    std::vector<rl::RawTransition> pooled;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      held[i] = rl::collect_random(*pool[i], static_cast<int>(cfg.warmup_steps), warm_rng);
      res.env_steps += cfg.warmup_steps;
      pooled.insert(pooled.end(), held[i].begin(), held[i].end());
    }
    if (!start_from) learner.reward_scale = rl::reward_scale_from(pooled);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      rl::push_scaled(*pool[i], held[i], learner.reward_scale, cfg.hp.reward_clip);
    }
    if (log) *log << "reward scale " << learner.reward_scale << '\n';

    const long iter_cost =
        static_cast<long>(cfg.hp.tasks_per_meta_iter) * cfg.hp.inner_steps;
    maybe_eval(res.env_steps, true);
    while (res.env_steps + iter_cost <= cfg.train_steps) {
      std::vector<rl::TaskRuntime*> picked;
      for (int i = 0; i < cfg.hp.tasks_per_meta_iter; ++i) {
        picked.push_back(pool[train_rng.uniform_index(pool.size())].get());
      }
      rl::mtd3_meta_step(learner, picked, train_rng);
      res.env_steps += iter_cost;
      maybe_eval(res.env_steps, false);
    }
    maybe_eval(res.env_steps, true);
  } else {
    rl::TaskRuntime rt(sys, train_task, cfg.hp.buffer_capacity, Rng::mix(seed, 0xE9));
    Rng warm_rng(Rng::mix(seed, 0x3A));
    const auto warm =
        rl::collect_random(rt, static_cast<int>(cfg.warmup_steps), warm_rng);
    if (!start_from) learner.reward_scale = rl::reward_scale_from(warm);
    rl::push_scaled(rt, warm, learner.reward_scale, cfg.hp.reward_clip);
    res.env_steps += cfg.warmup_steps;
    if (log) *log << "reward scale " << learner.reward_scale << '\n';

    maybe_eval(res.env_steps, true);
    while (res.env_steps < cfg.train_steps) {
      rl::online_step(learner, rt, train_rng);
      res.env_steps += 1;
      maybe_eval(res.env_steps, false);
    }
    maybe_eval(res.env_steps, true);
  }

  res.learner = std::move(learner);
  return res;
}

rl::PolicyNets adapt_to_task(const ExperimentConfig& cfg, const rl::TD3Learner& meta,
                             const env::TaskSpec& task, std::uint64_t seed) {
  SystemConfig sys = cfg.sys;
  rl::TD3Learner local = meta;  // adaptation blends targets on the copy only
  rl::TaskRuntime rt(sys, task, cfg.hp.buffer_capacity, Rng::mix(seed, 0xAD));
  Rng rng(Rng::mix(seed, 0xADA));
  const auto warm = rl::collect_random(rt, static_cast<int>(cfg.warmup_steps), rng);
  rl::push_scaled(rt, warm, local.reward_scale, cfg.hp.reward_clip);
  rl::AdaptResult res = rl::mtd3_inner_adapt(local, rt, rng);
  return std::move(res.adapted);
}

// ---------------------------------------------------------------------------
// sweep

std::string sweep_checkpoint_path(const ExperimentConfig& cfg, const std::string& agent,
                                  int cap_index) {
  return cfg.out_dir + "/ckpt_" + agent + "_cap" + std::to_string(cap_index) + ".bin";
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, rl::AgentKind kind,
                                std::uint64_t seed, metrics::Writer* mw,
                                std::ostream* log) {
  if (cfg.uav_cpu_sweep.empty())
    throw std::invalid_argument("config error: run.uav_cpu_sweep: empty sweep");
  const std::string chash = config_hash(cfg);
  std::vector<SweepRow> rows;
  for (std::size_t ci = 0; ci < cfg.uav_cpu_sweep.size(); ++ci) {
    const double cap = cfg.uav_cpu_sweep[ci];
    env::TaskSpec task = env::default_task(cfg.sys);
    task.uav_cpu_cap = cap;

    const std::string ckpt = sweep_checkpoint_path(cfg, agent_name(kind), static_cast<int>(ci));
    rl::TD3Learner learner;
    if (fs::exists(ckpt)) {
      learner = rl::load_learner(ckpt);
    } else if (cfg.sweep_train_missing) {
      ExperimentConfig tc = cfg;
      tc.sys.cpu_uav_max = cap;
      if (tc.sweep_train_steps > 0) tc.train_steps = tc.sweep_train_steps;
      // Meta-training at a fixed capacity: restrict the task distribution.
      tc.ranges.uav_cap_grid = {cap};
      if (log) *log << "training missing checkpoint " << ckpt << '\n';
      TrainResult tr = train_agent(tc, kind, Rng::mix(seed, 0x5EE0 + ci), task, {task},
                                   nullptr, log);
      learner = std::move(tr.learner);
      fs::create_directories(cfg.out_dir);
      rl::save_learner(ckpt, learner);
    } else {
      throw std::runtime_error("sweep: missing checkpoint for agent " +
                               std::string(agent_name(kind)) + " at capacity index " +
                               std::to_string(ci) + " (" + ckpt + ")");
    }

    const auto stats = evaluate_policy(cfg.sys, task, &learner.online.actor,
                                       cfg.effective_eval_episodes(),
                                       Rng::mix(seed, 0x5A3E + ci),
                                       cfg.effective_parallel());
    SweepRow row;
    row.agent = agent_name(kind);
    row.uav_cap = cap;
    row.episodes = static_cast<int>(stats.size());
    std::vector<double> rets, effs, qls, qus, qcs;
    for (std::size_t ei = 0; ei < stats.size(); ++ei) {
      const auto& st = stats[ei];
      rets.push_back(st.episode_return);
      effs.push_back(st.efficiency);
      qls.push_back(st.q_local);
      qus.push_back(st.q_uav);
      qcs.push_back(st.q_cloud);
      row.audit_ok = row.audit_ok && st.audit_ok;
      if (mw) {
        metrics::Record rec;
        rec.config_hash = chash;
        rec.agent = row.agent;
        rec.phase = "sweep";
        rec.run_seed = seed;
        rec.task_seed = task.seed;
        rec.uav_cap = cap;
        rec.step = 0;
        rec.episode = static_cast<int>(ei);
        rec.mean_reward = st.episode_return;
        rec.efficiency = st.efficiency;
        rec.q_local = st.q_local;
        rec.q_uav = st.q_uav;
        rec.q_cloud = st.q_cloud;
        rec.audit_pass = st.audit_ok;
        mw->write(rec);
      }
    }
    row.reward = aggregate(rets);
    row.efficiency = aggregate(effs);
    row.q_local = aggregate(qls);
    row.q_uav = aggregate(qus);
    row.q_cloud = aggregate(qcs);
    rows.push_back(row);
  }

  // Ascending capacities should not lose efficiency; warn when they do.
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].uav_cap > rows[i - 1].uav_cap &&
        rows[i].efficiency.mean < rows[i - 1].efficiency.mean && log) {
      *log << "warning: efficiency decreased from capacity "
           << rows[i - 1].uav_cap << " to " << rows[i].uav_cap << '\n';
    }
  }
  return rows;
}

void write_sweep_table(const std::string& path, const std::vector<SweepRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << "agent\tuav_cap\tepisodes\treward_mean\treward_se\tefficiency_mean\t"
        "efficiency_se\tq_local_mean\tq_local_se\tq_uav_mean\tq_uav_se\t"
        "q_cloud_mean\tq_cloud_se\taudit_ok\n";
  for (const auto& r : rows) {
    os << r.agent << '\t' << metrics::format_double(r.uav_cap) << '\t' << r.episodes
       << '\t' << metrics::format_double(r.reward.mean) << '\t'
       << metrics::format_double(r.reward.se) << '\t'
       << metrics::format_double(r.efficiency.mean) << '\t'
       << metrics::format_double(r.efficiency.se) << '\t'
       << metrics::format_double(r.q_local.mean) << '\t'
       << metrics::format_double(r.q_local.se) << '\t'
       << metrics::format_double(r.q_uav.mean) << '\t'
       << metrics::format_double(r.q_uav.se) << '\t'
       << metrics::format_double(r.q_cloud.mean) << '\t'
       << metrics::format_double(r.q_cloud.se) << '\t' << (r.audit_ok ? 1 : 0) << '\n';
  }
}

// ---------------------------------------------------------------------------
// oracle validation

GapStats validate_against_oracle(const SystemConfig& sys, const env::TaskSpec& task,
                                 const nn::DenseNet* actor, int episodes, int grid_res,
                                 std::uint64_t seed) {
  if (task.num_devices() != 1)
    throw std::invalid_argument("validate_against_oracle: single-device tasks only");
  std::vector<double> gaps;
  env::Env e(sys, task);
  const int act_dim = env::Env::action_dim(1);
  std::vector<double> raw(act_dim);
  std::vector<double> ref_raw(act_dim);
  for (int ep = 0; ep < episodes; ++ep) {
    const std::uint64_t es = Rng::mix(seed, ep);
    e.reset(es);
    Rng eval_rng(Rng::mix(es, 0xAC7));
    Rng ref_rng(Rng::mix(es, 0x2EF));
    while (!e.done()) {
      const auto [best_action, best_obj] = env::oracle_best_slot_action(e, grid_res);
      if (actor) {
        raw = nn::forward(*actor, e.observation());
      } else {
        for (auto& x : raw) x = eval_rng.uniform(-1.0, 1.0);
      }
      // Counterfactual one-shot evaluation at the probe state: the clone sees
      // the same fading draw and ratio context the oracle previewed, so the
      // gap isolates per-state decision quality from trajectory effects.
      env::Env clone = e;
      const env::SlotOutcome out = clone.step_raw(raw);
      const double realized = env::realized_p2(out, sys.weights.v);
      gaps.push_back((best_obj - realized) / std::max(1.0, std::abs(best_obj)));
      // the reference stream itself advances with uniform random actions
      for (auto& x : ref_raw) x = ref_rng.uniform(-1.0, 1.0);
      e.step_raw(ref_raw);
    }
  }
  const Aggregate a = aggregate(gaps);
  return {a.mean, a.se, static_cast<long>(gaps.size())};
}

// ---------------------------------------------------------------------------
// plot data

void emit_plot_data(const std::string& metrics_path, const std::string& out_dir) {
  const std::vector<metrics::Record> recs = metrics::read_metrics_file(metrics_path);
  fs::create_directories(out_dir);

  // Training curve: mean reward per (agent, run seed, step).
  {
    std::ofstream os(out_dir + "/reward_curve.tsv");
    os << "agent\trun_seed\tstep\tmean_reward\tepisodes\n";
    std::map<std::tuple<std::string, std::uint64_t, long>, std::vector<double>> groups;
    for (const auto& r : recs) {
      if (r.phase != "train") continue;
      groups[{r.agent, r.run_seed, r.step}].push_back(r.mean_reward);
    }
    for (const auto& [key, vals] : groups) {
      const Aggregate a = aggregate(vals);
      os << std::get<0>(key) << '\t' << std::get<1>(key) << '\t' << std::get<2>(key)
         << '\t' << metrics::format_double(a.mean) << '\t' << a.n << '\n';
    }
  }

  // Capacity sweeps: one file per metric; efficiency reported in MB/s to
  // match the headline unit, queue lengths in bits.
  struct Sel {
    const char* file;
    double (*pick)(const metrics::Record&);
  };
  const Sel sels[] = {
      {"efficiency_vs_capacity.tsv",
       [](const metrics::Record& r) { return r.efficiency / kBitsPerMB; }},
      {"queue_local_vs_capacity.tsv", [](const metrics::Record& r) { return r.q_local; }},
      {"queue_uav_vs_capacity.tsv", [](const metrics::Record& r) { return r.q_uav; }},
      {"queue_cloud_vs_capacity.tsv", [](const metrics::Record& r) { return r.q_cloud; }},
  };
  for (const auto& sel : sels) {
    std::ofstream os(out_dir + "/" + sel.file);
    os << "agent\tuav_cap\tmean\tse\tepisodes\n";
    std::map<std::pair<std::string, double>, std::vector<double>> groups;
    for (const auto& r : recs) {
      if (r.phase != "sweep") continue;
      groups[{r.agent, r.uav_cap}].push_back(sel.pick(r));
    }
    for (const auto& [key, vals] : groups) {
      const Aggregate a = aggregate(vals);
      os << key.first << '\t' << metrics::format_double(key.second) << '\t'
         << metrics::format_double(a.mean) << '\t' << metrics::format_double(a.se)
         << '\t' << a.n << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// constraint/queue fuzz

std::string audit_fuzz(const SystemConfig& sys, const env::TaskSpec& task, long slots,
                       std::uint64_t seed) {
  env::Env e(sys, task);
  e.reset(Rng::mix(seed, 0));
  Rng arng(Rng::mix(seed, 1));
  std::uint64_t episode = 0;
  const int act_dim = env::Env::action_dim(task.num_devices());
  std::vector<double> raw(act_dim);
  for (long s = 0; s < slots; ++s) {
    if (e.done()) e.reset(Rng::mix(seed, ++episode));
    for (auto& x : raw) x = arng.uniform(-1.0, 1.0);
    const auto pre = e.queues();
    const env::SlotOutcome out = e.step_raw(raw);
    const auto audit = e.audit_last_step();
    if (!audit.ok) return "slot " + std::to_string(s) + ": " + audit.detail;
    for (std::size_t k = 0; k < out.dev.size(); ++k) {
      const auto& d = out.dev[k];
      const auto& q = d.queue_after;
      if (q.local < 0.0 || q.uav < 0.0 || q.cloud < 0.0)
        return "slot " + std::to_string(s) + ": negative backlog";
      if (!(std::isfinite(q.local) && std::isfinite(q.uav) && std::isfinite(q.cloud)))
        return "slot " + std::to_string(s) + ": non-finite backlog";
      const double pre_total = pre[k].total();
      if (d.bits > pre_total * (1.0 + 1e-9) + 1e-9)
        return "slot " + std::to_string(s) + ": computed bits exceed backlog";
      const double expected = pre_total - d.bits + d.arrival;
      const double tol = 1e-9 * (1.0 + std::max(pre_total, std::abs(expected)));
      if (q.total() < expected - tol)
        return "slot " + std::to_string(s) + ": conservation bound violated";
      if (q.total() > expected + tol)
        return "slot " + std::to_string(s) + ": backlog created from nothing";
    }
  }
  return "";
}

}  // namespace uavmec::harness
