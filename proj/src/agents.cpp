#include "uavmec/agents.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace uavmec::rl {

const char* agent_name(AgentKind k) {
  switch (k) {
    case AgentKind::ddpg: return "ddpg";
    case AgentKind::td3: return "td3";
    case AgentKind::mtd3: return "mtd3";
  }
  return "?";
}

std::optional<AgentKind> parse_agent(const std::string& name) {
  if (name == "ddpg") return AgentKind::ddpg;
  if (name == "td3") return AgentKind::td3;
  if (name == "mtd3") return AgentKind::mtd3;
  return std::nullopt;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim)
    : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: zero capacity");
  obs_.resize(capacity * obs_dim);
  act_.resize(capacity * act_dim);
  next_obs_.resize(capacity * obs_dim);
  reward_.resize(capacity);
  terminal_.resize(capacity);
}

void ReplayBuffer::push(std::span<const double> obs, std::span<const double> act,
                        double reward, std::span<const double> next_obs, bool terminal) {
  if (static_cast<int>(obs.size()) != obs_dim_ ||
      static_cast<int>(next_obs.size()) != obs_dim_ ||
      static_cast<int>(act.size()) != act_dim_)
    throw std::invalid_argument("ReplayBuffer::push: dim mismatch");
  std::copy(obs.begin(), obs.end(), obs_.begin() + cursor_ * obs_dim_);
  std::copy(act.begin(), act.end(), act_.begin() + cursor_ * act_dim_);
  std::copy(next_obs.begin(), next_obs.end(), next_obs_.begin() + cursor_ * obs_dim_);
  reward_[cursor_] = reward;
  terminal_[cursor_] = terminal ? 1 : 0;
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

ReplayBuffer::Batch ReplayBuffer::sample(int m, Rng& rng) const {
  if (size_ == 0) throw std::logic_error("ReplayBuffer::sample: empty buffer");
  Batch b;
  b.m = m;
  b.obs_dim = obs_dim_;
  b.act_dim = act_dim_;
  b.obs.resize(static_cast<std::size_t>(m) * obs_dim_);
  b.act.resize(static_cast<std::size_t>(m) * act_dim_);
  b.next_obs.resize(static_cast<std::size_t>(m) * obs_dim_);
  b.reward.resize(m);
  b.terminal.resize(m);
  for (int i = 0; i < m; ++i) {
    const std::size_t idx = rng.uniform_index(size_);
    std::copy_n(obs_.begin() + idx * obs_dim_, obs_dim_, b.obs.begin() + i * obs_dim_);
    std::copy_n(act_.begin() + idx * act_dim_, act_dim_, b.act.begin() + i * act_dim_);
    std::copy_n(next_obs_.begin() + idx * obs_dim_, obs_dim_,
                b.next_obs.begin() + i * obs_dim_);
    b.reward[i] = reward_[idx];
    b.terminal[i] = terminal_[idx];
  }
  return b;
}

TD3Learner make_learner(AgentKind kind, int obs_dim, int act_dim,
                        const AgentHyperparams& hp, Rng& rng) {
  TD3Learner l;
  l.kind = kind;
  l.hp = kind == AgentKind::ddpg ? ddpg_reduction(hp) : hp;

  std::vector<int> actor_widths{obs_dim};
  std::vector<int> critic_widths{obs_dim + act_dim};
  for (int i = 0; i < hp.layers; ++i) {
    actor_widths.push_back(hp.hidden);
    critic_widths.push_back(hp.hidden);
  }
  actor_widths.push_back(act_dim);
  critic_widths.push_back(1);

  l.online.actor = nn::DenseNet(actor_widths, nn::OutputActivation::bounded);
  l.online.actor.init_params(rng, 1e-3);  // near-zero initial policy
  l.online.q1 = nn::DenseNet(critic_widths, nn::OutputActivation::identity);
  l.online.q1.init_params(rng);
  l.online.q2 = nn::DenseNet(critic_widths, nn::OutputActivation::identity);
  l.online.q2.init_params(rng);

  l.targets.actor = l.online.actor;
  l.targets.q1 = l.online.q1;
  l.targets.q2 = l.online.q2;
  return l;
}

std::vector<double> act(const nn::DenseNet& actor, std::span<const double> obs,
                        double noise_sigma, Rng& rng) {
  std::vector<double> a = nn::forward(actor, obs);
  if (noise_sigma > 0.0) {
    for (double& x : a) x = std::clamp(x + noise_sigma * rng.normal(), -1.0, 1.0);
  }
  return a;
}

AgentHyperparams ddpg_reduction(AgentHyperparams hp) {
  hp.single_critic = true;
  hp.policy_delay = 1;
  hp.target_noise = 0.0;
  return hp;
}

namespace {

std::vector<double> critic_input(std::span<const double> obs, std::span<const double> act) {
  std::vector<double> in;
  in.reserve(obs.size() + act.size());
  in.insert(in.end(), obs.begin(), obs.end());
  in.insert(in.end(), act.begin(), act.end());
  return in;
}

// Smoothed bootstrap targets y_i. No rng draws when target_noise == 0.
std::vector<double> compute_targets(const TargetNets& targets,
                                    const ReplayBuffer::Batch& batch,
                                    const AgentHyperparams& hp, Rng& rng) {
  std::vector<double> y(batch.m);
  for (int i = 0; i < batch.m; ++i) {
    std::span<const double> s2(batch.next_obs.data() + i * batch.obs_dim, batch.obs_dim);
    std::vector<double> a2 = nn::forward(targets.actor, s2);
    if (hp.target_noise > 0.0) {
      for (double& x : a2) {
        const double eps = std::clamp(hp.target_noise * rng.normal(),
                                      -hp.target_noise_clip, hp.target_noise_clip);
        x = std::clamp(x + eps, -1.0, 1.0);
      }
    }
    const std::vector<double> in = critic_input(s2, a2);
    double qt = nn::forward(targets.q1, in)[0];
    if (!hp.single_critic) qt = std::min(qt, nn::forward(targets.q2, in)[0]);
    const double mask = batch.terminal[i] ? 0.0 : 1.0;
    y[i] = batch.reward[i] + hp.discount * mask * qt;
  }
  return y;
}

// Mean squared error of one critic against y, gradient accumulated.
double critic_mse_grad(const nn::DenseNet& critic, const ReplayBuffer::Batch& batch,
                       std::span<const double> y, std::vector<double>& grad) {
  nn::ForwardTrace trace;
  double loss = 0.0;
  const double inv_m = 1.0 / batch.m;
  for (int i = 0; i < batch.m; ++i) {
    std::span<const double> s(batch.obs.data() + i * batch.obs_dim, batch.obs_dim);
    std::span<const double> a(batch.act.data() + i * batch.act_dim, batch.act_dim);
    const std::vector<double> in = critic_input(s, a);
    const double q = nn::forward(critic, in, &trace)[0];
    const double err = q - y[i];
    loss += err * err;
    const double upstream[1] = {2.0 * err * inv_m};
    nn::backward(critic, trace, upstream, grad);
  }
  return loss * inv_m;
}

}  // namespace

double critic_update(PolicyNets& online, const TargetNets& targets,
                     const ReplayBuffer::Batch& batch, const AgentHyperparams& hp,
                     Rng& rng) {
  const std::vector<double> y = compute_targets(targets, batch, hp, rng);

  std::vector<double> grad(online.q1.param_count(), 0.0);
  const double loss1 = critic_mse_grad(online.q1, batch, y, grad);
  nn::sgd_adam_step(online.q1.params(), grad, online.q1_opt, hp.critic_lr, hp.plain_sgd);
  if (hp.single_critic) return loss1;

  std::fill(grad.begin(), grad.end(), 0.0);
  const double loss2 = critic_mse_grad(online.q2, batch, y, grad);
  nn::sgd_adam_step(online.q2.params(), grad, online.q2_opt, hp.critic_lr, hp.plain_sgd);
  return 0.5 * (loss1 + loss2);
}

double actor_update(PolicyNets& online, TargetNets& targets,
                    const ReplayBuffer::Batch& batch, const AgentHyperparams& hp) {
  const int obs_dim = batch.obs_dim;
  const int act_dim = batch.act_dim;
  std::vector<double> agrad(online.actor.param_count(), 0.0);
  std::vector<double> qgrad_scratch(online.q1.param_count(), 0.0);
  std::vector<double> in_grad(obs_dim + act_dim, 0.0);
  nn::ForwardTrace atrace, qtrace;
  double mean_q = 0.0;
  const double inv_m = 1.0 / batch.m;
  for (int i = 0; i < batch.m; ++i) {
    std::span<const double> s(batch.obs.data() + i * obs_dim, obs_dim);
    const std::vector<double> a = nn::forward(online.actor, s, &atrace);
    const std::vector<double> in = critic_input(s, a);
    const double q = nn::forward(online.q1, in, &qtrace)[0];
    mean_q += q;
    const double upstream[1] = {1.0};
    nn::backward(online.q1, qtrace, upstream, qgrad_scratch, in_grad);
    // Ascend Q: descend -Q through the actor.
    std::vector<double> a_upstream(act_dim);
    for (int d = 0; d < act_dim; ++d) a_upstream[d] = -in_grad[obs_dim + d] * inv_m;
    nn::backward(online.actor, atrace, a_upstream, agrad);
  }
  mean_q *= inv_m;
  nn::sgd_adam_step(online.actor.params(), agrad, online.actor_opt, hp.actor_lr,
                    hp.plain_sgd);

  nn::polyak_update(targets.actor.params(), online.actor.params(), hp.polyak);
  nn::polyak_update(targets.q1.params(), online.q1.params(), hp.polyak);
  if (!hp.single_critic) {
    nn::polyak_update(targets.q2.params(), online.q2.params(), hp.polyak);
  }
  return mean_q;
}

double td3_critic_update(TD3Learner& l, const ReplayBuffer::Batch& b, Rng& rng) {
  return critic_update(l.online, l.targets, b, l.hp, rng);
}

double td3_actor_update(TD3Learner& l, const ReplayBuffer::Batch& b) {
  return actor_update(l.online, l.targets, b, l.hp);
}

double ddpg_critic_update(TD3Learner& l, const ReplayBuffer::Batch& b, Rng& rng) {
  return critic_update(l.online, l.targets, b, ddpg_reduction(l.hp), rng);
}

double ddpg_actor_update(TD3Learner& l, const ReplayBuffer::Batch& b) {
  return actor_update(l.online, l.targets, b, ddpg_reduction(l.hp));
}

StepLosses train_step(TD3Learner& learner, const ReplayBuffer& buffer, Rng& rng) {
  StepLosses out;
  if (buffer.size() < static_cast<std::size_t>(learner.hp.batch)) return out;
  const ReplayBuffer::Batch batch = buffer.sample(learner.hp.batch, rng);
  out.critic = critic_update(learner.online, learner.targets, batch, learner.hp, rng);
  learner.critic_updates += 1;
  if (learner.critic_updates % learner.hp.policy_delay == 0) {
    out.actor_mean_q = actor_update(learner.online, learner.targets, batch, learner.hp);
    out.actor_updated = true;
  }
  return out;
}

TaskRuntime::TaskRuntime(const SystemConfig& cfg, env::TaskSpec task_spec,
                         std::size_t buffer_capacity, std::uint64_t seed)
    : spec(std::move(task_spec)),
      environment(cfg, spec),
      buffer(buffer_capacity, env::Env::obs_dim(spec.num_devices(), cfg.extended_obs),
             env::Env::action_dim(spec.num_devices())),
      seed_base(seed) {
  begin_episode();
}

void TaskRuntime::begin_episode() {
  episode_counter += 1;
  environment.reset(Rng::mix(seed_base, episode_counter));
  obs = environment.observation();
}

std::vector<RawTransition> collect_random(TaskRuntime& task, int steps, Rng& rng) {
  std::vector<RawTransition> out;
  out.reserve(steps);
  const int act_dim = env::Env::action_dim(task.spec.num_devices());
  std::vector<double> raw(act_dim);
  for (int t = 0; t < steps; ++t) {
    if (task.environment.done()) task.begin_episode();
    for (auto& x : raw) x = rng.uniform(-1.0, 1.0);
    RawTransition tr;
    tr.obs = task.obs;
    tr.act = raw;
    const env::SlotOutcome res = task.environment.step_raw(raw);
    tr.reward = res.reward;
    tr.next_obs = task.environment.observation();
    tr.terminal = task.environment.done();
    task.obs = tr.next_obs;
    out.push_back(std::move(tr));
  }
  return out;
}

double reward_scale_from(std::span<const RawTransition> transitions) {
  if (transitions.empty()) return 1.0;
  // Mean magnitude rather than the median: most probe slots miss the slot
  // deadline and earn exactly zero, which would zero the median.
  double acc = 0.0;
  for (const auto& t : transitions) acc += std::abs(t.reward);
  const double mean = acc / transitions.size();
  return mean > 1e-12 ? mean : 1.0;
}

double shape_reward(double raw, double scale, double clip) {
  const double r = raw / scale;
  if (clip <= 0.0) return r;
  return std::clamp(r, -clip, clip);
}

void push_scaled(TaskRuntime& task, std::span<const RawTransition> transitions,
                 double scale, double clip) {
  for (const auto& t : transitions) {
    task.buffer.push(t.obs, t.act, shape_reward(t.reward, scale, clip), t.next_obs,
                     t.terminal);
  }
}

StepLosses online_step(TD3Learner& learner, TaskRuntime& task, Rng& rng) {
  if (task.environment.done()) task.begin_episode();
  const std::vector<double> a =
      act(learner.online.actor, task.obs, learner.hp.explore_noise, rng);
  const env::SlotOutcome res = task.environment.step_raw(a);
  const std::vector<double>& next = task.environment.observation();
  task.buffer.push(task.obs, a,
                   shape_reward(res.reward, learner.reward_scale, learner.hp.reward_clip),
                   next, task.environment.done());
  task.obs = next;
  return train_step(learner, task.buffer, rng);
}

namespace {

// Algorithm-form meta loss (1/M) sum_j sum_i (y - Q_j)^2 with its gradients
// at the given nets; also the policy-objective gradient at the given actor.
double meta_loss_and_grads(const PolicyNets& nets, const TargetNets& targets,
                           const ReplayBuffer::Batch& batch, const AgentHyperparams& hp,
                           Rng& rng, std::vector<double>& grad_actor,
                           std::vector<double>& grad_q1, std::vector<double>& grad_q2) {
  const std::vector<double> y = compute_targets(targets, batch, hp, rng);
  const double inv_m = 1.0 / batch.m;
  nn::ForwardTrace trace;
  double loss = 0.0;
  for (const nn::DenseNet* critic : {&nets.q1, &nets.q2}) {
    std::vector<double>& grad = critic == &nets.q1 ? grad_q1 : grad_q2;
    for (int i = 0; i < batch.m; ++i) {
      std::span<const double> s(batch.obs.data() + i * batch.obs_dim, batch.obs_dim);
      std::span<const double> a(batch.act.data() + i * batch.act_dim, batch.act_dim);
      const std::vector<double> in = critic_input(s, a);
      const double q = nn::forward(*critic, in, &trace)[0];
      const double err = q - y[i];
      loss += err * err;
      const double upstream[1] = {2.0 * err * inv_m};
      nn::backward(*critic, trace, upstream, grad);
    }
  }
  // Policy part: descend on -mean Q1(s, pi(s)).
  std::vector<double> qscratch(nets.q1.param_count(), 0.0);
  std::vector<double> in_grad(batch.obs_dim + batch.act_dim, 0.0);
  nn::ForwardTrace atrace, qtrace;
  for (int i = 0; i < batch.m; ++i) {
    std::span<const double> s(batch.obs.data() + i * batch.obs_dim, batch.obs_dim);
    const std::vector<double> a = nn::forward(nets.actor, s, &atrace);
    const std::vector<double> in = critic_input(s, a);
    nn::forward(nets.q1, in, &qtrace);
    const double upstream[1] = {1.0};
    nn::backward(nets.q1, qtrace, upstream, qscratch, in_grad);
    std::vector<double> a_up(batch.act_dim);
    for (int d = 0; d < batch.act_dim; ++d) a_up[d] = -in_grad[batch.obs_dim + d] * inv_m;
    nn::backward(nets.actor, atrace, a_up, grad_actor);
  }
  return loss * inv_m;
}

}  // namespace

AdaptResult mtd3_inner_adapt(TD3Learner& meta, TaskRuntime& task, Rng& rng) {
  AdaptResult res;
  res.adapted = meta.online;
  res.adapted.actor_opt = {};
  res.adapted.q1_opt = {};
  res.adapted.q2_opt = {};

  const AgentHyperparams& hp = meta.hp;
  for (int t = 1; t <= hp.inner_steps; ++t) {
    if (task.environment.done()) task.begin_episode();
    const std::vector<double> a =
        act(res.adapted.actor, task.obs, hp.explore_noise, rng);
    const env::SlotOutcome out = task.environment.step_raw(a);
    const std::vector<double>& next = task.environment.observation();
    task.buffer.push(task.obs, a,
                     shape_reward(out.reward, meta.reward_scale, hp.reward_clip), next,
                     task.environment.done());
    task.obs = next;
    if (task.buffer.size() < static_cast<std::size_t>(hp.batch)) continue;
    const ReplayBuffer::Batch batch = task.buffer.sample(hp.batch, rng);
    critic_update(res.adapted, meta.targets, batch, hp, rng);
    if (t % hp.policy_delay == 0) {
      actor_update(res.adapted, meta.targets, batch, hp);
    }
  }

  res.grad_actor.assign(res.adapted.actor.param_count(), 0.0);
  res.grad_q1.assign(res.adapted.q1.param_count(), 0.0);
  res.grad_q2.assign(res.adapted.q2.param_count(), 0.0);
  if (task.buffer.size() >= static_cast<std::size_t>(hp.batch)) {
    const ReplayBuffer::Batch batch = task.buffer.sample(hp.batch, rng);
    res.meta_loss = meta_loss_and_grads(res.adapted, meta.targets, batch, hp, rng,
                                        res.grad_actor, res.grad_q1, res.grad_q2);
  }
  return res;
}

double mtd3_meta_step(TD3Learner& meta, std::span<TaskRuntime* const> tasks, Rng& rng) {
  if (tasks.empty()) return 0.0;
  std::vector<double> g_actor(meta.online.actor.param_count(), 0.0);
  std::vector<double> g_q1(meta.online.q1.param_count(), 0.0);
  std::vector<double> g_q2(meta.online.q2.param_count(), 0.0);
  std::vector<double> actor_delta(meta.online.actor.param_count(), 0.0);
  std::vector<double> blend_q1(meta.online.q1.param_count(), 0.0);
  std::vector<double> blend_q2(meta.online.q2.param_count(), 0.0);
  double total_loss = 0.0;

  for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
    AdaptResult res = mtd3_inner_adapt(meta, *tasks[ti], rng);
    total_loss += res.meta_loss;
    for (std::size_t i = 0; i < g_actor.size(); ++i) {
      g_actor[i] += res.grad_actor[i];
      actor_delta[i] += res.adapted.actor.params()[i] - meta.online.actor.params()[i];
    }
    for (std::size_t i = 0; i < g_q1.size(); ++i) g_q1[i] += res.grad_q1[i];
    for (std::size_t i = 0; i < g_q2.size(); ++i) g_q2[i] += res.grad_q2[i];
    if (meta.hp.meta_target_avg) {
      const double w = 1.0 / tasks.size();
      for (std::size_t i = 0; i < blend_q1.size(); ++i) {
        blend_q1[i] += w * res.adapted.q1.params()[i];
        blend_q2[i] += w * res.adapted.q2.params()[i];
      }
    } else if (ti + 1 == tasks.size()) {
      blend_q1 = res.adapted.q1.params();
      blend_q2 = res.adapted.q2.params();
    }
  }

  // Plain gradient step at the meta level.
  auto apply = [&](std::vector<double>& p, const std::vector<double>& g) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= meta.hp.meta_lr * g[i];
  };
  if (meta.hp.meta_actor_delta_rate > 0.0) {
    auto& p = meta.online.actor.params();
    const double w = meta.hp.meta_actor_delta_rate / tasks.size();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += w * actor_delta[i];
  } else {
    apply(meta.online.actor.params(), g_actor);
  }
  apply(meta.online.q1.params(), g_q1);
  apply(meta.online.q2.params(), g_q2);

  nn::polyak_update(meta.targets.q1.params(), blend_q1, meta.hp.polyak);
  nn::polyak_update(meta.targets.q2.params(), blend_q2, meta.hp.polyak);
  return total_loss;
}

namespace {
constexpr char kLearnerMagic[8] = {'R', 'L', 'C', 'K', 'P', 'T', '0', '1'};
}

void save_learner(const std::string& path, const TD3Learner& learner) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os.write(kLearnerMagic, sizeof(kLearnerMagic));
  const std::uint32_t kind = static_cast<std::uint32_t>(learner.kind);
  os.write(reinterpret_cast<const char*>(&kind), sizeof(kind));
  os.write(reinterpret_cast<const char*>(&learner.reward_scale),
           sizeof(learner.reward_scale));
  os.write(reinterpret_cast<const char*>(&learner.critic_updates),
           sizeof(learner.critic_updates));
  for (const nn::DenseNet* net :
       {&learner.online.actor, &learner.online.q1, &learner.online.q2,
        &learner.targets.actor, &learner.targets.q1, &learner.targets.q2}) {
    nn::save_net(os, *net);
  }
}

TD3Learner load_learner(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kLearnerMagic, sizeof(kLearnerMagic)) != 0)
    throw std::runtime_error("learner checkpoint: bad magic");
  TD3Learner l;
  std::uint32_t kind = 0;
  is.read(reinterpret_cast<char*>(&kind), sizeof(kind));
  if (kind > 2) throw std::runtime_error("learner checkpoint: bad agent kind");
  l.kind = static_cast<AgentKind>(kind);
  is.read(reinterpret_cast<char*>(&l.reward_scale), sizeof(l.reward_scale));
  is.read(reinterpret_cast<char*>(&l.critic_updates), sizeof(l.critic_updates));
  if (!is) throw std::runtime_error("learner checkpoint: truncated header");
  l.online.actor = nn::load_net(is);
  l.online.q1 = nn::load_net(is);
  l.online.q2 = nn::load_net(is);
  l.targets.actor = nn::load_net(is);
  l.targets.q1 = nn::load_net(is);
  l.targets.q2 = nn::load_net(is);
  return l;
}

std::uint64_t param_hash(const TD3Learner& learner) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const nn::DenseNet* net :
       {&learner.online.actor, &learner.online.q1, &learner.online.q2}) {
    h = nn::fnv1a(net->params().data(), net->param_count() * sizeof(double), h);
  }
  return h;
}

}  // namespace uavmec::rl
