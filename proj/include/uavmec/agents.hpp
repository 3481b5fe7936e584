#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uavmec/env.hpp"
#include "uavmec/nn.hpp"
#include "uavmec/rng.hpp"

namespace uavmec::rl {

enum class AgentKind { ddpg, td3, mtd3 };

const char* agent_name(AgentKind k);
std::optional<AgentKind> parse_agent(const std::string& name);

struct AgentHyperparams {
  double discount = 0.99;
  double polyak = 0.005;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  double meta_lr = 1e-4;
  int batch = 256;
  int policy_delay = 2;
  double explore_noise = 0.1;      // fraction of the [-1,1] action range
  double target_noise = 0.2;
  double target_noise_clip = 0.5;
  int inner_steps = 1000;          // per-task adaptation steps
  int tasks_per_meta_iter = 4;
  double reward_clip = 10.0;       // stored-reward bound, in scale units (0 = off)
  // Actor meta-gradient estimator: 0 uses the pointwise policy gradient at
  // the adapted parameters; > 0 instead applies the accumulated inner-loop
  // parameter delta (mean over tasks, scaled by this rate), which carries the
  // whole adaptation trajectory into the meta-actor. Critic meta-updates are
  // unaffected.
  double meta_actor_delta_rate = 0.0;
  std::size_t buffer_capacity = 100000;
  int hidden = 256;
  int layers = 2;
  bool single_critic = false;
  bool plain_sgd = false;          // optimizer for the inner updates
  bool meta_target_avg = false;    // blend meta targets with the task average
                                   // instead of the last task's critics
};

// Uniform-sampling ring buffer of flattened transitions.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim);

  void push(std::span<const double> obs, std::span<const double> act, double reward,
            std::span<const double> next_obs, bool terminal);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }

  struct Batch {
    int m = 0;
    int obs_dim = 0;
    int act_dim = 0;
    std::vector<double> obs, act, next_obs;  // m x dim, row-major
    std::vector<double> reward;
    std::vector<std::uint8_t> terminal;
  };

  Batch sample(int m, Rng& rng) const;

 private:
  std::size_t capacity_;
  int obs_dim_, act_dim_;
  std::size_t size_ = 0, cursor_ = 0;
  std::vector<double> obs_, act_, next_obs_, reward_;
  std::vector<std::uint8_t> terminal_;
};

struct PolicyNets {
  nn::DenseNet actor, q1, q2;
  nn::AdamState actor_opt, q1_opt, q2_opt;
};

struct TargetNets {
  nn::DenseNet actor, q1, q2;
};

struct TD3Learner {
  AgentKind kind = AgentKind::td3;
  AgentHyperparams hp;
  PolicyNets online;
  TargetNets targets;
  std::uint64_t critic_updates = 0;
  double reward_scale = 1.0;  // frozen after warmup; rewards stored / scale
};

// Init draw order: actor, q1, q2; targets start equal to the online nets.
TD3Learner make_learner(AgentKind kind, int obs_dim, int act_dim,
                        const AgentHyperparams& hp, Rng& rng);

// Deterministic policy plus exploration noise, clipped to [-1,1]. sigma == 0
// draws nothing from rng.
std::vector<double> act(const nn::DenseNet& actor, std::span<const double> obs,
                        double noise_sigma, Rng& rng);

// The DDPG configuration of the shared update machinery.
AgentHyperparams ddpg_reduction(AgentHyperparams hp);

// One regression of the online critics toward the smoothed min-target;
// returns the mean squared error over batch and critics. sigma == 0 consumes
// no rng draws.
double critic_update(PolicyNets& online, const TargetNets& targets,
                     const ReplayBuffer::Batch& batch, const AgentHyperparams& hp,
                     Rng& rng);

// Deterministic-policy-gradient ascent on mean Q1(s, pi(s)), then the target
// blend. Returns the pre-update mean Q1.
double actor_update(PolicyNets& online, TargetNets& targets,
                    const ReplayBuffer::Batch& batch, const AgentHyperparams& hp);

double td3_critic_update(TD3Learner&, const ReplayBuffer::Batch&, Rng&);
double td3_actor_update(TD3Learner&, const ReplayBuffer::Batch&);
double ddpg_critic_update(TD3Learner&, const ReplayBuffer::Batch&, Rng&);
double ddpg_actor_update(TD3Learner&, const ReplayBuffer::Batch&);

struct StepLosses {
  double critic = 0.0;
  double actor_mean_q = 0.0;
  bool actor_updated = false;
};

// Critic step always; actor + targets every policy_delay critic steps.
StepLosses train_step(TD3Learner& learner, const ReplayBuffer& buffer, Rng& rng);

// One task's persistent training state: its environment, episode chaining
// and replay buffer survive across meta-iterations.
struct TaskRuntime {
  env::TaskSpec spec;
  env::Env environment;
  ReplayBuffer buffer;
  std::uint64_t seed_base = 0;
  std::uint64_t episode_counter = 0;
  std::vector<double> obs;

  TaskRuntime(const SystemConfig& cfg, env::TaskSpec task_spec,
              std::size_t buffer_capacity, std::uint64_t seed);
  void begin_episode();
};

struct RawTransition {
  std::vector<double> obs, act, next_obs;
  double reward = 0.0;
  bool terminal = false;
};

// Uniform random-action interaction, transitions returned raw (unscaled).
std::vector<RawTransition> collect_random(TaskRuntime& task, int steps, Rng& rng);

// Mean |reward| with a small floor; the frozen normalization constant.
double reward_scale_from(std::span<const RawTransition> transitions);

// Normalized, clipped reward as stored in the buffers. The quadratic backlog
// terms make raw rewards heavy-tailed; the clip keeps critic targets bounded.
double shape_reward(double raw, double scale, double clip);

void push_scaled(TaskRuntime& task, std::span<const RawTransition> transitions,
                 double scale, double clip = 10.0);

// One environment interaction with the learner's exploration policy plus one
// train_step when the buffer holds a batch.
StepLosses online_step(TD3Learner& learner, TaskRuntime& task, Rng& rng);

struct AdaptResult {
  PolicyNets adapted;
  double meta_loss = 0.0;
  // First-order gradients at the adapted parameters, on the meta-loss batch.
  std::vector<double> grad_actor, grad_q1, grad_q2;
};

// Per-task inner loop: copies of the meta nets trained for inner_steps
// interactions against the meta targets (which are blended in place), then
// the meta-loss and its gradients on a fresh batch.
AdaptResult mtd3_inner_adapt(TD3Learner& meta, TaskRuntime& task, Rng& rng);

// Outer update: adapts each given task, applies the summed first-order
// gradients to the meta parameters with meta_lr (plain step), and blends the
// meta critic targets with the last (or average) task's adapted critics.
// Returns the summed meta-loss.
double mtd3_meta_step(TD3Learner& meta, std::span<TaskRuntime* const> tasks, Rng& rng);

// Learner checkpoints: all six nets plus the reward scale, checksummed.
void save_learner(const std::string& path, const TD3Learner& learner);
TD3Learner load_learner(const std::string& path);

// FNV-1a over all online parameter bytes; trajectory-identity checks.
std::uint64_t param_hash(const TD3Learner& learner);

}  // namespace uavmec::rl
