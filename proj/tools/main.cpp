// Batch command line for the simulator and the learning stack.
//
//   uavmec train    --config cfg --agent td3 --seed 1 --out runs/a
//   uavmec sweep    --config cfg --agent td3 --out runs/a
//   uavmec plotdata --out runs/a
//   uavmec validate --config cfg --agent td3 --seed 1 --out runs/a
//   uavmec audit    --config cfg
//
// Exit codes: 0 success, 1 configuration error, 2 audit/validation failure.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "uavmec/harness.hpp"

using namespace uavmec;
namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string agent;
  std::string out_dir;
  long seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "configuration file (key = value lines)");
  cmd->add_option("--override", args.overrides, "config override key=value (repeatable)");
  cmd->add_option("--agent", args.agent, "agent kind: ddpg | td3 | mtd3");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "run seed (narrows run.seeds to one value)");
}

harness::ExperimentConfig build_config(const CommonArgs& args) {
  harness::ExperimentConfig cfg;
  if (!args.config_path.empty()) harness::load_config_file(cfg, args.config_path);
  for (const auto& ov : args.overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config error: --override expects key=value, got: " + ov);
    harness::apply_kv(cfg, ov.substr(0, eq), ov.substr(eq + 1));
  }
  if (!args.agent.empty()) cfg.agent = args.agent;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.seed >= 0) cfg.seeds = {static_cast<std::uint64_t>(args.seed)};
  if (!rl::parse_agent(cfg.agent))
    throw std::invalid_argument("config error: run.agent: unknown agent: " + cfg.agent);
  cfg.sys.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << text;
}

std::string checkpoint_path(const harness::ExperimentConfig& cfg, std::uint64_t seed) {
  return cfg.out_dir + "/ckpt_" + cfg.agent + "_seed" + std::to_string(seed) + ".bin";
}

class WallClock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int cmd_train(const harness::ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  write_text(cfg.out_dir + "/config.txt", harness::dump_config(cfg));
  std::ofstream log(cfg.out_dir + "/run.log", std::ios::app);
  metrics::Writer mw(cfg.out_dir + "/metrics.tsv");
  const rl::AgentKind kind = *rl::parse_agent(cfg.agent);
  const env::TaskSpec task = env::default_task(cfg.sys);

  bool audit_ok = true;
  for (std::uint64_t seed : cfg.seeds) {
    WallClock clock;
    rl::TD3Learner resumed;
    const rl::TD3Learner* start_from = nullptr;
    const std::string ckpt = checkpoint_path(cfg, seed);
    if (cfg.resume && fs::exists(ckpt)) {
      resumed = rl::load_learner(ckpt);
      start_from = &resumed;
      log << "resuming from " << ckpt << "\n";
    }
    harness::TrainResult tr =
        harness::train_agent(cfg, kind, seed, task, {task}, &mw, &log, start_from);
    rl::save_learner(ckpt, tr.learner);
    audit_ok = audit_ok && tr.audit_ok;
    log << "seed " << seed << ": " << tr.env_steps << " environment steps, "
        << "weights v=" << metrics::format_double(tr.weights_used.v)
        << " v1=" << metrics::format_double(tr.weights_used.v1)
        << " v2=" << metrics::format_double(tr.weights_used.v2)
        << ", checkpoint " << ckpt << ", wall " << clock.seconds() << " s\n";
  }
  mw.flush();
  if (!audit_ok) {
    std::cerr << "constraint audit failed during evaluation\n";
    return 2;
  }
  std::cout << "trained " << cfg.agent << " over " << cfg.seeds.size()
            << " seed(s); metrics in " << cfg.out_dir << "/metrics.tsv\n";
  return 0;
}

int cmd_sweep(const harness::ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  write_text(cfg.out_dir + "/config.txt", harness::dump_config(cfg));
  std::ofstream log(cfg.out_dir + "/run.log", std::ios::app);
  metrics::Writer mw(cfg.out_dir + "/sweep_metrics.tsv");
  const rl::AgentKind kind = *rl::parse_agent(cfg.agent);
  WallClock clock;
  const auto rows = harness::run_sweep(cfg, kind, cfg.seeds.front(), &mw, &log);
  mw.flush();
  harness::write_sweep_table(cfg.out_dir + "/sweep_table.tsv", rows);
  log << "sweep over " << rows.size() << " capacities, wall " << clock.seconds()
      << " s\n";
  bool audit_ok = true;
  for (const auto& r : rows) audit_ok = audit_ok && r.audit_ok;
  if (!audit_ok) {
    std::cerr << "constraint audit failed during sweep evaluation\n";
    return 2;
  }
  std::cout << "sweep table in " << cfg.out_dir << "/sweep_table.tsv\n";
  return 0;
}

int cmd_plotdata(const harness::ExperimentConfig& cfg, const std::string& metrics_path) {
  std::vector<std::string> sources;
  if (!metrics_path.empty()) {
    sources.push_back(metrics_path);
  } else {
    for (const char* name : {"metrics.tsv", "sweep_metrics.tsv"}) {
      const std::string p = cfg.out_dir + "/" + name;
      if (fs::exists(p)) sources.push_back(p);
    }
    if (sources.empty())
      throw std::invalid_argument("config error: no metrics files under " + cfg.out_dir);
  }
  // merge sources into one stream for the plot emitter
  const std::string merged = cfg.out_dir + "/plots/merged_metrics.tsv";
  fs::create_directories(cfg.out_dir + "/plots");
  {
    std::ofstream os(merged);
    os << metrics::kHeader << '\n';
    for (const auto& src : sources) {
      for (const auto& rec : metrics::read_metrics_file(src)) {
        os << metrics::format_record(rec) << '\n';
      }
    }
  }
  harness::emit_plot_data(merged, cfg.out_dir + "/plots");
  std::cout << "plot data in " << cfg.out_dir << "/plots\n";
  return 0;
}

int cmd_validate(const harness::ExperimentConfig& cfg) {
  if (cfg.sys.num_devices != 1) {
    throw std::invalid_argument(
        "config error: sys.num_devices: the oracle validation needs a single-device "
        "configuration");
  }
  const std::uint64_t seed = cfg.seeds.front();
  const std::string ckpt = checkpoint_path(cfg, seed);
  if (!fs::exists(ckpt))
    throw std::invalid_argument("config error: missing checkpoint " + ckpt +
                                " (run train first)");
  const rl::TD3Learner learner = rl::load_learner(ckpt);
  const env::TaskSpec task = env::default_task(cfg.sys);
  const auto trained = harness::validate_against_oracle(
      cfg.sys, task, &learner.online.actor, cfg.validate_episodes, cfg.oracle_grid,
      Rng::mix(seed, 0xE0));
  const auto random = harness::validate_against_oracle(
      cfg.sys, task, nullptr, cfg.validate_episodes, cfg.oracle_grid,
      Rng::mix(seed, 0xE0));
  std::cout << "per-slot objective gap vs exhaustive oracle over " << trained.slots
            << " slots\n"
            << "  trained: " << metrics::format_double(trained.mean_gap) << " +- "
            << metrics::format_double(trained.se) << "\n"
            << "  random:  " << metrics::format_double(random.mean_gap) << " +- "
            << metrics::format_double(random.se) << "\n";
  if (!(trained.mean_gap < random.mean_gap)) {
    std::cerr << "validation failure: trained policy does not improve on the random "
                 "policy's gap\n";
    return 2;
  }
  return 0;
}

int cmd_audit(const harness::ExperimentConfig& cfg) {
  const env::TaskSpec task = env::default_task(cfg.sys);
  const std::string failure =
      harness::audit_fuzz(cfg.sys, task, cfg.audit_slots, cfg.seeds.front());
  if (!failure.empty()) {
    std::cerr << "audit failure: " << failure << "\n";
    return 2;
  }
  std::cout << "audit clean over " << cfg.audit_slots << " fuzzed slots\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"three-tier offloading simulator and learning harness"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string metrics_path;
  CLI::App* train = app.add_subcommand("train", "train an agent and checkpoint it");
  add_common(train, args);
  CLI::App* sweep = app.add_subcommand("sweep", "evaluate checkpoints across UAV capacities");
  add_common(sweep, args);
  CLI::App* plotdata = app.add_subcommand("plotdata", "emit plot-ready column files");
  add_common(plotdata, args);
  plotdata->add_option("--metrics", metrics_path, "metrics file to plot (default: out dir)");
  CLI::App* validate = app.add_subcommand("validate", "compare a checkpoint to the slot oracle");
  add_common(validate, args);
  CLI::App* audit = app.add_subcommand("audit", "fuzz the constraint and queue invariants");
  add_common(audit, args);

  CLI11_PARSE(app, argc, argv);

  try {
    const harness::ExperimentConfig cfg = build_config(args);
    if (train->parsed()) return cmd_train(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg);
    if (plotdata->parsed()) return cmd_plotdata(cfg, metrics_path);
    if (validate->parsed()) return cmd_validate(cfg);
    if (audit->parsed()) return cmd_audit(cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
