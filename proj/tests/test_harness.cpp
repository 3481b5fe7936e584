#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "testutil.hpp"
#include "uavmec/harness.hpp"

using namespace uavmec;
using namespace uavmec::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

ExperimentConfig tiny_experiment(const std::string& out) {
  ExperimentConfig cfg;
  cfg.sys = testutil::desk_system(1, 10);
  cfg.hp = testutil::small_hp();
  cfg.hp.hidden = 8;
  cfg.hp.batch = 8;
  cfg.hp.inner_steps = 8;
  cfg.hp.tasks_per_meta_iter = 2;
  cfg.ranges = testutil::desk_ranges();
  cfg.train_steps = 64;
  cfg.warmup_steps = 16;
  cfg.eval_interval = 32;
  cfg.curve_eval_episodes = 2;
  cfg.eval_episodes = 3;
  cfg.parallel_envs = 2;
  cfg.meta_task_pool = 2;
  cfg.calibrate_probes = 16;
  cfg.out_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("config keys") {
  ExperimentConfig cfg;
  SUBCASE("set and read back") {
    apply_kv(cfg, "sys.num_devices", "3");
    apply_kv(cfg, "channel.bandwidth_hz", "2e6");
    apply_kv(cfg, "sys.i_max_mb", "2.5");
    apply_kv(cfg, "hp.single_critic", "true");
    apply_kv(cfg, "run.seeds", "4,5,6");
    CHECK(cfg.sys.num_devices == 3);
    CHECK(cfg.sys.channel.bandwidth == doctest::Approx(2e6));
    CHECK(cfg.sys.i_max_bits == doctest::Approx(2.5 * kBitsPerMB));
    CHECK(cfg.hp.single_critic);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{4, 5, 6});
  }
  SUBCASE("unknown keys and bad values name the field") {
    CHECK_THROWS_WITH_AS(apply_kv(cfg, "sys.nope", "1"),
                         "config error: unknown key: sys.nope", std::invalid_argument);
    CHECK_THROWS_AS(apply_kv(cfg, "sys.slot_tau", "fast"), std::invalid_argument);
    CHECK_THROWS_AS(apply_kv(cfg, "run.seeds", ""), std::invalid_argument);
  }
  SUBCASE("dump is canonical and hashes stably") {
    const std::string d1 = dump_config(cfg);
    ExperimentConfig other;
    CHECK(d1 == dump_config(other));
    apply_kv(other, "sys.p_max", "0.7");
    CHECK(config_hash(cfg) != config_hash(other));
    // round trip: applying a dump reproduces the dump
    ExperimentConfig third;
    std::istringstream lines(dump_config(other));
    std::string line;
    while (std::getline(lines, line)) {
      const auto eq = line.find('=');
      const std::string key = line.substr(0, eq - 1);
      apply_kv(third, key, line.substr(eq + 2));
    }
    CHECK(dump_config(third) == dump_config(other));
  }
  SUBCASE("config file parsing") {
    const std::string path = "test_cfg.tmp";
    {
      std::ofstream os(path);
      os << "# comment line\n\nsys.num_slots = 42   # trailing comment\n"
         << "run.agent = mtd3\n";
    }
    load_config_file(cfg, path);
    CHECK(cfg.sys.num_slots == 42);
    CHECK(cfg.agent == "mtd3");
    fs::remove(path);
  }
}

TEST_CASE("metrics records") {
  metrics::Record r;
  r.config_hash = "0123456789abcdef";
  r.agent = "td3";
  r.phase = "sweep";
  r.run_seed = 7;
  r.task_seed = 9;
  r.uav_cap = 5e9;
  r.episode = 3;
  r.mean_reward = -1.25;
  r.efficiency = 1e6;
  r.q_local = 1.0;
  r.q_uav = 2.0;
  r.q_cloud = 3.0;
  const std::string line = metrics::format_record(r);
  const metrics::Record back = metrics::parse_record(line);
  CHECK(back.agent == r.agent);
  CHECK(back.uav_cap == r.uav_cap);
  CHECK(back.mean_reward == r.mean_reward);
  CHECK(back.audit_pass == r.audit_pass);
  CHECK(metrics::format_record(back) == line);
}

TEST_CASE("parallel evaluation equals sequential evaluation") {
  const SystemConfig sys = testutil::desk_system(2, 12);
  const env::TaskSpec task = env::default_task(sys);
  const auto seq = evaluate_policy(sys, task, nullptr, 6, 99, 1);
  const auto par = evaluate_policy(sys, task, nullptr, 6, 99, 4);
  REQUIRE(seq.size() == par.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq[i].episode_return == par[i].episode_return);
    CHECK(seq[i].efficiency == par[i].efficiency);
    CHECK(seq[i].q_local == par[i].q_local);
  }
}

TEST_CASE("aggregate") {
  CHECK(aggregate({}).n == 0);
  const Aggregate one = aggregate({5.0});
  CHECK(one.mean == 5.0);
  CHECK(one.se == 0.0);
  const Aggregate a = aggregate({1.0, 2.0, 3.0, 4.0});
  CHECK(a.mean == doctest::Approx(2.5));
  CHECK(a.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
}

TEST_CASE("training runs deterministically and writes byte-identical metrics") {
  const std::string dir = "harness_train_tmp";
  fs::create_directories(dir);
  ExperimentConfig cfg = tiny_experiment(dir);
  const env::TaskSpec task = env::default_task(cfg.sys);

  auto run_once = [&](const std::string& name) {
    metrics::Writer mw(dir + "/" + name);
    TrainResult tr = train_agent(cfg, rl::AgentKind::td3, 5, task, {task}, &mw, nullptr);
    mw.flush();
    return tr;
  };
  const TrainResult a = run_once("a.metrics");
  const TrainResult b = run_once("b.metrics");
  CHECK(a.env_steps == cfg.train_steps);
  CHECK(rl::param_hash(a.learner) == rl::param_hash(b.learner));
  CHECK(slurp(dir + "/a.metrics") == slurp(dir + "/b.metrics"));
  CHECK(!slurp(dir + "/a.metrics").empty());
  CHECK(a.audit_ok);
  fs::remove_all(dir);
}

TEST_CASE("meta training consumes its budget in whole iterations") {
  const std::string dir = "harness_meta_tmp";
  fs::create_directories(dir);
  ExperimentConfig cfg = tiny_experiment(dir);
  cfg.train_steps = 128;
  const env::TaskSpec task = env::default_task(cfg.sys);
  TrainResult tr = train_agent(cfg, rl::AgentKind::mtd3, 6, task, {task}, nullptr, nullptr);
  // pool warmup + whole meta-iterations, never past the budget
  const long warm = cfg.meta_task_pool * cfg.warmup_steps;
  const long iter = cfg.hp.tasks_per_meta_iter * cfg.hp.inner_steps;
  CHECK(tr.env_steps >= warm);
  CHECK(tr.env_steps <= cfg.train_steps);
  CHECK((tr.env_steps - warm) % iter == 0);
  fs::remove_all(dir);
}

TEST_CASE("sweep trains missing checkpoints and emits one row per capacity") {
  const std::string dir = "harness_sweep_tmp";
  fs::create_directories(dir);
  ExperimentConfig cfg = tiny_experiment(dir);
  cfg.uav_cpu_sweep = {5e9, 1e10};
  cfg.sweep_train_missing = true;
  cfg.sweep_train_steps = 48;
  cfg.eval_episodes = 2;

  SUBCASE("missing checkpoints are an error by default") {
    cfg.sweep_train_missing = false;
    CHECK_THROWS(run_sweep(cfg, rl::AgentKind::td3, 3, nullptr, nullptr));
  }
  SUBCASE("with training enabled") {
    metrics::Writer mw(dir + "/sweep.metrics");
    const auto rows = run_sweep(cfg, rl::AgentKind::td3, 3, &mw, nullptr);
    mw.flush();
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].uav_cap == 5e9);
    CHECK(rows[1].uav_cap == 1e10);
    CHECK(rows[0].episodes == 2);
    CHECK(rows[0].audit_ok);
    CHECK(fs::exists(sweep_checkpoint_path(cfg, "td3", 0)));
    // second run reuses the checkpoints and reproduces the rows
    const auto again = run_sweep(cfg, rl::AgentKind::td3, 3, nullptr, nullptr);
    CHECK(again[0].efficiency.mean == rows[0].efficiency.mean);
    // sweep table
    write_sweep_table(dir + "/table.tsv", rows);
    CHECK(slurp(dir + "/table.tsv").find("td3") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("plot data emission") {
  const std::string dir = "harness_plot_tmp";
  fs::create_directories(dir);
  SUBCASE("empty metrics yield header-only files") {
    { metrics::Writer mw(dir + "/m.metrics"); }
    emit_plot_data(dir + "/m.metrics", dir);
    const std::string curve = slurp(dir + "/reward_curve.tsv");
    CHECK(curve == "agent\trun_seed\tstep\tmean_reward\tepisodes\n");
    CHECK(slurp(dir + "/efficiency_vs_capacity.tsv").find("uav_cap") !=
          std::string::npos);
  }
  SUBCASE("aggregation matches a scripted mean") {
    {
      metrics::Writer mw(dir + "/m.metrics");
      for (int i = 0; i < 5; ++i) {
        metrics::Record r;
        r.config_hash = "x";
        r.agent = "td3";
        r.phase = "sweep";
        r.uav_cap = 5e9;
        r.episode = i;
        r.efficiency = (i + 1) * kBitsPerMB;  // 1..5 MB/s
        mw.write(r);
      }
      mw.flush();
    }
    emit_plot_data(dir + "/m.metrics", dir);
    std::istringstream is(slurp(dir + "/efficiency_vs_capacity.tsv"));
    std::string header, row;
    std::getline(is, header);
    REQUIRE(std::getline(is, row));
    std::istringstream rs(row);
    std::string agent, cap, mean;
    std::getline(rs, agent, '\t');
    std::getline(rs, cap, '\t');
    std::getline(rs, mean, '\t');
    CHECK(agent == "td3");
    CHECK(std::stod(mean) == doctest::Approx(3.0));  // (1+2+3+4+5)/5 in MB/s
  }
  fs::remove_all(dir);
}

TEST_CASE("oracle validation is consistent with itself") {
  SystemConfig sys = testutil::desk_system(1, 8);
  const env::TaskSpec task = env::default_task(sys);
  const GapStats random_gap = validate_against_oracle(sys, task, nullptr, 2, 4, 11);
  CHECK(random_gap.slots == 16);
  CHECK(random_gap.mean_gap >= 0.0);  // queues load up, the oracle dominates
}

TEST_CASE("constraint and conservation fuzz stays clean") {
  const SystemConfig sys = testutil::desk_system(3, 25);
  const env::TaskSpec task = env::default_task(sys);
  CHECK(audit_fuzz(sys, task, 500, 13) == "");
}
