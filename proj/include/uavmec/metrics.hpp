#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace uavmec::metrics {

// One evaluated episode. Records are append-only lines keyed by
// (agent, task seed, UAV capacity, episode index); every line carries the
// schema version and the full config hash. Wall-clock timings deliberately
// live in the run log, not here, so metrics files are byte-reproducible.
struct Record {
  int schema = 1;
  std::string config_hash;  // 16 hex digits
  std::string agent;
  std::string phase;  // train | sweep | validate
  std::uint64_t run_seed = 0;
  std::uint64_t task_seed = 0;
  double uav_cap = 0.0;
  long step = 0;  // training steps consumed when the evaluation ran
  int episode = 0;
  double mean_reward = 0.0;
  double efficiency = 0.0;  // bits per second of transmission time
  double q_local = 0.0;
  double q_uav = 0.0;
  double q_cloud = 0.0;
  bool audit_pass = true;
};

std::string format_record(const Record& r);
Record parse_record(const std::string& line);  // throws on malformed input
extern const char* const kHeader;

class Writer {
 public:
  explicit Writer(const std::string& path);
  void write(const Record& r);
  void flush();

 private:
  std::ofstream os_;
};

std::vector<Record> read_metrics_file(const std::string& path);

// %.17g round-trip formatting used everywhere results are serialized.
std::string format_double(double x);

std::string hash_hex(const std::string& text);

}  // namespace uavmec::metrics
