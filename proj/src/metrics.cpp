#include "uavmec/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "uavmec/nn.hpp"

namespace uavmec::metrics {

const char* const kHeader =
    "#schema\tconfig_hash\tagent\tphase\trun_seed\ttask_seed\tuav_cap\tstep\tepisode"
    "\tmean_reward\tefficiency_bps\tq_local_bits\tq_uav_bits\tq_cloud_bits\taudit_pass";

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string format_record(const Record& r) {
  std::ostringstream os;
  os << r.schema << '\t' << r.config_hash << '\t' << r.agent << '\t' << r.phase << '\t'
     << r.run_seed << '\t' << r.task_seed << '\t' << format_double(r.uav_cap) << '\t'
     << r.step << '\t' << r.episode << '\t' << format_double(r.mean_reward) << '\t'
     << format_double(r.efficiency) << '\t' << format_double(r.q_local) << '\t'
     << format_double(r.q_uav) << '\t' << format_double(r.q_cloud) << '\t'
     << (r.audit_pass ? 1 : 0);
  return os.str();
}

Record parse_record(const std::string& line) {
  std::istringstream is(line);
  std::string field;
  std::vector<std::string> fields;
  while (std::getline(is, field, '\t')) fields.push_back(field);
  if (fields.size() != 15) throw std::runtime_error("metrics: malformed record");
  Record r;
  r.schema = std::stoi(fields[0]);
  r.config_hash = fields[1];
  r.agent = fields[2];
  r.phase = fields[3];
  r.run_seed = std::stoull(fields[4]);
  r.task_seed = std::stoull(fields[5]);
  r.uav_cap = std::stod(fields[6]);
  r.step = std::stol(fields[7]);
  r.episode = std::stoi(fields[8]);
  r.mean_reward = std::stod(fields[9]);
  r.efficiency = std::stod(fields[10]);
  r.q_local = std::stod(fields[11]);
  r.q_uav = std::stod(fields[12]);
  r.q_cloud = std::stod(fields[13]);
  r.audit_pass = fields[14] == "1";
  return r;
}

Writer::Writer(const std::string& path) : os_(path) {
  if (!os_) throw std::runtime_error("cannot open metrics file: " + path);
  os_ << kHeader << '\n';
}

void Writer::write(const Record& r) { os_ << format_record(r) << '\n'; }

void Writer::flush() { os_.flush(); }

std::vector<Record> read_metrics_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open metrics file: " + path);
  std::vector<Record> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_record(line));
  }
  return out;
}

std::string hash_hex(const std::string& text) {
  const std::uint64_t h = nn::fnv1a(text.data(), text.size());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace uavmec::metrics
