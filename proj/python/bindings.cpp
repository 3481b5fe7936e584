#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "uavmec/env.hpp"
#include "uavmec/harness.hpp"
#include "uavmec/objective.hpp"
#include "uavmec/queueing.hpp"
#include "uavmec/radio.hpp"

namespace py = pybind11;
using namespace uavmec;

PYBIND11_MODULE(_core, m) {
  m.doc() = "three-tier offloading simulator core";

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", py::overload_cast<>(&Rng::uniform))
      .def("normal", py::overload_cast<>(&Rng::normal));

  py::class_<Vec2>(m, "Vec2")
      .def(py::init<>())
      .def(py::init([](double x, double y) { return Vec2{x, y}; }))
      .def_readwrite("x", &Vec2::x)
      .def_readwrite("y", &Vec2::y);

  py::class_<radio::ChannelParams>(m, "ChannelParams")
      .def(py::init<>())
      .def_readwrite("ref_gain", &radio::ChannelParams::ref_gain)
      .def_readwrite("pathloss_exp", &radio::ChannelParams::pathloss_exp)
      .def_readwrite("rician_k", &radio::ChannelParams::rician_k)
      .def_readwrite("noise_var", &radio::ChannelParams::noise_var)
      .def_readwrite("bandwidth", &radio::ChannelParams::bandwidth)
      .def_readwrite("relay_setup", &radio::ChannelParams::relay_setup);

  m.def("slant_distance", &radio::slant_distance, py::arg("device_xy"),
        py::arg("uav_xy"), py::arg("alt_h"));
  m.def("draw_channel_gain", &radio::draw_channel_gain, py::arg("dist"),
        py::arg("params"), py::arg("rng"));
  m.def(
      "uplink_sinr",
      [](const std::vector<double>& gains, const std::vector<double>& powers,
         double noise_var, bool literal) {
        return radio::uplink_sinr(gains, powers, noise_var, literal);
      },
      py::arg("gains"), py::arg("powers"), py::arg("noise_var"),
      py::arg("literal_self_gain") = false);
  m.def("offload_rate", &radio::offload_rate, py::arg("sinr"), py::arg("bandwidth"));
  m.def(
      "comm_latencies",
      [](double frac_to_uav, double frac_to_cloud, double backlog, double rate,
         double relay_setup, double latency_cap) {
        const auto lat = radio::comm_latencies(frac_to_uav, frac_to_cloud, backlog,
                                               rate, relay_setup, latency_cap);
        return py::make_tuple(lat.to_uav, lat.to_cloud);
      },
      py::arg("frac_to_uav"), py::arg("frac_to_cloud"), py::arg("local_backlog_bits"),
      py::arg("rate"), py::arg("relay_setup"), py::arg("latency_cap"));

  py::class_<queueing::QueueTriple>(m, "QueueTriple")
      .def(py::init<>())
      .def(py::init([](double l, double u, double c) {
        return queueing::QueueTriple{l, u, c};
      }))
      .def_readwrite("local", &queueing::QueueTriple::local)
      .def_readwrite("uav", &queueing::QueueTriple::uav)
      .def_readwrite("cloud", &queueing::QueueTriple::cloud)
      .def("total", &queueing::QueueTriple::total);

  py::class_<queueing::OffloadDecision>(m, "OffloadDecision")
      .def(py::init<>())
      .def(py::init([](double xu, double xc, double wl, double wu, double wc) {
        return queueing::OffloadDecision{xu, xc, wl, wu, wc};
      }))
      .def_readwrite("to_uav", &queueing::OffloadDecision::to_uav)
      .def_readwrite("to_cloud", &queueing::OffloadDecision::to_cloud)
      .def_readwrite("compute_local", &queueing::OffloadDecision::compute_local)
      .def_readwrite("compute_uav", &queueing::OffloadDecision::compute_uav)
      .def_readwrite("compute_cloud", &queueing::OffloadDecision::compute_cloud);

  m.def("computed_bits", &queueing::computed_bits, py::arg("decision"),
        py::arg("queues"));
  m.def("total_completion_latency", &queueing::total_completion_latency,
        py::arg("t_local"), py::arg("t_uav"), py::arg("t_cloud"), py::arg("t_uav_comm"),
        py::arg("t_cloud_comm"));
  m.def("step_queues", &queueing::step_queues, py::arg("queues"), py::arg("decision"),
        py::arg("arrival_bits"));

  m.def("drift_term", &objective::drift_term, py::arg("queues"), py::arg("decision"));
  m.def("dinkelbach_surrogate", &objective::dinkelbach_surrogate, py::arg("bits_now"),
        py::arg("latency_now"), py::arg("j_prev"));
  m.def("slot_fit_eta", &objective::slot_fit_eta, py::arg("total_latency"),
        py::arg("slot_tau"));
  m.def("p2_objective", &objective::p2_objective, py::arg("drift_sum"),
        py::arg("surrogate"), py::arg("v"));

  py::class_<SystemConfig>(m, "SystemConfig")
      .def(py::init<>())
      .def_readwrite("num_devices", &SystemConfig::num_devices)
      .def_readwrite("num_slots", &SystemConfig::num_slots)
      .def_readwrite("slot_tau", &SystemConfig::slot_tau)
      .def_readwrite("area_x", &SystemConfig::area_x)
      .def_readwrite("area_y", &SystemConfig::area_y)
      .def_readwrite("uav_alt", &SystemConfig::uav_alt)
      .def_readwrite("uav_vmax", &SystemConfig::uav_vmax)
      .def_readwrite("channel", &SystemConfig::channel)
      .def_readwrite("p_max", &SystemConfig::p_max)
      .def_readwrite("cycles_per_bit", &SystemConfig::cycles_per_bit)
      .def_readwrite("cpu_local_max", &SystemConfig::cpu_local_max)
      .def_readwrite("cpu_uav_max", &SystemConfig::cpu_uav_max)
      .def_readwrite("cpu_cloud_max", &SystemConfig::cpu_cloud_max)
      .def_readwrite("i_max_bits", &SystemConfig::i_max_bits)
      .def("validate", &SystemConfig::validate);

  py::class_<env::TaskSpec>(m, "TaskSpec")
      .def(py::init<>())
      .def_readwrite("device_xy", &env::TaskSpec::device_xy)
      .def_readwrite("i_max_bits", &env::TaskSpec::i_max_bits)
      .def_readwrite("pathloss_exp", &env::TaskSpec::pathloss_exp)
      .def_readwrite("rician_k", &env::TaskSpec::rician_k)
      .def_readwrite("uav_cpu_cap", &env::TaskSpec::uav_cpu_cap)
      .def_readwrite("seed", &env::TaskSpec::seed)
      .def("num_devices", &env::TaskSpec::num_devices);

  m.def("default_task", &env::default_task, py::arg("config"));
  m.def(
      "sample_task",
      [](Rng& rng, const SystemConfig& cfg) {
        env::TaskRanges ranges;
        return env::sample_task(rng, ranges, cfg);
      },
      py::arg("rng"), py::arg("config"));

  py::class_<env::DeviceOutcome>(m, "DeviceOutcome")
      .def_readonly("drift", &env::DeviceOutcome::drift)
      .def_readonly("bits", &env::DeviceOutcome::bits)
      .def_readonly("comm_latency", &env::DeviceOutcome::comm_latency)
      .def_readonly("total_latency", &env::DeviceOutcome::total_latency)
      .def_readonly("eta", &env::DeviceOutcome::eta)
      .def_readonly("z_ratio", &env::DeviceOutcome::z_ratio)
      .def_readonly("reward", &env::DeviceOutcome::reward)
      .def_readonly("queue_after", &env::DeviceOutcome::queue_after)
      .def_readonly("arrival", &env::DeviceOutcome::arrival);

  py::class_<env::SlotOutcome>(m, "SlotOutcome")
      .def_readonly("slot", &env::SlotOutcome::slot)
      .def_readonly("reward", &env::SlotOutcome::reward)
      .def_readonly("dev", &env::SlotOutcome::dev)
      .def_readonly("total_bits", &env::SlotOutcome::total_bits)
      .def_readonly("total_comm_latency", &env::SlotOutcome::total_comm_latency)
      .def_readonly("surrogate", &env::SlotOutcome::surrogate)
      .def_readonly("ratio_j", &env::SlotOutcome::ratio_j)
      .def_readonly("uav_pos", &env::SlotOutcome::uav_pos);

  py::class_<env::Env>(m, "Env")
      .def(py::init<SystemConfig, env::TaskSpec>(), py::arg("config"), py::arg("task"))
      .def("reset", &env::Env::reset, py::arg("seed"))
      .def("observation", &env::Env::observation,
           py::return_value_policy::reference_internal)
      .def("step_raw",
           [](env::Env& e, const std::vector<double>& raw) { return e.step_raw(raw); })
      .def("slot", &env::Env::slot)
      .def("done", &env::Env::done)
      .def("ratio_j", &env::Env::ratio_j)
      .def("uav_pos", &env::Env::uav_pos)
      .def("queues", &env::Env::queues)
      .def("audit_ok", [](const env::Env& e) { return e.audit_last_step().ok; })
      .def_static("obs_dim", &env::Env::obs_dim, py::arg("num_devices"),
                  py::arg("extended") = false)
      .def_static("action_dim", &env::Env::action_dim, py::arg("num_devices"));

  m.attr("BITS_PER_MB") = kBitsPerMB;
  m.attr("__version__") = "0.1.0";
}
