/* Python bindings: scenarios, the simulation loop, run records, the meter
 * codec and control-service framing.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <gridloop/devices/meter_frame.hpp>
#include <gridloop/engine/simulation.hpp>
#include <gridloop/service/protocol.hpp>

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace gridloop;
using engine::json;

namespace {

PyObject *validation_type = nullptr; // owned by the module

py::object to_python(const json &j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

json from_python(const py::handle &obj) {
  return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

std::span<const std::uint8_t> byte_span(const py::bytes &b) {
  std::string_view v = b;
  return {reinterpret_cast<const std::uint8_t *>(v.data()), v.size()};
}

py::bytes to_bytes(const std::vector<std::uint8_t> &v) {
  return py::bytes(reinterpret_cast<const char *>(v.data()), v.size());
}

const char *status_name(devices::DecodeStatus s) {
  switch (s) {
  case devices::DecodeStatus::ok: return "ok";
  case devices::DecodeStatus::bad_sync: return "bad_sync";
  case devices::DecodeStatus::truncated: return "truncated";
  case devices::DecodeStatus::bad_crc: return "bad_crc";
  case devices::DecodeStatus::trailing_bytes: return "trailing_bytes";
  }
  return "unknown";
}

py::array_t<double> column(const engine::SimulationRecord &r,
                           const std::function<double(const devices::TelemetryFrame &)> &get) {
  py::array_t<double> out(static_cast<py::ssize_t>(r.frames.size()));
  auto view = out.mutable_unchecked<1>();
  for (std::size_t k = 0; k < r.frames.size(); ++k)
    view(static_cast<py::ssize_t>(k)) = get(r.frames[k]);
  return out;
}

py::dict timeseries(const engine::SimulationRecord &r) {
  using F = devices::TelemetryFrame;
  py::dict d;
  d["t"] = column(r, [](const F &f) { return f.timestamp; });
  d["load_bus.voltage_rms"] = column(r, [](const F &f) { return f.load_bus.voltage_rms; });
  d["load_bus.current_rms"] = column(r, [](const F &f) { return f.load_bus.current_rms; });
  d["load_bus.frequency"] = column(r, [](const F &f) { return f.load_bus.frequency; });
  for (std::size_t i = 0; i < r.generator_ids.size(); ++i) {
    const auto &id = r.generator_ids[i];
    auto gen = [&](auto member) {
      return column(r, [i, member](const F &f) { return f.generators[i].*member; });
    };
    using G = devices::GeneratorTelemetry;
    d[py::str(id + ".terminal_voltage_rms")] = gen(&G::terminal_voltage_rms);
    d[py::str(id + ".stator_current_rms")] = gen(&G::stator_current_rms);
    d[py::str(id + ".real_power")] = gen(&G::real_power);
    d[py::str(id + ".reactive_power")] = gen(&G::reactive_power);
    d[py::str(id + ".speed_rpm")] = gen(&G::speed_rpm);
    d[py::str(id + ".frequency")] = gen(&G::frequency);
    d[py::str(id + ".phase_difference")] = gen(&G::phase_difference);
  }
  return d;
}

py::object diagnostic(const engine::SimulationRecord &r) {
  if (!r.diagnostic)
    return py::none();
  py::dict d;
  d["kind"] = r.diagnostic->kind;
  d["message"] = r.diagnostic->message;
  d["t"] = r.diagnostic->t;
  return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Microgrid digital twin core";

  auto error = py::register_exception<Error>(m, "GridloopError", PyExc_RuntimeError);
  validation_type = py::exception<ValidationError>(m, "ValidationError", error.ptr()).ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p)
        std::rethrow_exception(p);
    } catch (const ValidationError &e) {
      py::object exc = py::handle(validation_type)(py::str(e.what()));
      exc.attr("problems") = py::cast(e.problems());
      PyErr_SetObject(validation_type, exc.ptr());
    }
  });

  py::class_<engine::Scenario>(m, "Scenario")
      .def_static("load", [](const std::filesystem::path &p) { return engine::load_scenario(p); },
                  py::arg("path"))
      .def_static("from_dict",
                  [](const py::handle &doc) { return engine::parse_scenario(from_python(doc)); },
                  py::arg("doc"))
      .def("to_dict", [](const engine::Scenario &s) { return to_python(engine::to_json(s)); })
      .def("problems", &engine::Scenario::problems)
      .def_readwrite("name", &engine::Scenario::name)
      .def_readwrite("seed", &engine::Scenario::seed)
      .def_readwrite("duration", &engine::Scenario::duration)
      .def_property_readonly("control_period",
                             [](const engine::Scenario &s) { return s.timing.control_period; })
      .def_property_readonly("plant_dt", [](const engine::Scenario &s) { return s.timing.plant_dt; })
      .def("frame_count", &engine::Scenario::frame_count)
      .def("__repr__", [](const engine::Scenario &s) {
        return "<Scenario '" + s.name + "' duration=" + std::to_string(s.duration) + ">";
      });

  py::class_<engine::SimulationRecord>(m, "Record")
      .def_readonly("scenario_name", &engine::SimulationRecord::scenario_name)
      .def_readonly("digest", &engine::SimulationRecord::digest)
      .def_readonly("decision_log", &engine::SimulationRecord::decision_log)
      .def_readonly("final_time", &engine::SimulationRecord::final_time)
      .def_readonly("max_kcl_residual", &engine::SimulationRecord::max_kcl_residual)
      .def_readonly("generator_ids", &engine::SimulationRecord::generator_ids)
      .def_property_readonly("frame_count",
                             [](const engine::SimulationRecord &r) { return r.frames.size(); })
      .def_property_readonly("diagnostic", &diagnostic)
      .def_property_readonly("energy_imbalance",
                             [](const engine::SimulationRecord &r) {
                               return r.energy.relative_imbalance();
                             })
      .def_property_readonly("events",
                             [](const engine::SimulationRecord &r) {
                               py::list out;
                               for (const auto &e : r.events)
                                 out.append(to_python(engine::to_json(e)));
                               return out;
                             })
      .def("frame",
           [](const engine::SimulationRecord &r, std::size_t k) {
             if (k >= r.frames.size())
               throw py::index_error("frame index out of range");
             return to_python(engine::to_json(r.frames[k]));
           },
           py::arg("index"))
      .def("timeseries", &timeseries)
      .def("csv",
           [](const engine::SimulationRecord &r, const std::optional<std::vector<std::string>> &g) {
             return engine::render_csv(r, g.value_or(engine::csv_groups()));
           },
           py::arg("groups") = py::none());

  py::class_<engine::Simulation>(m, "Simulation")
      .def(py::init<engine::Scenario>(), py::arg("scenario"))
      .def("step", &engine::Simulation::step, py::call_guard<py::gil_scoped_release>())
      .def("run", &engine::Simulation::run, py::call_guard<py::gil_scoped_release>())
      .def("record", &engine::Simulation::record)
      .def_property_readonly("time", &engine::Simulation::time)
      .def_property_readonly("period", &engine::Simulation::period)
      .def_property_readonly("finished", &engine::Simulation::finished)
      .def("inject",
           [](engine::Simulation &sim, const py::handle &event) {
             auto r = sim.inject(engine::parse_event(from_python(event)));
             return py::make_tuple(r.accepted, r.reason);
           },
           py::arg("event"));

  m.def("run", &engine::run_scenario, py::arg("scenario"),
        py::call_guard<py::gil_scoped_release>());
  m.def("csv_groups", &engine::csv_groups);

  m.def("crc16", [](const py::bytes &b) { return devices::crc16_ccitt_false(byte_span(b)); },
        py::arg("data"));
  m.def(
      "encode_meter_frame",
      [](std::uint8_t device_id, std::uint8_t sequence,
         const std::vector<std::pair<std::uint8_t, std::uint16_t>> &entries) {
        devices::MeterFrame f;
        f.device_id = device_id;
        f.sequence = sequence;
        for (auto [reg, raw] : entries)
          f.payload.push_back({reg, raw});
        return to_bytes(devices::encode_meter_frame(f));
      },
      py::arg("device_id"), py::arg("sequence"), py::arg("entries"));
  m.def(
      "decode_meter_frame",
      [](const py::bytes &b) {
        auto r = devices::decode_meter_frame(byte_span(b));
        py::object frame = py::none();
        if (r.frame) {
          py::dict d;
          d["device_id"] = r.frame->device_id;
          d["sequence"] = r.frame->sequence;
          py::list entries;
          for (const auto &e : r.frame->payload)
            entries.append(py::make_tuple(e.register_id, e.value));
          d["entries"] = entries;
          d["crc"] = r.frame->crc;
          frame = d;
        }
        return py::make_tuple(status_name(r.status), frame);
      },
      py::arg("data"));
  m.def("register_to_si", &devices::register_to_si, py::arg("register_id"), py::arg("raw"));

  m.attr("PROTO_VERSION") = service::kProtoVersion;
  m.def(
      "frame_message",
      [](const py::handle &msg) { return py::bytes(service::frame_message(from_python(msg).dump())); },
      py::arg("message"));
  m.def("command_names", &service::command_names);
}
