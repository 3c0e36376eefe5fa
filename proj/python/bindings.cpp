// Thin JSON-in, JSON-out bindings; python/tracebench/__init__.py wraps them.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tracebench/config.hpp"
#include "tracebench/core.hpp"
#include "tracebench/crypto.hpp"
#include "tracebench/event_log.hpp"
#include "tracebench/metrics.hpp"
#include "tracebench/simulation.hpp"

namespace py = pybind11;
using namespace tracebench;
using nlohmann::json;

namespace {

ScenarioConfig config_from(const std::string& text, const std::string& source) {
  ScenarioConfig c = parse_config(text, source);
  validate(c);
  return c;
}

}  // namespace

PYBIND11_MODULE(_tracebench, m) {
  m.doc() = "tracebench native core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<LogError>(m, "LogError", PyExc_ValueError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);

  m.def("protocols", [] {
    std::vector<std::string> out;
    for (ProtocolKind p : all_protocols()) out.push_back(to_string(p));
    return out;
  });

  m.def(
      "effective_config",
      [](const std::string& text, const std::string& source) { return to_json(config_from(text, source)).dump(); },
      py::arg("text"), py::arg("source") = "<config>");

  m.def(
      "config_hash", [](const std::string& text, const std::string& source) { return config_hash(config_from(text, source)); },
      py::arg("text"), py::arg("source") = "<config>");

  m.def(
      "simulate_to_dir",
      [](const std::string& text, const std::string& dir, const std::string& source) {
        const ScenarioConfig c = config_from(text, source);
        py::gil_scoped_release release;
        return simulate_to_dir(c, dir).dump();
      },
      py::arg("text"), py::arg("dir"), py::arg("source") = "<config>");

  m.def(
      "run_simulation",
      [](const std::string& text, const std::string& source) {
        const ScenarioConfig c = config_from(text, source);
        std::ostringstream log, pubs;
        {
          py::gil_scoped_release release;
          run_simulation(c, log, &pubs);
        }
        return py::make_tuple(py::bytes(log.str()), py::bytes(pubs.str()));
      },
      py::arg("text"), py::arg("source") = "<config>");

  m.def(
      "report_from_log",
      [](const std::string& log, const std::string& name) {
        std::istringstream in(log);
        return render_report(report_from_log(in, name));
      },
      py::arg("log"), py::arg("name") = "events.jsonl");

  m.def(
      "compare",
      [](const std::vector<std::string>& reports, bool force, const std::string& format) {
        std::vector<json> parsed;
        for (const auto& r : reports) parsed.push_back(json::parse(r));
        const CompareTable t = compare_reports(parsed, force);
        if (format == "csv") return to_csv(t);
        if (format == "markdown") return to_markdown(t);
        throw ArgumentError("format must be csv or markdown");
      },
      py::arg("reports"), py::arg("force") = false, py::arg("format") = "markdown");

  m.def("sha256_hex", [](py::bytes data) {
    const std::string s = data;
    return to_hex(hash(as_bytes(s)).view());
  });
}
