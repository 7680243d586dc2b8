#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "evr/assessment.hpp"
#include "evr/error.hpp"
#include "evr/fixtures.hpp"
#include "evr/json_io.hpp"
#include "evr/network_io.hpp"
#include "evr/propagation.hpp"
#include "evr/service.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

json parse_or_throw(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw evr::Error(evr::ErrorCode::kParse, e.what(), what);
  }
}

evr::CompiledNetwork compile(const std::string& network) {
  return evr::CompiledNetwork::compile(evr::parse_network(network));
}

// Documents cross the boundary as JSON text; the Python package wraps them.
std::string validate(const std::string& network) {
  return evr::json_io::validation_to_json(evr::validate(evr::parse_network(network))).dump();
}

std::string infer(const std::string& network, const std::string& findings, bool oracle) {
  const auto net = compile(network);
  const auto ledger = evr::json_io::findings_from_json(net, parse_or_throw(findings, "findings"));
  const auto state = evr::BeliefState::initialize(net).assert_all(ledger);
  json out = {{"engine", evr::json_io::beliefs_to_json(state)}};
  if (oracle) out["oracle"] = evr::json_io::posteriors_to_json(evr::enumerate_posteriors(net, ledger));
  return out.dump();
}

std::string run_cycle(const std::string& network, const std::string& sources, std::uint64_t world_seed,
                      const std::string& config, const std::string& findings) {
  const auto net = compile(network);
  std::vector<evr::InformationSource> src;
  if (sources == "all") src = evr::default_sources(net, false);
  else if (sources == "all-unit-cost") src = evr::default_sources(net, true);
  else src = evr::json_io::sources_from_json(parse_or_throw(sources, "sources"));
  const auto cfg = evr::json_io::config_from_json(parse_or_throw(config, "config"));
  const auto initial = evr::json_io::findings_from_json(net, parse_or_throw(findings, "findings"));

  const auto world = evr::fixtures::sample_world(net, world_seed);
  const auto result = evr::run_cycle(evr::start_session(net, cfg, std::move(src), initial),
                                     evr::make_world_executor(world, world_seed));
  json world_json = json::object();
  for (const auto& [node, s] : world) world_json[node] = net.node(net.require(node)).states[s];
  return json{{"world", world_json},
              {"invocations", result.invocations},
              {"trace", evr::json_io::trace_to_json(result.state.trace)},
              {"report", evr::json_io::commitment_to_json(net, result.report)}}
      .dump();
}

}  // namespace

PYBIND11_MODULE(_evr, m) {
  m.doc() = "Evidential reasoning engine: polytree propagation, enumeration oracle, assessment cycle";

  py::register_exception<evr::Error>(m, "EvrError", PyExc_ValueError);

  m.def("validate", &validate, py::arg("network"), "ValidationReport for a network document, as JSON text.");
  m.def("infer", &infer, py::arg("network"), py::arg("findings") = "[]", py::arg("oracle") = false,
        "Posterior beliefs (and optionally enumeration posteriors) as JSON text.");
  m.def("run_cycle", &run_cycle, py::arg("network"), py::arg("sources") = "all", py::arg("world_seed") = 0,
        py::arg("config") = "null", py::arg("findings") = "[]",
        "Runs the assessment cycle against a world sampled at `world_seed`.");
  m.def(
      "build_case",
      [](const std::string& id, std::size_t classes, std::size_t indicators) {
        return evr::serialize_network(evr::fixtures::build_case(id, {classes, indicators}));
      },
      py::arg("case_id"), py::arg("classes") = 3, py::arg("indicators") = 6);
  m.def(
      "random_polytree",
      [](std::uint64_t seed, std::size_t nodes, std::size_t max_states) {
        return evr::serialize_network(evr::fixtures::random_polytree(seed, nodes, max_states));
      },
      py::arg("seed"), py::arg("node_count"), py::arg("max_states") = 4);

  py::class_<evr::service::Service>(m, "Service")
      .def(py::init<std::optional<std::filesystem::path>>(), py::arg("data_dir") = py::none())
      .def(
          "handle_request",
          [](evr::service::Service& s, const std::string& method, const std::string& path, const std::string& body) {
            evr::service::Response r;
            {
              py::gil_scoped_release release;
              r = s.handle_request(method, path, body);
            }
            return py::make_tuple(r.status, r.body);
          },
          py::arg("method"), py::arg("path"), py::arg("body") = "")
      .def_property_readonly("session_count", &evr::service::Service::session_count);
}
