// evr: command-line front end for the evidential reasoning engine.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evr/assessment.hpp"
#include "evr/error.hpp"
#include "evr/fixtures.hpp"
#include "evr/json_io.hpp"
#include "evr/network_io.hpp"
#include "evr/propagation.hpp"
#include "evr/service.hpp"

namespace {

using nlohmann::json;
using namespace evr;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open file", path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, e.what(), path);
  }
}

CompiledNetwork load_compiled(const std::string& path, Topology topology = Topology::kPolytree) {
  return CompiledNetwork::compile(load_network_file(path), topology);
}

/// A path to a JSON findings file, or inline "node=state,node=state".
std::vector<Evidence> load_evidence(const CompiledNetwork& net, const std::string& spec) {
  if (spec.empty()) return {};
  if (std::filesystem::is_regular_file(spec)) {
    json doc = read_json_file(spec);
    if (doc.is_object() && doc.contains("findings")) doc = doc["findings"];
    return json_io::findings_from_json(net, doc);
  }
  std::vector<Evidence> out;
  std::stringstream items(spec);
  std::string item;
  while (std::getline(items, item, ',')) {
    if (!item.empty()) out.push_back(json_io::parse_inline_finding(net, item));
  }
  return out;
}

int cmd_validate(const std::string& path, bool as_json) {
  Network net;
  try {
    net = load_network_file(path);
  } catch (const Error& e) {
    std::cout << e.what() << '\n';
    return kExitFailure;
  }
  const ValidationReport report = validate(net);
  if (as_json) {
    std::cout << json_io::validation_to_json(report).dump(2) << '\n';
  } else if (report.ok) {
    std::cout << "ok\n";
    for (const auto& issue : report.issues) std::cout << "warning " << issue.code << " [" << issue.subject << "]: " << issue.message << '\n';
  } else {
    for (const auto& issue : report.issues) {
      std::cout << (issue.severity == Severity::kError ? "error " : "warning ") << issue.code << " ["
                << issue.subject << "]: " << issue.message << '\n';
    }
  }
  return report.ok ? kExitOk : kExitFailure;
}

int cmd_infer(const std::string& path, const std::string& evidence, bool oracle, bool as_json) {
  const CompiledNetwork net = load_compiled(path);
  const auto findings = load_evidence(net, evidence);
  const BeliefState state = BeliefState::initialize(net).assert_all(findings);
  std::optional<PosteriorMap> exact;
  if (oracle) exact = enumerate_posteriors(net, findings);

  if (as_json) {
    json out = {{"engine", json_io::beliefs_to_json(state)}};
    if (exact) out["oracle"] = json_io::posteriors_to_json(*exact);
    std::cout << out.dump(2) << '\n';
    return kExitOk;
  }
  std::printf(oracle ? "%-28s %-22s %16s %16s\n" : "%-28s %-22s %16s\n", "node", "state", "engine", "oracle");
  for (std::size_t v = 0; v < net.size(); ++v) {
    const Node& node = net.node(v);
    const auto& bel = state.beliefs(v);
    for (std::size_t s = 0; s < node.states.size(); ++s) {
      if (oracle) {
        std::printf("%-28s %-22s %16.12f %16.12f\n", node.id.c_str(), node.states[s].c_str(), bel[s],
                    exact->at(node.id)[s]);
      } else {
        std::printf("%-28s %-22s %16.12f\n", node.id.c_str(), node.states[s].c_str(), bel[s]);
      }
    }
  }
  return kExitOk;
}

int cmd_cycle(const std::string& path, const std::string& sources_spec, std::uint64_t seed, const std::string& config_path,
              const std::string& evidence) {
  const CompiledNetwork net = load_compiled(path);
  std::vector<InformationSource> sources;
  if (sources_spec == "all") {
    sources = default_sources(net, false);
  } else if (sources_spec == "all-unit-cost") {
    sources = default_sources(net, true);
  } else {
    sources = json_io::sources_from_json(read_json_file(sources_spec));
  }
  const CycleConfig config = config_path.empty() ? CycleConfig{} : json_io::config_from_json(read_json_file(config_path));
  const auto initial = load_evidence(net, evidence);

  const fixtures::WorldAssignment world = fixtures::sample_world(net, seed);
  AssessmentState state = start_session(net, config, std::move(sources), initial);
  const CycleResult result = run_cycle(std::move(state), make_world_executor(world, seed));

  json world_json = json::object();
  for (const auto& [node, s] : world) world_json[node] = net.node(net.require(node)).states[s];
  const json out = {{"world_seed", seed},
                    {"world", world_json},
                    {"invocations", result.invocations},
                    {"trace", json_io::trace_to_json(result.state.trace)},
                    {"report", json_io::commitment_to_json(net, result.report)}};
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

int cmd_serve(const std::string& host, int port, std::string data_dir) {
  if (data_dir.empty()) {
    if (const char* env = std::getenv("EVR_DATA_DIR"); env && *env) data_dir = env;
  }
  std::optional<std::filesystem::path> dir;
  if (!data_dir.empty()) dir = data_dir;
  service::Service svc(dir);
  std::cerr << "evr: serving on http://" << host << ':' << port << " with " << svc.session_count()
            << " restored session(s)" << (dir ? ", data in " + dir->string() : std::string(", in memory")) << '\n';
  if (!service::serve_http(svc, host, port)) {
    std::cerr << "evr: cannot listen on " << host << ':' << port << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_fixture(const std::string& case_id, const std::string& out_path) {
  const std::string text = serialize_network(fixtures::build_case(case_id));
  if (out_path.empty()) {
    std::cout << text;
    return kExitOk;
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write", out_path);
  out << text;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evidential reasoning engine and situation-assessment shell"};
  app.require_subcommand(1);

  std::string net_path, evidence, sources_spec, config_path, data_dir, case_id, out_path, host = "127.0.0.1";
  bool oracle = false, as_json = false;
  std::uint64_t seed = 0;
  int port = 8080;

  auto* validate_cmd = app.add_subcommand("validate", "Validate a network document");
  validate_cmd->add_option("net", net_path, "Network JSON file")->required();
  validate_cmd->add_flag("--json", as_json, "Print the report as JSON");

  auto* infer_cmd = app.add_subcommand("infer", "Print posterior beliefs");
  infer_cmd->add_option("net", net_path, "Network JSON file")->required();
  infer_cmd->add_option("--evidence,-e", evidence, "Findings file, or node=state[,node=state...]");
  infer_cmd->add_flag("--oracle", oracle, "Add a joint-enumeration column");
  infer_cmd->add_flag("--json", as_json, "Print JSON");

  auto* cycle_cmd = app.add_subcommand("cycle", "Run the assessment cycle against a sampled world");
  cycle_cmd->add_option("net", net_path, "Network JSON file")->required();
  cycle_cmd->add_option("--sources", sources_spec, "Sources file, 'all' or 'all-unit-cost'")->required();
  cycle_cmd->add_option("--world-seed", seed, "Seed for the world and garbled reports")->required();
  cycle_cmd->add_option("--config", config_path, "CycleConfig JSON file");
  cycle_cmd->add_option("--evidence,-e", evidence, "Initial findings");

  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP session service");
  serve_cmd->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--data", data_dir, "Snapshot directory (default $EVR_DATA_DIR)");

  auto* fixture_cmd = app.add_subcommand("fixture", "Print a built-in taxonomy case network");
  fixture_cmd->add_option("case", case_id, "Case id, a..f")->required();
  fixture_cmd->add_option("--out,-o", out_path, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(net_path, as_json);
    if (*infer_cmd) return cmd_infer(net_path, evidence, oracle, as_json);
    if (*cycle_cmd) return cmd_cycle(net_path, sources_spec, seed, config_path, evidence);
    if (*serve_cmd) return cmd_serve(host, port, data_dir);
    if (*fixture_cmd) return cmd_fixture(case_id, out_path);
  } catch (const Error& e) {
    std::cerr << "evr: " << e.what() << '\n';
    return e.code() == ErrorCode::kUnknownCase ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "evr: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
