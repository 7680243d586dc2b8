#include <doctest.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "evr/fixtures.hpp"
#include "evr/network_io.hpp"
#include "evr/service.hpp"

using namespace evr;
using namespace evr::service;
using nlohmann::json;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("evr_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

json body_of(const Response& r) { return json::parse(r.body); }

std::string create_case_e(Service& svc) {
  const json req = {{"network", network_to_json(fixtures::build_case("e"))}};
  const Response r = svc.handle_request("POST", "/sessions", req.dump());
  REQUIRE(r.status == 201);
  const json b = body_of(r);
  CHECK(b["revision"] == 1);
  return b["session_id"].get<std::string>();
}

double burglary(Service& svc, const std::string& id) {
  const json b = body_of(svc.handle_request("GET", "/sessions/" + id + "/beliefs", ""));
  return b["beliefs"]["burglary"][0].get<double>();
}

std::string run_cli(const std::string& args) {
  const std::string cmd = std::string(EVR_CLI_PATH) + " " + args + " 2>&1";
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) out += buf;
  const int status = pclose(pipe);
  out += "\nEXIT " + std::to_string(WEXITSTATUS(status));
  return out;
}

}  // namespace

TEST_CASE("session lifecycle on case (e)") {
  Service svc(std::nullopt);
  const std::string id = create_case_e(svc);
  const std::string base = "/sessions/" + id;

  const json summary = body_of(svc.handle_request("GET", base, ""));
  CHECK(summary["revision"] == 1);
  CHECK(summary["nodes"].size() == 5);

  CHECK(burglary(svc, id) == Approx(0.01));
  CHECK(body_of(svc.handle_request("GET", base + "/termination", ""))["reason"] == "RESOLVED");

  const json ev = {{"findings", {{{"node", "alarm"}, {"state", "on"}}}}, {"expected_revision", 1}};
  Response r = svc.handle_request("POST", base + "/evidence", ev.dump());
  REQUIRE(r.status == 200);
  json b = body_of(r);
  CHECK(b["revision"] == 2);
  CHECK(b["sorted"].size() == 1);
  CHECK(b["delta"]["changes"]["burglary"][0].get<double>() > 0.5);
  CHECK(burglary(svc, id) == Approx(0.583).epsilon(1e-3));

  SUBCASE("stale revision and duplicates are conflicts") {
    r = svc.handle_request("POST", base + "/evidence", ev.dump());
    CHECK(r.status == 409);
    CHECK(body_of(r)["error"] == "ERR_REVISION_CONFLICT");
    const json dup = {{"findings", {{{"node", "alarm"}, {"state", "on"}}}}, {"expected_revision", 2}};
    r = svc.handle_request("POST", base + "/evidence", dup.dump());
    CHECK(r.status == 409);
    CHECK(body_of(r)["error"] == "ERR_DUPLICATE_EVIDENCE");
  }
  SUBCASE("commit before termination") {
    CHECK(body_of(svc.handle_request("GET", base + "/termination", ""))["status"] == "CONTINUE");
    r = svc.handle_request("POST", base + "/commit", "{}");
    CHECK(r.status == 409);
    CHECK(body_of(r)["error"] == "ERR_NOT_TERMINATED");
  }
  SUBCASE("reads") {
    CHECK(body_of(svc.handle_request("GET", base + "/hypotheses", ""))["hypotheses"].size() == 4);
    const json goals = body_of(svc.handle_request("GET", base + "/goals", ""));
    CHECK_FALSE(goals["goals"].empty());
    const json sources = body_of(svc.handle_request("GET", base + "/sources", ""));
    REQUIRE_FALSE(sources["sources"].empty());
    CHECK(sources["sources"][0].contains("gain_per_cost"));
    CHECK(body_of(svc.handle_request("GET", base + "/trace", ""))["trace"].size() >= 2);
    const json list = body_of(svc.handle_request("GET", "/sessions", ""));
    CHECK(list["sessions"] == json::array({id}));
  }
  SUBCASE("invoke, report, commit") {
    r = svc.handle_request("POST", base + "/invoke", json{{"source_id", "radio"}, {"expected_revision", 2}}.dump());
    REQUIRE(r.status == 200);
    b = body_of(r);
    CHECK(b["awaiting"] == json::array({"radio"}));
    CHECK(b["revision"] == 3);
    CHECK(b["spent"].get<double>() == 1.0);

    const json quake = {{"findings", {{{"node", "earthquake"}, {"state", "true"}}}}};
    r = svc.handle_request("POST", base + "/evidence", quake.dump());
    REQUIRE(r.status == 200);
    CHECK(burglary(svc, id) < 0.05);

    r = svc.handle_request("POST", base + "/commit", "{}");
    REQUIRE(r.status == 200);
    b = body_of(r);
    CHECK(b["report"]["termination"] == "RESOLVED");
    CHECK(b["revision"] == 5);

    r = svc.handle_request("POST", base + "/invoke", json{{"source_id", "nope"}}.dump());
    CHECK(r.status == 404);
  }
  SUBCASE("contradiction is 422 and leaves the session alone") {
    Service s2(std::nullopt);
    Network n = fixtures::build_case("e");
    for (auto& node : n.nodes)
      if (node.id == "call") node.cpt = {{1.0, 0.0}, {1.0, 0.0}};
    const std::string sid =
        body_of(s2.handle_request("POST", "/sessions", json{{"network", network_to_json(n)}}.dump()))["session_id"];
    r = s2.handle_request("POST", "/sessions/" + sid + "/evidence",
                          json{{"findings", {{{"node", "call"}, {"state", "silent"}}}}}.dump());
    CHECK(r.status == 422);
    CHECK(body_of(s2.handle_request("GET", "/sessions/" + sid, ""))["revision"] == 1);
  }
}

TEST_CASE("request errors") {
  Service svc(std::nullopt);
  CHECK(svc.handle_request("GET", "/sessions/missing", "").status == 404);
  CHECK(svc.handle_request("POST", "/sessions", "{not json").status == 400);
  CHECK(svc.handle_request("POST", "/sessions", "{}").status == 400);
  CHECK(svc.handle_request("GET", "/elsewhere", "").status == 404);

  json loopy = network_to_json(fixtures::build_case("e"));
  loopy["nodes"][2]["observable"] = "yes";
  CHECK(svc.handle_request("POST", "/sessions", json{{"network", loopy}}.dump()).status == 400);

  const std::string id = create_case_e(svc);
  const Response r =
      svc.handle_request("POST", "/sessions/" + id + "/evidence", json{{"findings", {{{"node", "ghost"}, {"state", 0}}}}}.dump());
  CHECK(r.status == 404);
  CHECK(svc.handle_request("POST", "/sessions/" + id + "/evidence", json{{"findings", 3}}.dump()).status == 400);
}

TEST_CASE("optimistic concurrency: one of two racing writers wins") {
  for (int round = 0; round < 20; ++round) {
    Service svc(std::nullopt);
    const std::string id = create_case_e(svc);
    std::atomic<int> ok{0}, conflict{0};
    auto writer = [&](const char* node, const char* state) {
      const json body = {{"findings", {{{"node", node}, {"state", state}}}}, {"expected_revision", 1}};
      const int status = svc.handle_request("POST", "/sessions/" + id + "/evidence", body.dump()).status;
      if (status == 200) ++ok;
      if (status == 409) ++conflict;
    };
    std::thread a(writer, "radio", "announced");
    std::thread b(writer, "call", "called");
    a.join();
    b.join();
    CHECK(ok == 1);
    CHECK(conflict == 1);
  }
}

TEST_CASE("snapshots survive a restart") {
  TempDir dir;
  std::string id;
  json beliefs_before, trace_before;
  {
    Service svc(dir.path);
    id = create_case_e(svc);
    const json ev = {{"findings",
                      {{{"node", "alarm"}, {"state", "on"}}, {{"node", "call"}, {"likelihood", {0.7, 0.2}}}}}};
    REQUIRE(svc.handle_request("POST", "/sessions/" + id + "/evidence", ev.dump()).status == 200);
    REQUIRE(svc.handle_request("POST", "/sessions/" + id + "/invoke", json{{"source_id", "radio"}}.dump()).status == 200);
    beliefs_before = body_of(svc.handle_request("GET", "/sessions/" + id + "/beliefs", ""));
    trace_before = body_of(svc.handle_request("GET", "/sessions/" + id + "/trace", ""));
  }
  CHECK(fs::exists(dir.path / (id + ".json")));
  for (const auto& entry : fs::directory_iterator(dir.path)) CHECK(entry.path().extension() == ".json");

  Service again(dir.path);
  CHECK(again.session_count() == 1);
  const json beliefs_after = body_of(again.handle_request("GET", "/sessions/" + id + "/beliefs", ""));
  CHECK(beliefs_after["revision"] == 3);
  for (auto& [node, vec] : beliefs_before["beliefs"].items()) {
    for (std::size_t s = 0; s < vec.size(); ++s) {
      CHECK(std::abs(vec[s].get<double>() - beliefs_after["beliefs"][node][s].get<double>()) <= 1e-12);
    }
  }
  CHECK(body_of(again.handle_request("GET", "/sessions/" + id + "/trace", "")) == trace_before);
  const json summary = body_of(again.handle_request("GET", "/sessions/" + id, ""));
  CHECK(summary["spent"].get<double>() == 1.0);

  SUBCASE("snapshot/restore is the identity") {
    Session s = restore(json::parse(std::ifstream(dir.path / (id + ".json"))));
    CHECK(snapshot(restore(snapshot(s))) == snapshot(s));
  }
}

TEST_CASE("HTTP transport") {
  Service svc(std::nullopt);
  HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread loop([&] { server.run(); });

  httplib::Client client("127.0.0.1", port);
  const json create = {{"network", network_to_json(fixtures::build_case("e"))}};
  auto res = client.Post("/sessions", create.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  const std::string id = json::parse(res->body)["session_id"];
  res = client.Post("/sessions/" + id + "/evidence",
                    json{{"findings", {{{"node", "alarm"}, {"state", "on"}}}}, {"expected_revision", 1}}.dump(),
                    "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  res = client.Get("/sessions/" + id + "/beliefs");
  REQUIRE(res);
  CHECK(json::parse(res->body)["beliefs"]["burglary"][0].get<double>() == Approx(0.583).epsilon(1e-3));
  res = client.Get("/sessions/nope/beliefs");
  REQUIRE(res);
  CHECK(res->status == 404);

  server.stop();
  loop.join();
}

TEST_CASE("CLI") {
  const std::string fixtures_dir = EVR_FIXTURE_DIR;
  std::string out = run_cli("validate " + fixtures_dir + "/case_e.json");
  CHECK(out.rfind("ok\n", 0) == 0);
  CHECK(out.find("EXIT 0") != std::string::npos);

  out = run_cli("infer " + fixtures_dir + "/case_e.json --evidence alarm=on --oracle");
  CHECK(out.find("0.583460") != std::string::npos);
  CHECK(out.find("EXIT 0") != std::string::npos);

  out = run_cli("cycle " + fixtures_dir + "/case_a.json --sources all-unit-cost --world-seed 42");
  CHECK(out.find("EXIT 0") != std::string::npos);
  CHECK(out.find("\"report\"") != std::string::npos);

  CHECK(run_cli("").find("EXIT 2") != std::string::npos);
  CHECK(run_cli("infer").find("EXIT 2") != std::string::npos);
  CHECK(run_cli("cycle " + fixtures_dir + "/case_a.json --world-seed x --sources all").find("EXIT 2") != std::string::npos);

  TempDir dir;
  std::ofstream(dir.path / "bad.json") << serialize_network([] {
    Network n = fixtures::build_case("e");
    n.nodes[2].cpt[0] = {0.5, 0.4};
    return n;
  }());
  out = run_cli("validate " + (dir.path / "bad.json").string());
  CHECK(out.find("ERR_CPT_NORMALIZATION") != std::string::npos);
  CHECK(out.find("EXIT 1") != std::string::npos);
}
