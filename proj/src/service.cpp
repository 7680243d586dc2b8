#include "evr/service.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "evr/error.hpp"
#include "evr/json_io.hpp"
#include "evr/network_io.hpp"

namespace evr::service {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto millis = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(millis));
  return out;
}

Response reply(int status, const json& body) { return {status, body.dump()}; }

Response error_reply(const Error& e) {
  return reply(http_status(e.code()), {{"error", to_string(e.code())}, {"message", e.detail()}, {"subject", e.subject()}});
}

Response error_reply(int status, std::string_view code, const std::string& message) {
  return reply(status, {{"error", code}, {"message", message}, {"subject", ""}});
}

std::vector<std::string> split_path(std::string_view path) {
  if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t end = path.find('/', start);
    const std::string_view part = path.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    if (!part.empty()) out.emplace_back(part);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

json parse_body(std::string_view body) {
  if (body.empty()) return json::object();
  try {
    json doc = json::parse(body);
    if (!doc.is_object()) throw Error(ErrorCode::kParse, "request body must be a JSON object");
    return doc;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, e.what(), "body");
  }
}

void check_revision(const json& body, const Session& session) {
  auto it = body.find("expected_revision");
  if (it == body.end() || it->is_null()) return;
  if (!it->is_number_unsigned()) throw Error(ErrorCode::kParse, "expected_revision must be a non-negative integer");
  if (it->get<std::uint64_t>() != session.revision) {
    throw Error(ErrorCode::kRevisionConflict,
                "session is at revision " + std::to_string(session.revision) + ", request expected " +
                    std::to_string(it->get<std::uint64_t>()),
                session.id);
  }
}

json summary(const Session& s) {
  const auto& st = s.state;
  json observed = json::array();
  for (const auto& f : st.beliefs.ledger()) observed.push_back(json_io::evidence_to_json(st.network(), f));
  json nodes = json::array();
  const auto& net = st.network();
  for (std::size_t v = 0; v < net.size(); ++v) {
    const Node& n = net.node(v);
    nodes.push_back({{"id", n.id},
                     {"label", n.label},
                     {"states", n.states},
                     {"parents", n.parents},
                     {"observable", n.observable},
                     {"target", n.target},
                     {"category", to_string(net.category(v))}});
  }
  return {{"session_id", s.id},
          {"revision", s.revision},
          {"created", s.created},
          {"updated", s.updated},
          {"network_id", net.network().id},
          {"nodes", std::move(nodes)},
          {"config", json_io::config_to_json(st.config)},
          {"sources", json_io::sources_to_json(st.sources)},
          {"findings", std::move(observed)},
          {"spent", st.spent},
          {"queries", st.queries}};
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNoSuchSession:
    case ErrorCode::kNoSuchNode:
    case ErrorCode::kNoSuchSource:
      return 404;
    case ErrorCode::kRevisionConflict:
    case ErrorCode::kDuplicateEvidence:
    case ErrorCode::kNotTerminated:
    case ErrorCode::kSourceExhausted:
    case ErrorCode::kNoUsableSource:
    case ErrorCode::kAlreadyObserved:
    case ErrorCode::kNoSuchEvidence:
      return 409;
    case ErrorCode::kZeroProbabilityEvidence:
    case ErrorCode::kZeroNormalizer:
      return 422;
    case ErrorCode::kIo:
      return 500;
    default:
      return 400;
  }
}

json snapshot(const Session& s) {
  const AssessmentState& st = s.state;
  json failed = st.failed_sources;
  return {{"session_id", s.id},
          {"revision", s.revision},
          {"created", s.created},
          {"updated", s.updated},
          {"network", network_to_json(st.network().network())},
          {"config", json_io::config_to_json(st.config)},
          {"sources", json_io::sources_to_json(st.sources)},
          {"ledger", json_io::findings_to_json(st.network(), st.beliefs.ledger())},
          {"spent", st.spent},
          {"queries", st.queries},
          {"failed_sources", std::move(failed)},
          {"trace", json_io::trace_to_json(st.trace)}};
}

Session restore(const json& doc) {
  try {
    CompiledNetwork net = CompiledNetwork::compile(network_from_json(doc.at("network")));
    BeliefState beliefs = BeliefState::initialize(net).assert_all(json_io::findings_from_json(net, doc.at("ledger")));
    AssessmentState state{std::move(beliefs),
                          json_io::config_from_json(doc.at("config")),
                          json_io::sources_from_json(doc.at("sources")),
                          {},
                          doc.at("spent").get<double>(),
                          doc.at("queries").get<std::size_t>(),
                          doc.at("failed_sources").get<std::vector<std::string>>(),
                          json_io::trace_from_json(doc.at("trace"))};
    state.goals = set_goals(state);
    return {doc.at("session_id").get<std::string>(), std::move(state), doc.at("created").get<std::string>(),
            doc.at("updated").get<std::string>(), doc.at("revision").get<std::uint64_t>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, e.what(), "snapshot");
  }
}

SessionStore::SessionStore(fs::path directory) : directory_(std::move(directory)) {
  std::error_code ec;
  fs::create_directories(directory_, ec);
  if (ec) throw Error(ErrorCode::kIo, ec.message(), directory_.string());
}

void SessionStore::persist(const Session& session) const {
  const fs::path final_path = directory_ / (session.id + ".json");
  const fs::path tmp_path = directory_ / (session.id + ".json.tmp");
  {
    std::ofstream out(tmp_path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write snapshot", tmp_path.string());
    out << snapshot(session).dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "short write", tmp_path.string());
  }
  std::error_code ec;
  fs::rename(tmp_path, final_path, ec);
  if (ec) throw Error(ErrorCode::kIo, ec.message(), final_path.string());
}

std::map<std::string, Session> SessionStore::load_all() const {
  std::map<std::string, Session> out;
  for (const auto& entry : fs::directory_iterator(directory_)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    try {
      std::ifstream in(entry.path());
      Session s = restore(json::parse(in));
      out.emplace(s.id, std::move(s));
    } catch (const std::exception& e) {
      std::cerr << "skipping unreadable snapshot " << entry.path() << ": " << e.what() << '\n';
    }
  }
  return out;
}

Service::Service(std::optional<fs::path> data_dir) {
  if (!data_dir) return;
  store_.emplace(*data_dir);
  for (auto& [id, session] : store_->load_all()) {
    sessions_.emplace(id, std::make_shared<Slot>(std::move(session)));
  }
}

std::size_t Service::session_count() const {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.size();
}

std::shared_ptr<Service::Slot> Service::find(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::kNoSuchSession, "unknown session", id);
  return it->second;
}

std::string Service::fresh_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(sessions_mutex_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%04llx%012llx", static_cast<unsigned long long>(++id_counter_ & 0xffff),
                static_cast<unsigned long long>(rng() & 0xffffffffffffULL));
  return buf;
}

Response Service::handle_request(std::string_view method, std::string_view path, std::string_view body) {
  try {
    const auto parts = split_path(path);
    if (parts.empty() || parts[0] != "sessions" || parts.size() > 3) {
      return error_reply(404, "ERR_NOT_FOUND", "no such endpoint");
    }

    if (parts.size() == 1) {
      if (method == "GET") {
        std::lock_guard lock(sessions_mutex_);
        json ids = json::array();
        for (const auto& [id, slot] : sessions_) ids.push_back(id);
        return reply(200, {{"sessions", ids}});
      }
      if (method != "POST") return error_reply(405, "ERR_METHOD", "use GET or POST");
      const json req = parse_body(body);
      if (!req.contains("network")) throw Error(ErrorCode::kParse, "missing field 'network'", "body");
      CompiledNetwork net = CompiledNetwork::compile(network_from_json(req["network"]));
      const CycleConfig config = json_io::config_from_json(req.value("config", json()));
      std::vector<InformationSource> sources =
          req.contains("sources") && !req["sources"].is_null() ? json_io::sources_from_json(req["sources"])
                                                               : default_sources(net);
      std::vector<Evidence> initial;
      if (req.contains("initial_findings")) initial = json_io::findings_from_json(net, req["initial_findings"]);

      Session session{fresh_id(), start_session(net, config, std::move(sources), initial), utc_now(), {}, 1};
      session.updated = session.created;
      if (store_) store_->persist(session);
      const std::string id = session.id;
      auto slot = std::make_shared<Slot>(std::move(session));
      {
        std::lock_guard lock(sessions_mutex_);
        sessions_.emplace(id, slot);
      }
      return reply(201, {{"session_id", id}, {"revision", 1}});
    }

    auto slot = find(parts[1]);
    std::lock_guard lock(slot->mutex);
    Session& s = slot->session;
    const AssessmentState& st = s.state;
    const CompiledNetwork& net = st.network();
    const std::string action = parts.size() == 3 ? parts[2] : "";

    if (method == "GET") {
      if (action.empty()) return reply(200, summary(s));
      if (action == "beliefs") {
        json states = json::object();
        for (std::size_t v = 0; v < net.size(); ++v) states[net.node(v).id] = net.node(v).states;
        return reply(200, {{"revision", s.revision}, {"beliefs", json_io::beliefs_to_json(st.beliefs)}, {"states", states}});
      }
      if (action == "hypotheses") {
        return reply(200, {{"revision", s.revision}, {"hypotheses", json_io::hypotheses_to_json(net, classify_hypotheses(st))}});
      }
      if (action == "goals") {
        return reply(200, {{"revision", s.revision}, {"goals", json_io::goals_to_json(set_goals(st))}});
      }
      if (action == "sources") {
        const GoalSet goals = set_goals(st);
        return reply(200, {{"revision", s.revision},
                           {"goals", json_io::goals_to_json(goals)},
                           {"sources", json_io::ranking_to_json(rank_sources(st, goals))}});
      }
      if (action == "termination") {
        const Termination t = check_termination(st);
        return reply(200, {{"revision", s.revision},
                           {"status", t == Termination::kContinue ? "CONTINUE" : "TERMINATED"},
                           {"reason", to_string(t)}});
      }
      if (action == "trace") {
        return reply(200, {{"revision", s.revision}, {"trace", json_io::trace_to_json(st.trace)}});
      }
      return error_reply(404, "ERR_NOT_FOUND", "no such endpoint");
    }
    if (method != "POST") return error_reply(405, "ERR_METHOD", "unsupported method");

    const json req = parse_body(body);
    check_revision(req, s);
    auto commit = [&](AssessmentState next) {
      Session updated{s.id, std::move(next), s.created, utc_now(), s.revision + 1};
      if (store_) store_->persist(updated);
      s = std::move(updated);
    };

    if (action == "evidence") {
      if (!req.contains("findings")) throw Error(ErrorCode::kParse, "missing field 'findings'", "body");
      const auto findings = json_io::findings_from_json(net, req["findings"]);
      const auto sorted = sort_findings(st, findings);
      auto [next, delta] = integrate(st, findings);
      const json sorted_json = json_io::sorted_findings_to_json(net, sorted);
      const json delta_json = json_io::delta_to_json(net, delta);
      next.record("findings_sorted", {{"sorted", sorted_json}});
      commit(std::move(next));
      return reply(200, {{"revision", s.revision}, {"sorted", sorted_json}, {"delta", delta_json}});
    }
    if (action == "invoke") {
      if (!req.contains("source_id") || !req["source_id"].is_string()) {
        throw Error(ErrorCode::kParse, "missing string field 'source_id'", "body");
      }
      auto [next, pending] = invoke_source(st, req["source_id"].get<std::string>());
      commit(std::move(next));
      return reply(200, {{"revision", s.revision},
                         {"source_id", req["source_id"]},
                         {"awaiting", pending},
                         {"spent", s.state.spent},
                         {"queries", s.state.queries}});
    }
    if (action == "commit") {
      const CommitmentReport report = compose_commitment(st);
      const json report_json = json_io::commitment_to_json(net, report);
      AssessmentState next = st;
      next.record("commitment", report_json);
      commit(std::move(next));
      return reply(200, {{"revision", s.revision}, {"report", report_json}});
    }
    return error_reply(404, "ERR_NOT_FOUND", "no such endpoint");
  } catch (const Error& e) {
    return error_reply(e);
  } catch (const std::exception& e) {
    return error_reply(500, "ERR_INTERNAL", e.what());
  }
}

}  // namespace evr::service
