#include "possdiag/service.hpp"

#include <httplib.h>

#include <fstream>
#include <mutex>
#include <sstream>

namespace possdiag {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path &p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void reply(httplib::Response &res, int status, const json &body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json error_body(const std::string &message, const std::vector<Diagnostic> &diags = {}) {
  json j{{"error", message}};
  if (!diags.empty()) {
    j["diagnostics"] = json::array();
    for (const auto &d : diags)
      j["diagnostics"].push_back(
          {{"file", d.span.file}, {"line", d.span.line}, {"column", d.span.column}, {"message", d.message}});
  }
  return j;
}

json parse_body(const httplib::Request &req) {
  auto j = json::parse(req.body.empty() ? std::string("{}") : req.body);
  if (!j.is_object()) throw SessionError("request body must be a JSON object");
  return j;
}

std::string required(const json &body, const char *field) {
  if (!body.contains(field) || !body[field].is_string())
    throw SessionError(std::string("missing string field '") + field + "'");
  return body[field].get<std::string>();
}

ObsPolarity polarity_of(const json &body) {
  const auto p = body.value("polarity", std::string("present"));
  if (p == "present") return ObsPolarity::present;
  if (p == "absent") return ObsPolarity::absent;
  throw SessionError("polarity must be 'present' or 'absent', not '" + p + "'");
}

bool valid_model_name(const std::string &name) {
  return !name.empty() && name.find_first_of("/\\") == std::string::npos && name != "." && name != "..";
}

} // namespace

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  std::error_code ec;
  if (!std::filesystem::is_directory(config_.models_dir, ec))
    throw std::runtime_error("model directory " + config_.models_dir.string() + " is not readable");
  if (config_.journal_dir) {
    std::filesystem::create_directories(*config_.journal_dir, ec);
    if (!std::filesystem::is_directory(*config_.journal_dir))
      throw std::runtime_error("journal directory " + config_.journal_dir->string() + " cannot be created");
  }
}

Service::~Service() = default;

std::vector<std::string> Service::model_names() const {
  std::vector<std::string> names;
  for (const auto &entry : std::filesystem::directory_iterator(config_.models_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pdm") names.push_back(entry.path().stem().string());
  std::sort(names.begin(), names.end());
  return names;
}

std::shared_ptr<Service::Live> Service::find(const std::string &id) const {
  std::shared_lock lock(mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::string Service::next_id() {
  std::unique_lock lock(mutex_);
  return "s" + std::to_string(++counter_);
}

void Service::install(httplib::Server &server) {
  // Every handler maps library errors onto HTTP statuses the same way.
  auto guarded = [](auto handler) {
    return [handler](const httplib::Request &req, httplib::Response &res) {
      try {
        handler(req, res);
      } catch (const ConflictError &e) {
        reply(res, 409, error_body(e.what()));
      } catch (const SessionError &e) {
        reply(res, 400, error_body(e.what(), e.diagnostics));
      } catch (const json::exception &e) {
        reply(res, 400, error_body(std::string("bad JSON: ") + e.what()));
      } catch (const std::exception &e) {
        reply(res, 500, error_body(e.what()));
      }
    };
  };

  auto with_session = [this](const httplib::Request &req, httplib::Response &res) -> std::shared_ptr<Live> {
    auto live = find(req.matches[1]);
    if (!live) reply(res, 404, error_body("unknown session '" + std::string(req.matches[1]) + "'"));
    return live;
  };

  server.Post("/sessions", guarded([this](const httplib::Request &req, httplib::Response &res) {
    const auto body = parse_body(req);
    std::string model_text;
    if (body.contains("model_name")) {
      const auto name = required(body, "model_name");
      const auto path = config_.models_dir / (name + ".pdm");
      if (!valid_model_name(name) || !std::filesystem::is_regular_file(path))
        return reply(res, 404, error_body("unknown model '" + name + "'"));
      model_text = read_file(path);
    } else {
      model_text = required(body, "model");
    }
    const auto obs_text = body.value("observations", std::string());
    const auto id = next_id();
    Session::JournalSink sink;
    if (config_.journal_dir) {
      auto file = std::make_shared<std::ofstream>(*config_.journal_dir / (id + ".jsonl"), std::ios::trunc);
      sink = [file](const std::string &line) {
        *file << line << '\n';
        file->flush();
        if (!*file) throw std::runtime_error("journal write failed");
      };
    }
    auto live = std::make_shared<Live>();
    live->session.emplace(Session::create(model_text, obs_text, id, std::move(sink)));
    {
      std::unique_lock lock(mutex_);
      sessions_[id] = live;
    }
    reply(res, 201, {{"session_id", id}, {"revision", live->session->revision()}});
  }));

  server.Get(R"(/sessions/([^/]+)/board)", guarded([=](const httplib::Request &req, httplib::Response &res) {
    auto live = with_session(req, res);
    if (!live) return;
    std::shared_lock lock(live->mutex);
    const auto &s = *live->session;
    auto j = board_json(s.scale(), s.board());
    j["session_id"] = s.id();
    j["changed"] = true;
    if (req.has_param("revision")) {
      std::int64_t seen = 0;
      try {
        seen = std::stoll(req.get_param_value("revision"));
      } catch (const std::exception &) {
        throw SessionError("revision must be an integer");
      }
      j["changed"] = seen != s.revision();
    }
    reply(res, 200, j);
  }));

  server.Get(R"(/sessions/([^/]+)/probes)", guarded([=](const httplib::Request &req, httplib::Response &res) {
    auto live = with_session(req, res);
    if (!live) return;
    std::shared_lock lock(live->mutex);
    const auto &s = *live->session;
    reply(res, 200, {{"session_id", s.id()}, {"revision", s.revision()}, {"probes", probes_json(s.scale(), s.board().probes)}});
  }));

  server.Post(R"(/sessions/([^/]+)/observations)", guarded([=](const httplib::Request &req, httplib::Response &res) {
    auto live = with_session(req, res);
    if (!live) return;
    const auto body = parse_body(req);
    std::unique_lock lock(live->mutex);
    auto &s = *live->session;
    if (body.contains("revision") && body["revision"].get<std::int64_t>() != s.revision())
      throw ConflictError("stale revision " + body["revision"].dump() + "; current is " + std::to_string(s.revision()));
    const auto e = make_observation(s.problem().model, required(body, "component"), required(body, "output"),
                                    required(body, "state"), polarity_of(body), required(body, "level"));
    const bool accepted = s.add_observation(e);
    auto j = board_json(s.scale(), s.board());
    j["session_id"] = s.id();
    j["changed"] = accepted;
    reply(res, 200, j);
  }));

  server.Post(R"(/sessions/([^/]+)/whatif)", guarded([=](const httplib::Request &req, httplib::Response &res) {
    auto live = with_session(req, res);
    if (!live) return;
    const auto body = parse_body(req);
    std::shared_lock lock(live->mutex);
    const auto &s = *live->session;
    const auto e = make_observation(s.problem().model, required(body, "component"), required(body, "output"),
                                    required(body, "state"), polarity_of(body), required(body, "level"));
    auto j = board_json(s.scale(), s.what_if(e));
    j["session_id"] = s.id();
    j["hypothetical"] = true;
    j["observation"] = describe_observation(s.scale(), e);
    reply(res, 200, j);
  }));

  server.Post(R"(/sessions/([^/]+)/verdicts)", guarded([=](const httplib::Request &req, httplib::Response &res) {
    auto live = with_session(req, res);
    if (!live) return;
    const auto body = parse_body(req);
    std::unique_lock lock(live->mutex);
    auto &s = *live->session;
    s.add_verdict(required(body, "hypothesis"), body.value("verdict", std::string("rejected")),
                  body.value("note", std::string()));
    auto j = board_json(s.scale(), s.board());
    j["session_id"] = s.id();
    reply(res, 200, j);
  }));

  server.Get(R"(/sessions/([^/]+)/journal)", guarded([=](const httplib::Request &req, httplib::Response &res) {
    auto live = with_session(req, res);
    if (!live) return;
    std::shared_lock lock(live->mutex);
    json events = json::array();
    for (const auto &line : live->session->journal()) events.push_back(json::parse(line));
    reply(res, 200, {{"session_id", live->session->id()}, {"revision", live->session->revision()}, {"events", events}});
  }));

  server.Get("/models", guarded([this](const httplib::Request &, httplib::Response &res) {
    reply(res, 200, {{"models", model_names()}});
  }));

  server.Get(R"(/models/([^/]+)/topology)", guarded([this](const httplib::Request &req, httplib::Response &res) {
    const std::string name = req.matches[1];
    const auto path = config_.models_dir / (name + ".pdm");
    if (!valid_model_name(name) || !std::filesystem::is_regular_file(path))
      return reply(res, 404, error_body("unknown model '" + name + "'"));
    auto parsed = parse_model(read_file(path), path.filename().string());
    if (!parsed.ok()) return reply(res, 422, error_body("model does not parse", parsed.errors));
    reply(res, 200, topology_json(name, *parsed.model));
  }));
}

std::pair<std::string, int> parse_listen_address(const std::string &addr) {
  const auto colon = addr.rfind(':');
  std::string host = colon == std::string::npos ? "127.0.0.1" : addr.substr(0, colon);
  const std::string port = colon == std::string::npos ? addr : addr.substr(colon + 1);
  if (host.empty()) host = "0.0.0.0";
  try {
    std::size_t used = 0;
    const int p = std::stoi(port, &used);
    if (used != port.size() || p < 0 || p > 65535) throw std::invalid_argument(port);
    return {host, p};
  } catch (const std::exception &) {
    throw std::runtime_error("invalid listen address '" + addr + "'");
  }
}

void run_service(const ServiceConfig &config, const std::string &host, int port) {
  Service service(config);
  httplib::Server server;
  service.install(server);
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (!server.bind_to_port(host, port))
    throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port) + " (port busy?)");
  server.listen_after_bind();
}

} // namespace possdiag
