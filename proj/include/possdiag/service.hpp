#pragma once

#include "possdiag/session.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

namespace httplib {
class Server;
}

namespace possdiag {

struct ServiceConfig {
  std::filesystem::path models_dir;
  std::optional<std::filesystem::path> journal_dir; // one <session>.jsonl per session
};

/// HTTP/JSON front end over a set of live sessions. Mutations of one session
/// are serialized; readers see whole revisions only.
class Service {
public:
  /// Throws std::runtime_error when a configured directory is unusable.
  explicit Service(ServiceConfig config);
  ~Service();

  void install(httplib::Server &server);

  std::vector<std::string> model_names() const;

private:
  struct Live {
    mutable std::shared_mutex mutex;
    std::optional<Session> session;
  };

  std::shared_ptr<Live> find(const std::string &id) const;
  std::string next_id();

  ServiceConfig config_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Live>> sessions_;
  std::uint64_t counter_ = 0;
};

/// Blocks serving on host:port until the process is stopped. Throws
/// std::runtime_error when the address cannot be bound.
void run_service(const ServiceConfig &config, const std::string &host, int port);

/// Splits "host:port" (or ":port", or "port").
std::pair<std::string, int> parse_listen_address(const std::string &addr);

} // namespace possdiag
