#pragma once

#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "relumo/decompose.hpp"
#include "relumo/decomposition.hpp"
#include "relumo/image.hpp"

namespace httplib {
class Server;
}

namespace relumo {

struct ServiceOptions {
  std::filesystem::path storage;  // one sub-directory per session
  OptimizerConfig config = single_view_config();
  std::size_t max_pixels = std::size_t{1} << 22;
};

enum class SessionState { Running, Ready, Failed };
std::string_view to_string(SessionState s);

struct SessionInfo {
  std::string id;
  SessionState state = SessionState::Running;
  std::string error;
  std::shared_ptr<const Decomposition> decomposition;  // set once Ready
  std::filesystem::path directory;
};

// Sessions are created once and never modified afterwards, apart from the
// single Running -> Ready/Failed transition made by their decomposition job.
class SessionStore {
 public:
  explicit SessionStore(ServiceOptions options);
  ~SessionStore();
  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  // Starts the decomposition on a worker thread and returns the new id.
  std::string create(Image image, Mask mask);
  // Registers an existing decomposition (persisted like any other session).
  std::string create_ready(const Decomposition& d);

  std::optional<SessionInfo> find(const std::string& id) const;
  // Blocks until the session leaves the Running state.
  std::optional<SessionInfo> wait(const std::string& id) const;
  const ServiceOptions& options() const { return options_; }

 private:
  std::string next_id();
  void finish(const std::string& id, std::shared_ptr<const Decomposition> d,
              std::string error);

  ServiceOptions options_;
  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::map<std::string, SessionInfo> sessions_;
  std::vector<std::thread> workers_;
  std::mt19937_64 rng_;
  std::uint64_t counter_ = 0;
};

struct LightingPreset {
  std::string name;
  ShLighting lighting;
};
std::vector<LightingPreset> lighting_presets();

// HTTP front end over a SessionStore:
//   POST /sessions                               multipart image (+ mask)
//   GET  /sessions/{id}                          status
//   GET  /sessions/{id}/lighting                 lighting.json
//   GET  /sessions/{id}/decomposition/{layer}    8-bit PNG preview
//   POST /sessions/{id}/relight                  JSON -> PNG
//   POST /sessions/{id}/relight-envmap           multipart envmap (+ align, options)
//   GET  /presets
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();

  // Binds to a free port on `host` and returns it.
  int bind_any_port(const std::string& host = "127.0.0.1");
  bool bind(const std::string& host, int port);
  // Serves until stop(); call after a successful bind.
  bool listen();
  void stop();
  void wait_until_ready() const;
  SessionStore& store() { return store_; }

 private:
  void install_routes();

  SessionStore store_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace relumo
